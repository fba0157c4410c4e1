#include "cdas/grpo_math.hpp"

#include "cdas/errors.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace cdas {

double pass_rate(std::span<const double> rewards) {
    if (rewards.empty()) {
        throw DomainError("pass rate of an empty rollout group is undefined");
    }
    double sum = 0.0;
    for (double r : rewards) {
        sum += r;
    }
    return sum / static_cast<double>(rewards.size());
}

GroupAdvantages group_advantages(const RolloutGroup& group) {
    const auto& r = group.rewards;
    if (r.size() < 2) {
        throw DomainError(fmt::format("group advantages need at least 2 rollouts, got {}", r.size()));
    }
    GroupAdvantages out;
    out.advantages.assign(r.size(), 0.0);
    if (std::all_of(r.begin(), r.end(), [&](double x) { return x == r.front(); })) {
        out.zero_gradient = true;
        return out;
    }
    const double mean = pass_rate(r);
    double ss = 0.0;
    for (double x : r) {
        ss += (x - mean) * (x - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(r.size()));
    for (std::size_t i = 0; i < r.size(); ++i) {
        out.advantages[i] = (r[i] - mean) / sd;
    }
    return out;
}

}  // namespace cdas
