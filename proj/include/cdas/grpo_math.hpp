#pragma once

#include "cdas/scheduler_core.hpp"

#include <span>
#include <vector>

namespace cdas {

struct RolloutGroup {
    ProblemId problem_id{};
    std::vector<double> rewards;  // one binary reward per rollout
};

struct GroupAdvantages {
    std::vector<double> advantages;
    bool zero_gradient = false;
};

/// Rule-based reward: 1 for an equivalent answer, 0 otherwise. No format term.
constexpr double rule_reward(bool correct) noexcept { return correct ? 1.0 : 0.0; }

double pass_rate(std::span<const double> rewards);

/// (r_i - mean) / std with the population standard deviation. A group whose
/// rewards are all equal carries no gradient: its advantages are all zero and
/// zero_gradient is set. Groups of fewer than two rollouts are a DomainError.
GroupAdvantages group_advantages(const RolloutGroup& group);

}  // namespace cdas
