#include "cdas/metrics.hpp"

#include "cdas/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace cdas {

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    return ranks;
}

}  // namespace

StepMetrics summarize_step(std::span<const GroupOutcome> groups, const StepContext& context) {
    if (groups.empty()) {
        throw DomainError("cannot summarize an empty batch");
    }
    double reward = 0.0;
    std::size_t zero = 0;
    for (const auto& g : groups) {
        reward += g.pass_rate;
        zero += g.zero_gradient ? 1 : 0;
    }
    const auto n = static_cast<double>(groups.size());
    StepMetrics m;
    m.step = context.step;
    m.mean_reward = reward / n;
    m.zero_gradient_fraction = static_cast<double>(zero) / n;
    m.rollout_batches_consumed = context.rollout_batches_consumed;
    m.competence = context.competence;
    m.mean_sampled_difficulty = context.mean_sampled_difficulty;
    m.learner_ability = context.learner_ability;
    return m;
}

void write_metrics_row(std::ostream& out, std::string_view strategy, std::uint64_t seed,
                       const StepMetrics& m) {
    fmt::print(out, "{},{},{},{},{},{},{},{},{}\n", m.step, strategy, seed, m.mean_reward,
               m.zero_gradient_fraction, m.rollout_batches_consumed, m.competence,
               m.mean_sampled_difficulty, m.learner_ability);
}

void write_metrics_csv(std::ostream& out, std::string_view strategy, std::uint64_t seed,
                       std::span<const StepMetrics> rows) {
    out << kMetricsCsvHeader << '\n';
    for (const auto& m : rows) {
        write_metrics_row(out, strategy, seed, m);
    }
}

std::vector<DifficultyRow> difficulty_passrate_table(
    std::span<const ProblemRecord> records,
    std::span<const std::optional<double>> final_pass_rates) {
    if (records.size() != final_pass_rates.size()) {
        throw DomainError("pass-rate table does not line up with the records");
    }
    std::vector<DifficultyRow> rows;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].t == 0 || !final_pass_rates[i]) {
            continue;
        }
        rows.push_back({records[i].id, records[i].t, records[i].difficulty, *final_pass_rates[i]});
    }
    return rows;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw DomainError("spearman needs equally long samples");
    }
    if (x.size() < 2) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace cdas
