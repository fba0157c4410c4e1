#pragma once

#include "cdas/scheduler_core.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace cdas {

struct GroupOutcome {
    ProblemId id{};
    double pass_rate = 0.0;
    bool zero_gradient = false;
};

struct StepMetrics {
    std::uint64_t step = 0;
    double mean_reward = 0.0;
    double zero_gradient_fraction = 0.0;
    std::size_t rollout_batches_consumed = 0;
    double competence = 0.0;
    double mean_sampled_difficulty = 0.0;
    double learner_ability = 0.0;

    friend bool operator==(const StepMetrics&, const StepMetrics&) = default;
};

/// Sampler/learner readings taken alongside a batch.
struct StepContext {
    std::uint64_t step = 0;
    std::size_t rollout_batches_consumed = 0;
    double competence = 0.0;               // after the batch was reported
    double mean_sampled_difficulty = 0.0;  // stored D of the batch at selection time
    double learner_ability = 0.0;
};

/// Throws DomainError for an empty batch.
StepMetrics summarize_step(std::span<const GroupOutcome> groups, const StepContext& context);

inline constexpr std::string_view kMetricsCsvHeader =
    "step,strategy,seed,mean_reward,zero_gradient_fraction,rollout_batches_consumed,"
    "competence,mean_sampled_difficulty,learner_ability";

void write_metrics_row(std::ostream& out, std::string_view strategy, std::uint64_t seed,
                       const StepMetrics& m);

void write_metrics_csv(std::ostream& out, std::string_view strategy, std::uint64_t seed,
                       std::span<const StepMetrics> rows);

struct DifficultyRow {
    ProblemId id{};
    std::uint64_t t = 0;
    double difficulty = 0.0;
    double final_pass_rate = 0.0;
};

/// One row per problem that has been sampled and has a recorded pass rate.
/// `final_pass_rates` is indexed like `records`.
std::vector<DifficultyRow> difficulty_passrate_table(
    std::span<const ProblemRecord> records,
    std::span<const std::optional<double>> final_pass_rates);

/// Spearman rank correlation using average ranks for ties. NaN when either
/// side has no spread.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace cdas
