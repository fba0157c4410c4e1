#pragma once

#include "cdas/rng.hpp"
#include "cdas/scheduler_core.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace cdas {

enum class BaselineStrategy { Random, Curriculum, Prioritized, Dynamic };

std::string_view to_string(BaselineStrategy strategy);

struct BaselineOptions {
    std::uint64_t curriculum_switch_step = 0;
    int curriculum_threshold = 4;
    double prioritized_initial_weight = 1.0;  // weight of never-seen problems
    std::size_t dynamic_retry_cap = 10;       // candidate rounds per step
};

struct DynamicSelection {
    std::vector<ProblemId> ids;                       // exactly batch_size entries
    std::vector<PassRateObservation> observations;    // qualifying rollout per id
    std::size_t total_rollout_batches = 0;            // rollout_fn invocations
    std::size_t padded = 0;                           // ids taken from filtered candidates
};

/// Comparison strategies sharing the sampler contract.
///
/// Random      uniform without replacement
/// Curriculum  uniform, restricted to level >= threshold from the switch step on
/// Prioritized sequential weighted draws, weight 1 - last pass rate
/// Dynamic     uniform candidates, rolled out one by one, keeping 0 < s < 1
class BaselineSampler {
public:
    using RolloutFn = std::function<PassRateObservation(ProblemId)>;

    BaselineSampler(std::vector<ProblemRecord> records, BaselineStrategy strategy,
                    BaselineOptions options, std::uint64_t seed);

    /// Dispatches to the strategy's selection rule. Dynamic needs a rollout
    /// function and must go through dynamic_select_and_filter instead.
    std::vector<ProblemId> select_batch(std::size_t batch_size);

    std::vector<ProblemId> random_select(std::size_t batch_size);
    std::vector<ProblemId> curriculum_select(std::size_t batch_size);
    std::vector<ProblemId> prioritized_select(std::size_t batch_size);
    DynamicSelection dynamic_select_and_filter(std::size_t batch_size, const RolloutFn& rollout_fn);

    void report_outcomes(std::span<const PassRateObservation> outcomes);

    /// Normalized probability of each problem being the next prioritized draw.
    std::vector<double> prioritized_weights() const;

    BaselineStrategy strategy() const noexcept { return strategy_; }
    const BaselineOptions& options() const noexcept { return options_; }
    std::uint64_t step() const noexcept { return step_; }
    const std::vector<ProblemRecord>& records() const noexcept { return records_; }
    const std::vector<std::optional<double>>& last_pass_rates() const noexcept {
        return last_pass_rate_;
    }
    std::optional<double> last_pass_rate(ProblemId id) const;
    /// Prioritized draws that had to fall back to uniform because every
    /// remaining weight was zero.
    std::uint64_t uniform_fallbacks() const noexcept { return uniform_fallbacks_; }

    nlohmann::json snapshot() const;
    static BaselineSampler restore(const nlohmann::json& snapshot);

private:
    BaselineSampler() = default;

    void build_index();

    std::size_t index_of(ProblemId id) const;
    std::vector<ProblemId> draw_uniform(std::vector<std::size_t> pool, std::size_t batch_size);

    std::vector<ProblemRecord> records_;
    std::unordered_map<std::uint32_t, std::size_t> index_;
    BaselineStrategy strategy_ = BaselineStrategy::Random;
    BaselineOptions options_;
    std::vector<std::optional<double>> last_pass_rate_;
    std::uint64_t step_ = 0;
    std::uint64_t uniform_fallbacks_ = 0;
    Rng rng_;
};

}  // namespace cdas
