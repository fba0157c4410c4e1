#pragma once

#include "cdas/baseline_samplers.hpp"
#include "cdas/cdas_sampler.hpp"
#include "cdas/config.hpp"
#include "cdas/metrics.hpp"
#include "cdas/sim_learner.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace cdas {

inline constexpr int kCheckpointVersion = 1;

/// Loads the bank named by the config or generates it from the bank seed.
ProblemBank make_bank(const ExperimentConfig& config);

/// One sampler/learner pairing driven step by step.
///
/// Each step selects a batch, rolls every problem out on the synthetic
/// learner, derives group advantages, reports pass rates back to the sampler,
/// trains the learner once and appends a StepMetrics row. For baselines a
/// shadow difficulty ledger is kept so competence and sampled difficulty can
/// be reported for every strategy.
class Experiment {
public:
    explicit Experiment(ExperimentConfig config);
    Experiment(ExperimentConfig config, ProblemBank bank);

    bool finished() const noexcept { return metrics_.size() >= config_.total_steps; }
    std::uint64_t steps_done() const noexcept { return metrics_.size(); }

    const StepMetrics& step();
    void run_until(std::uint64_t step);
    void run_to_end() { run_until(config_.total_steps); }

    const ExperimentConfig& config() const noexcept { return config_; }
    /// The output path is not part of the config hash, so it may change on resume.
    void set_output_dir(std::string dir) { config_.out = std::move(dir); }
    const ProblemBank& bank() const noexcept { return bank_; }
    const LearnerState& learner() const noexcept { return learner_; }
    const std::vector<StepMetrics>& metrics() const noexcept { return metrics_; }

    const CdasSampler* cdas() const noexcept { return std::get_if<CdasSampler>(&sampler_); }
    const BaselineSampler* baseline() const noexcept {
        return std::get_if<BaselineSampler>(&sampler_);
    }
    /// Difficulty estimates driving the metrics: the CDAS sampler's own for
    /// CDAS, the shadow ledger otherwise.
    const DifficultyLedger& ledger() const noexcept;

    const std::vector<ProblemId>& last_batch() const noexcept { return last_batch_; }
    const std::vector<GroupOutcome>& last_groups() const noexcept { return last_groups_; }
    /// Latest observed pass rate per bank problem (indexed like bank().problems).
    const std::vector<std::optional<double>>& last_pass_rates() const noexcept {
        return last_pass_rate_;
    }
    /// Expected zero-gradient share of the whole bank for the learner at the
    /// start of each step.
    const std::vector<double>& bank_zero_gradient() const noexcept { return bank_zero_gradient_; }

    std::vector<DifficultyRow> difficulty_table() const;

    nlohmann::json checkpoint() const;
    /// Throws CheckpointError on a format/version/hash mismatch.
    static Experiment resume(const nlohmann::json& checkpoint);

    nlohmann::json summary() const;

private:
    Experiment() = default;
    void init_sampler();
    std::size_t bank_index(ProblemId id) const;

    ExperimentConfig config_;
    ProblemBank bank_;
    std::vector<std::size_t> bank_index_;  // id -> bank position
    LearnerState learner_;
    std::variant<std::monostate, CdasSampler, BaselineSampler> sampler_;
    DifficultyLedger shadow_;
    std::vector<StepMetrics> metrics_;
    std::vector<ProblemId> last_batch_;
    std::vector<GroupOutcome> last_groups_;
    std::vector<std::optional<double>> last_pass_rate_;
    std::vector<double> bank_zero_gradient_;
};

struct RunResult {
    ExperimentConfig config;
    std::vector<StepMetrics> metrics;
    nlohmann::json summary;
    nlohmann::json checkpoint;
};

/// Runs to completion (or to `stop_at`) and, when config.out is set, writes
/// metrics.csv, summary.json, checkpoint.json and problems.csv there.
RunResult run(const ExperimentConfig& config, std::optional<std::uint64_t> stop_at = std::nullopt);

/// Continues a checkpointed run to completion and writes the same outputs.
/// A checkpoint of a finished run is returned as is with notice = true.
struct ResumeResult {
    RunResult result;
    bool already_complete = false;
};
ResumeResult resume(const nlohmann::json& checkpoint, const std::string& out_dir = {});

/// Runs every config on one shared bank. All configs must agree on everything
/// except the strategy (and output path); otherwise ConfigError.
std::vector<RunResult> compare(std::span<const ExperimentConfig> configs);

/// compare() for each seed, one config per strategy; runs execute in parallel.
std::vector<RunResult> sweep(const ExperimentConfig& base, std::span<const Strategy> strategies,
                             std::span<const std::uint64_t> seeds);

void write_comparison_csv(const std::filesystem::path& path, std::span<const RunResult> runs);
void write_summary_csv(const std::filesystem::path& path, std::span<const RunResult> runs);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace cdas
