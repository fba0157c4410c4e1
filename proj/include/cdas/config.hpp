#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

namespace cdas {

enum class Strategy { Cdas, Random, Curriculum, Prioritized, Dynamic };

std::string_view to_string(Strategy strategy);
/// Throws ConfigError for unknown names.
Strategy strategy_from_string(std::string_view name);

/// Desk-scale defaults: 2000 problems, batches of 128, 8 rollouts, 150 steps.
struct ExperimentConfig {
    std::size_t n_problems = 2000;
    std::size_t batch_size = 128;
    int rollouts = 8;
    std::uint64_t total_steps = 150;
    Strategy strategy = Strategy::Cdas;
    bool symmetric = true;
    bool warmup = true;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> bank_seed;  // falls back to seed

    std::string bank_distribution = "normal";
    double bank_mean = 0.0;
    double bank_sd = 1.0;
    bool level_tags = true;
    std::optional<std::string> bank_file;

    double discrimination = 1.0;
    double learn_rate = 0.05;
    std::optional<double> initial_ability;
    double initial_difficulty = 0.0;

    std::optional<std::uint64_t> curriculum_switch_step;  // falls back to total_steps / 2
    int curriculum_threshold = 4;
    std::size_t dynamic_retry_cap = 10;
    double prioritized_initial_weight = 1.0;

    std::string out;

    std::uint64_t effective_bank_seed() const { return bank_seed.value_or(seed); }
    std::uint64_t effective_switch_step() const {
        return curriculum_switch_step.value_or(total_steps / 2);
    }
    /// Length of one pass over the bank in batches.
    std::uint64_t epoch_steps() const {
        return batch_size == 0 ? 0 : (n_problems + batch_size - 1) / batch_size;
    }
};

/// Throws ConfigError naming the offending field.
void validate(const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentConfig& config);
/// Missing fields keep their defaults; unknown fields are a ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path);

/// Stable hash of every field except the output path.
std::string config_hash(const ExperimentConfig& config);

}  // namespace cdas
