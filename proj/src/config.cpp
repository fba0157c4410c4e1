#include "cdas/config.hpp"

#include "cdas/errors.hpp"
#include "cdas/hash.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace cdas {

namespace {

template <class T>
void read_field(const nlohmann::json& j, const char* name, T& target) {
    auto it = j.find(name);
    if (it == j.end()) {
        return;
    }
    try {
        target = it->get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("wrong type ({})", e.what()), name);
    }
}

template <class T>
void read_optional(const nlohmann::json& j, const char* name, std::optional<T>& target) {
    auto it = j.find(name);
    if (it == j.end()) {
        return;
    }
    if (it->is_null()) {
        target.reset();
        return;
    }
    T value{};
    read_field(j, name, value);
    target = value;
}

template <class T>
nlohmann::json optional_json(const std::optional<T>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string_view to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::Cdas: return "cdas";
        case Strategy::Random: return "random";
        case Strategy::Curriculum: return "curriculum";
        case Strategy::Prioritized: return "prioritized";
        case Strategy::Dynamic: return "dynamic";
    }
    return "unknown";
}

Strategy strategy_from_string(std::string_view name) {
    for (auto s : {Strategy::Cdas, Strategy::Random, Strategy::Curriculum, Strategy::Prioritized,
                   Strategy::Dynamic}) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw ConfigError(fmt::format("unknown strategy '{}'", name), "strategy");
}

void validate(const ExperimentConfig& c) {
    if (c.n_problems == 0) {
        throw ConfigError("must be positive", "n_problems");
    }
    if (c.batch_size == 0) {
        throw ConfigError("must be positive", "batch_size");
    }
    if (c.batch_size > c.n_problems) {
        throw ConfigError(
            fmt::format("batch size {} exceeds n_problems {}", c.batch_size, c.n_problems),
            "batch_size");
    }
    if (c.strategy == Strategy::Cdas && c.symmetric && c.batch_size % 2 != 0) {
        throw ConfigError("symmetric CDAS sampling needs an even batch size", "batch_size");
    }
    if (c.total_steps == 0) {
        throw ConfigError("must be at least 1", "total_steps");
    }
    if (c.rollouts < 2) {
        throw ConfigError("at least 2 rollouts per problem are needed", "rollouts");
    }
    if (c.bank_distribution != "normal" && c.bank_distribution != "levels") {
        throw ConfigError("must be 'normal' or 'levels'", "bank_distribution");
    }
    if (!(c.bank_sd > 0.0)) {
        throw ConfigError("must be positive", "bank_sd");
    }
    if (!(c.discrimination > 0.0)) {
        throw ConfigError("must be positive", "discrimination");
    }
    if (!(c.learn_rate >= 0.0)) {
        throw ConfigError("must be non-negative", "learn_rate");
    }
    if (c.curriculum_threshold < 1 || c.curriculum_threshold > 5) {
        throw ConfigError("must be a level in 1..5", "curriculum_threshold");
    }
    if (c.strategy == Strategy::Curriculum && !c.level_tags) {
        throw ConfigError("curriculum sampling needs level tags", "level_tags");
    }
    if (c.dynamic_retry_cap == 0) {
        throw ConfigError("must be at least 1", "dynamic_retry_cap");
    }
    if (!(c.prioritized_initial_weight >= 0.0)) {
        throw ConfigError("must be non-negative", "prioritized_initial_weight");
    }
}

nlohmann::json to_json(const ExperimentConfig& c) {
    return nlohmann::json{
        {"n_problems", c.n_problems},
        {"batch_size", c.batch_size},
        {"rollouts", c.rollouts},
        {"total_steps", c.total_steps},
        {"strategy", to_string(c.strategy)},
        {"symmetric", c.symmetric},
        {"warmup", c.warmup},
        {"seed", c.seed},
        {"bank_seed", optional_json(c.bank_seed)},
        {"bank_distribution", c.bank_distribution},
        {"bank_mean", c.bank_mean},
        {"bank_sd", c.bank_sd},
        {"level_tags", c.level_tags},
        {"bank_file", optional_json(c.bank_file)},
        {"discrimination", c.discrimination},
        {"learn_rate", c.learn_rate},
        {"initial_ability", optional_json(c.initial_ability)},
        {"initial_difficulty", c.initial_difficulty},
        {"curriculum_switch_step", optional_json(c.curriculum_switch_step)},
        {"curriculum_threshold", c.curriculum_threshold},
        {"dynamic_retry_cap", c.dynamic_retry_cap},
        {"prioritized_initial_weight", c.prioritized_initial_weight},
        {"out", c.out},
    };
}

ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig c) {
    if (!j.is_object()) {
        throw ConfigError("configuration must be a JSON object", "config");
    }
    const auto known = to_json(ExperimentConfig{});
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) {
            throw ConfigError("unknown configuration field", key);
        }
    }
    read_field(j, "n_problems", c.n_problems);
    read_field(j, "batch_size", c.batch_size);
    read_field(j, "rollouts", c.rollouts);
    read_field(j, "total_steps", c.total_steps);
    if (j.contains("strategy")) {
        std::string name;
        read_field(j, "strategy", name);
        c.strategy = strategy_from_string(name);
    }
    read_field(j, "symmetric", c.symmetric);
    read_field(j, "warmup", c.warmup);
    read_field(j, "seed", c.seed);
    read_optional(j, "bank_seed", c.bank_seed);
    read_field(j, "bank_distribution", c.bank_distribution);
    read_field(j, "bank_mean", c.bank_mean);
    read_field(j, "bank_sd", c.bank_sd);
    read_field(j, "level_tags", c.level_tags);
    read_optional(j, "bank_file", c.bank_file);
    read_field(j, "discrimination", c.discrimination);
    read_field(j, "learn_rate", c.learn_rate);
    read_optional(j, "initial_ability", c.initial_ability);
    read_field(j, "initial_difficulty", c.initial_difficulty);
    read_optional(j, "curriculum_switch_step", c.curriculum_switch_step);
    read_field(j, "curriculum_threshold", c.curriculum_threshold);
    read_field(j, "dynamic_retry_cap", c.dynamic_retry_cap);
    read_field(j, "prioritized_initial_weight", c.prioritized_initial_weight);
    read_field(j, "out", c.out);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("cannot open configuration file {}", path), "config");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(fmt::format("{} is not valid JSON: {}", path, e.what()), "config");
    }
    return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& config) {
    auto j = to_json(config);
    j.erase("out");
    return fmt::format("{:016x}", fnv1a(j.dump()));
}

}  // namespace cdas
