#pragma once

// Synthetic student used in place of a policy model. Each rollout succeeds
// with probability sigmoid(a * (ability - b_x)) where b_x is the problem's
// latent difficulty; the ability grows with the share of gradient-bearing
// problems in each trained batch.

#include "cdas/grpo_math.hpp"
#include "cdas/rng.hpp"
#include "cdas/scheduler_core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace cdas {

enum class BankDistribution { Normal, Levels };

std::string_view to_string(BankDistribution d);
BankDistribution bank_distribution_from_string(std::string_view name);

struct BankParams {
    std::size_t n_problems = 2000;
    BankDistribution distribution = BankDistribution::Normal;
    double mean = 0.0;
    double sd = 1.0;
    bool level_tags = true;  // quintile of b_x (Normal) or the drawn level (Levels)
};

struct ProblemBank {
    BankParams params;
    std::uint64_t seed = 0;
    std::vector<ProblemRecord> problems;  // ids 0..N-1, true_difficulty always set

    std::uint64_t hash() const;
    nlohmann::json to_json() const;
    static ProblemBank from_json(const nlohmann::json& j);
};

ProblemBank generate_bank(const BankParams& params, std::uint64_t seed);

struct LearnerParams {
    double discrimination = 1.0;
    double learn_rate = 0.05;
    int rollouts = 8;
    std::optional<double> initial_ability;  // default: 5th percentile of the bank
};

struct LearnerState {
    double ability = 0.0;
    double discrimination = 1.0;
    double learn_rate = 0.05;
    int rollouts = 8;
    Rng rng;

    nlohmann::json snapshot() const;
    static LearnerState restore(const nlohmann::json& j);
};

struct RolloutResult {
    PassRateObservation observation;
    RolloutGroup group;
};

struct BatchOutcome {
    double pass_rate = 0.0;
    bool zero_gradient = false;
};

/// Linear-interpolated quantile of the bank's latent difficulties.
double difficulty_quantile(const ProblemBank& bank, double q);

LearnerState make_learner(const LearnerParams& params, const ProblemBank& bank, std::uint64_t seed);

double success_probability(const LearnerState& learner, double true_difficulty);

/// Draws `rollouts` Bernoulli outcomes for one problem. Advances the learner's generator.
RolloutResult rollout(LearnerState& learner, const ProblemRecord& problem, std::uint64_t step = 0);

/// ability += learn_rate * (share of non-zero-gradient problems).
void learn_step(LearnerState& learner, std::span<const BatchOutcome> batch);

/// Expected share of the bank whose rollout group would come back all-0 or all-1.
double bank_zero_gradient_fraction(const LearnerState& learner, const ProblemBank& bank);

}  // namespace cdas
