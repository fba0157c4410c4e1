#include "cdas/sim_learner.hpp"

#include "cdas/errors.hpp"
#include "cdas/hash.hpp"
#include "cdas/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace cdas {

namespace {

constexpr std::uint64_t kBankStream = 0xB4A4;
constexpr std::uint64_t kLearnerStream = 0x1EA2;

}  // namespace

std::string_view to_string(BankDistribution d) {
    return d == BankDistribution::Normal ? "normal" : "levels";
}

BankDistribution bank_distribution_from_string(std::string_view name) {
    if (name == "normal") {
        return BankDistribution::Normal;
    }
    if (name == "levels") {
        return BankDistribution::Levels;
    }
    throw ConfigError(fmt::format("unknown bank distribution '{}'", name), "bank_distribution");
}

ProblemBank generate_bank(const BankParams& params, std::uint64_t seed) {
    if (params.n_problems == 0) {
        throw ConfigError("bank needs at least one problem", "n_problems");
    }
    if (!(params.sd > 0.0) || !std::isfinite(params.mean)) {
        throw ConfigError("bank spread must be positive and its mean finite", "bank_sd");
    }
    ProblemBank bank;
    bank.params = params;
    bank.seed = seed;
    bank.problems.resize(params.n_problems);

    Rng rng = Rng::derive(seed, kBankStream);
    for (std::size_t i = 0; i < params.n_problems; ++i) {
        auto& p = bank.problems[i];
        p.id = ProblemId{static_cast<std::uint32_t>(i)};
        if (params.distribution == BankDistribution::Normal) {
            p.true_difficulty = std::normal_distribution<double>(params.mean, params.sd)(rng.engine());
        } else {
            const int level = 1 + static_cast<int>(rng.index(5));
            p.true_difficulty = params.mean + params.sd * static_cast<double>(level - 3);
            if (params.level_tags) {
                p.level_tag = level;
            }
        }
    }

    if (params.distribution == BankDistribution::Normal && params.level_tags) {
        std::vector<std::size_t> order(params.n_problems);
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return *bank.problems[a].true_difficulty < *bank.problems[b].true_difficulty;
        });
        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            bank.problems[order[rank]].level_tag =
                1 + static_cast<int>((5 * rank) / params.n_problems);
        }
    }
    return bank;
}

nlohmann::json ProblemBank::to_json() const {
    return nlohmann::json{
        {"seed", seed},
        {"n_problems", params.n_problems},
        {"distribution", to_string(params.distribution)},
        {"mean", params.mean},
        {"sd", params.sd},
        {"level_tags", params.level_tags},
        {"problems", problems},
    };
}

ProblemBank ProblemBank::from_json(const nlohmann::json& j) {
    ProblemBank bank;
    bank.seed = j.at("seed").get<std::uint64_t>();
    bank.params.n_problems = j.at("n_problems").get<std::size_t>();
    bank.params.distribution = bank_distribution_from_string(j.at("distribution").get<std::string>());
    bank.params.mean = j.at("mean").get<double>();
    bank.params.sd = j.at("sd").get<double>();
    bank.params.level_tags = j.at("level_tags").get<bool>();
    bank.problems = j.at("problems").get<std::vector<ProblemRecord>>();
    if (bank.problems.size() != bank.params.n_problems) {
        throw ConfigError("bank file problem count does not match n_problems", "bank_file");
    }
    for (const auto& p : bank.problems) {
        if (!p.true_difficulty) {
            throw ConfigError(
                fmt::format("bank problem {} has no latent difficulty", to_underlying(p.id)),
                "bank_file");
        }
    }
    return bank;
}

std::uint64_t ProblemBank::hash() const {
    return fnv1a(to_json().dump());
}

double difficulty_quantile(const ProblemBank& bank, double q) {
    std::vector<double> b;
    b.reserve(bank.problems.size());
    for (const auto& p : bank.problems) {
        b.push_back(p.true_difficulty.value_or(0.0));
    }
    if (b.empty()) {
        throw DomainError("quantile of an empty bank");
    }
    std::sort(b.begin(), b.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(b.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, b.size() - 1);
    return b[lo] + (pos - static_cast<double>(lo)) * (b[hi] - b[lo]);
}

LearnerState make_learner(const LearnerParams& params, const ProblemBank& bank,
                          std::uint64_t seed) {
    if (!(params.discrimination > 0.0)) {
        throw ConfigError("discrimination must be positive", "discrimination");
    }
    if (!(params.learn_rate >= 0.0)) {
        throw ConfigError("learn rate must be non-negative", "learn_rate");
    }
    if (params.rollouts < 2) {
        throw ConfigError("at least 2 rollouts per problem are needed", "rollouts");
    }
    LearnerState s;
    s.ability = params.initial_ability ? *params.initial_ability : difficulty_quantile(bank, 0.05);
    s.discrimination = params.discrimination;
    s.learn_rate = params.learn_rate;
    s.rollouts = params.rollouts;
    s.rng = Rng::derive(seed, kLearnerStream);
    return s;
}

double success_probability(const LearnerState& learner, double true_difficulty) {
    return sigmoid(learner.discrimination * (learner.ability - true_difficulty));
}

RolloutResult rollout(LearnerState& learner, const ProblemRecord& problem, std::uint64_t step) {
    if (!problem.true_difficulty) {
        throw DomainError(
            fmt::format("problem {} has no latent difficulty", to_underlying(problem.id)));
    }
    const double p = success_probability(learner, *problem.true_difficulty);
    RolloutResult out;
    out.group.problem_id = problem.id;
    out.group.rewards.reserve(static_cast<std::size_t>(learner.rollouts));
    for (int i = 0; i < learner.rollouts; ++i) {
        out.group.rewards.push_back(rule_reward(learner.rng.bernoulli(p)));
    }
    out.observation = {problem.id, pass_rate(out.group.rewards), step};
    return out;
}

void learn_step(LearnerState& learner, std::span<const BatchOutcome> batch) {
    if (batch.empty()) {
        throw DomainError("learn step needs a non-empty batch");
    }
    const auto useful = std::count_if(batch.begin(), batch.end(),
                                      [](const BatchOutcome& o) { return !o.zero_gradient; });
    learner.ability +=
        learner.learn_rate * (static_cast<double>(useful) / static_cast<double>(batch.size()));
}

double bank_zero_gradient_fraction(const LearnerState& learner, const ProblemBank& bank) {
    double sum = 0.0;
    for (const auto& p : bank.problems) {
        const double q = success_probability(learner, p.true_difficulty.value_or(0.0));
        sum += std::pow(q, learner.rollouts) + std::pow(1.0 - q, learner.rollouts);
    }
    return sum / static_cast<double>(bank.problems.size());
}

nlohmann::json LearnerState::snapshot() const {
    return nlohmann::json{{"ability", ability},     {"discrimination", discrimination},
                          {"learn_rate", learn_rate}, {"rollouts", rollouts},
                          {"rng", rng.serialize()}};
}

LearnerState LearnerState::restore(const nlohmann::json& j) {
    LearnerState s;
    s.ability = j.at("ability").get<double>();
    s.discrimination = j.at("discrimination").get<double>();
    s.learn_rate = j.at("learn_rate").get<double>();
    s.rollouts = j.at("rollouts").get<int>();
    s.rng = Rng::deserialize(j.at("rng").get<std::string>());
    return s;
}

}  // namespace cdas
