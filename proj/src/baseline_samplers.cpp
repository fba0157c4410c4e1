#include "cdas/baseline_samplers.hpp"

#include "cdas/errors.hpp"
#include "cdas/serialization.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace cdas {

namespace {

constexpr std::uint64_t kBaselineStream = 0xBA5E;

void require_batch_fits(std::size_t batch_size, std::size_t pool, const char* what) {
    if (batch_size == 0) {
        throw ConfigError("batch size must be positive", "batch_size");
    }
    if (batch_size > pool) {
        throw ConfigError(fmt::format("batch size {} exceeds {} ({})", batch_size, what, pool),
                          "batch_size");
    }
}

BaselineStrategy strategy_from_string(const std::string& name) {
    for (auto s : {BaselineStrategy::Random, BaselineStrategy::Curriculum,
                   BaselineStrategy::Prioritized, BaselineStrategy::Dynamic}) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw CheckpointError(fmt::format("unknown baseline strategy '{}'", name));
}

}  // namespace

std::string_view to_string(BaselineStrategy strategy) {
    switch (strategy) {
        case BaselineStrategy::Random: return "random";
        case BaselineStrategy::Curriculum: return "curriculum";
        case BaselineStrategy::Prioritized: return "prioritized";
        case BaselineStrategy::Dynamic: return "dynamic";
    }
    return "unknown";
}

BaselineSampler::BaselineSampler(std::vector<ProblemRecord> records, BaselineStrategy strategy,
                                 BaselineOptions options, std::uint64_t seed)
    : records_(std::move(records)),
      strategy_(strategy),
      options_(options),
      last_pass_rate_(records_.size()),
      rng_(Rng::derive(seed, kBaselineStream)) {
    if (records_.empty()) {
        throw ConfigError("baseline sampler needs at least one problem", "n_problems");
    }
    for (auto& r : records_) {
        r.true_difficulty.reset();
    }
    if (strategy_ == BaselineStrategy::Curriculum) {
        for (const auto& r : records_) {
            if (!r.level_tag) {
                throw ConfigError(
                    fmt::format("curriculum sampling needs level tags; problem {} has none",
                                to_underlying(r.id)),
                    "level_tag");
            }
        }
    }
    build_index();
}

void BaselineSampler::build_index() {
    index_.clear();
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (!index_.emplace(to_underlying(records_[i].id), i).second) {
            throw ConsistencyError(
                fmt::format("problem id {} appears twice", to_underlying(records_[i].id)));
        }
    }
}

std::size_t BaselineSampler::index_of(ProblemId id) const {
    auto it = index_.find(to_underlying(id));
    if (it == index_.end()) {
        throw ConsistencyError(fmt::format("unknown problem id {}", to_underlying(id)));
    }
    return it->second;
}

std::optional<double> BaselineSampler::last_pass_rate(ProblemId id) const {
    return last_pass_rate_[index_of(id)];
}

// Partial Fisher-Yates over the given record indices.
std::vector<ProblemId> BaselineSampler::draw_uniform(std::vector<std::size_t> pool,
                                                     std::size_t batch_size) {
    std::vector<ProblemId> batch;
    batch.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
        const std::size_t j = i + rng_.index(pool.size() - i);
        std::swap(pool[i], pool[j]);
        batch.push_back(records_[pool[i]].id);
    }
    return batch;
}

std::vector<ProblemId> BaselineSampler::select_batch(std::size_t batch_size) {
    switch (strategy_) {
        case BaselineStrategy::Random: return random_select(batch_size);
        case BaselineStrategy::Curriculum: return curriculum_select(batch_size);
        case BaselineStrategy::Prioritized: return prioritized_select(batch_size);
        case BaselineStrategy::Dynamic:
            throw ConfigError("dynamic sampling selects through dynamic_select_and_filter",
                              "strategy");
    }
    throw ConfigError("unknown strategy", "strategy");
}

std::vector<ProblemId> BaselineSampler::random_select(std::size_t batch_size) {
    require_batch_fits(batch_size, records_.size(), "problem count");
    std::vector<std::size_t> pool(records_.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    return draw_uniform(std::move(pool), batch_size);
}

std::vector<ProblemId> BaselineSampler::curriculum_select(std::size_t batch_size) {
    std::vector<std::size_t> pool;
    pool.reserve(records_.size());
    const bool restricted = step_ >= options_.curriculum_switch_step;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& level = records_[i].level_tag;
        if (!level) {
            throw ConfigError(
                fmt::format("problem {} has no level tag", to_underlying(records_[i].id)),
                "level_tag");
        }
        if (!restricted || *level >= options_.curriculum_threshold) {
            pool.push_back(i);
        }
    }
    require_batch_fits(batch_size, pool.size(), "eligible curriculum pool");
    return draw_uniform(std::move(pool), batch_size);
}

std::vector<double> BaselineSampler::prioritized_weights() const {
    std::vector<double> w(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        w[i] = last_pass_rate_[i] ? 1.0 - *last_pass_rate_[i] : options_.prioritized_initial_weight;
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (total <= 0.0) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
    } else {
        for (auto& x : w) {
            x /= total;
        }
    }
    return w;
}

std::vector<ProblemId> BaselineSampler::prioritized_select(std::size_t batch_size) {
    require_batch_fits(batch_size, records_.size(), "problem count");

    std::vector<std::size_t> pool(records_.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::vector<double> weight(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        weight[i] = last_pass_rate_[i] ? 1.0 - *last_pass_rate_[i]
                                       : options_.prioritized_initial_weight;
    }

    std::vector<ProblemId> batch;
    batch.reserve(batch_size);
    bool fell_back = false;
    for (std::size_t k = 0; k < batch_size; ++k) {
        double total = 0.0;
        for (auto i : pool) {
            total += weight[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double u = rng_.uniform01() * total;
            double acc = 0.0;
            std::size_t last_positive = 0;
            bool found = false;
            for (std::size_t p = 0; p < pool.size(); ++p) {
                if (weight[pool[p]] <= 0.0) {
                    continue;
                }
                last_positive = p;
                acc += weight[pool[p]];
                if (u < acc) {
                    pick = p;
                    found = true;
                    break;
                }
            }
            if (!found) {
                pick = last_positive;  // u landed on the round-off sliver past the end
            }
        } else {
            pick = rng_.index(pool.size());
            fell_back = true;
        }
        batch.push_back(records_[pool[pick]].id);
        pool[pick] = pool.back();
        pool.pop_back();
    }
    if (fell_back) {
        ++uniform_fallbacks_;
    }
    return batch;
}

DynamicSelection BaselineSampler::dynamic_select_and_filter(std::size_t batch_size,
                                                            const RolloutFn& rollout_fn) {
    require_batch_fits(batch_size, records_.size(), "problem count");

    DynamicSelection out;
    std::vector<PassRateObservation> filtered;
    std::vector<bool> tried(records_.size(), false);

    for (std::size_t round = 0; round < options_.dynamic_retry_cap; ++round) {
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < records_.size(); ++i) {
            if (!tried[i]) {
                pool.push_back(i);
            }
        }
        if (pool.empty()) {
            break;
        }
        const std::size_t round_size = std::min(batch_size, pool.size());
        const auto candidates = draw_uniform(std::move(pool), round_size);
        for (auto id : candidates) {
            tried[index_of(id)] = true;
            PassRateObservation obs = rollout_fn(id);
            obs.problem_id = id;
            ++out.total_rollout_batches;
            if (obs.pass_rate > 0.0 && obs.pass_rate < 1.0) {
                out.ids.push_back(id);
                out.observations.push_back(obs);
                if (out.ids.size() == batch_size) {
                    return out;
                }
            } else {
                filtered.push_back(obs);
            }
        }
    }

    if (out.ids.empty()) {
        throw std::runtime_error(fmt::format(
            "dynamic sampling kept no problems after {} rollouts", out.total_rollout_batches));
    }
    // Pad with the most recently filtered candidates.
    for (auto it = filtered.rbegin(); it != filtered.rend() && out.ids.size() < batch_size; ++it) {
        out.ids.push_back(it->problem_id);
        out.observations.push_back(*it);
        ++out.padded;
    }
    return out;
}

void BaselineSampler::report_outcomes(std::span<const PassRateObservation> outcomes) {
    std::vector<std::size_t> idx;
    idx.reserve(outcomes.size());
    for (const auto& o : outcomes) {
        idx.push_back(index_of(o.problem_id));
        if (!(o.pass_rate >= 0.0 && o.pass_rate <= 1.0)) {
            throw DomainError(fmt::format("pass rate must lie in [0,1], got {}", o.pass_rate));
        }
    }
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
        last_pass_rate_[idx[k]] = outcomes[k].pass_rate;
    }
    ++step_;
}

nlohmann::json BaselineSampler::snapshot() const {
    nlohmann::json last = nlohmann::json::array();
    for (const auto& s : last_pass_rate_) {
        last.push_back(s ? nlohmann::json(*s) : nlohmann::json(nullptr));
    }
    return nlohmann::json{
        {"kind", "baseline"},
        {"strategy", to_string(strategy_)},
        {"records", records_},
        {"curriculum_switch_step", options_.curriculum_switch_step},
        {"curriculum_threshold", options_.curriculum_threshold},
        {"prioritized_initial_weight", options_.prioritized_initial_weight},
        {"dynamic_retry_cap", options_.dynamic_retry_cap},
        {"last_pass_rate", std::move(last)},
        {"step", step_},
        {"uniform_fallbacks", uniform_fallbacks_},
        {"rng", rng_.serialize()},
    };
}

BaselineSampler BaselineSampler::restore(const nlohmann::json& snapshot) {
    if (snapshot.at("kind").get<std::string>() != "baseline") {
        throw CheckpointError("snapshot is not a baseline sampler");
    }
    BaselineSampler s;
    s.strategy_ = strategy_from_string(snapshot.at("strategy").get<std::string>());
    s.records_ = snapshot.at("records").get<std::vector<ProblemRecord>>();
    s.options_.curriculum_switch_step = snapshot.at("curriculum_switch_step").get<std::uint64_t>();
    s.options_.curriculum_threshold = snapshot.at("curriculum_threshold").get<int>();
    s.options_.prioritized_initial_weight = snapshot.at("prioritized_initial_weight").get<double>();
    s.options_.dynamic_retry_cap = snapshot.at("dynamic_retry_cap").get<std::size_t>();
    for (const auto& v : snapshot.at("last_pass_rate")) {
        s.last_pass_rate_.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
    }
    if (s.last_pass_rate_.size() != s.records_.size()) {
        throw CheckpointError("baseline snapshot pass-rate table does not match its records");
    }
    s.step_ = snapshot.at("step").get<std::uint64_t>();
    s.uniform_fallbacks_ = snapshot.at("uniform_fallbacks").get<std::uint64_t>();
    s.rng_ = Rng::deserialize(snapshot.at("rng").get<std::string>());
    s.build_index();
    return s;
}

}  // namespace cdas
