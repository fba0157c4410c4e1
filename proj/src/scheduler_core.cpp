#include "cdas/scheduler_core.hpp"

#include "cdas/errors.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

#include <fmt/format.h>

namespace cdas {

namespace {

constexpr double kSaturation = 40.0;

void require_finite(double value, const char* what) {
    if (!std::isfinite(value)) {
        throw DomainError(fmt::format("{} must be finite, got {}", what, value));
    }
}

void require_probability(double value, const char* what) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw DomainError(fmt::format("{} must lie in [0,1], got {}", what, value));
    }
}

}  // namespace

double sigmoid(double z) {
    require_finite(z, "sigmoid argument");
    constexpr double kTop = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    if (z > kSaturation) {
        return kTop;
    }
    if (z < -kSaturation) {
        return std::exp(-kSaturation);
    }
    if (z >= 0.0) {
        return std::min(1.0 / (1.0 + std::exp(-z)), kTop);
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double expected_performance(double competence, double difficulty) {
    require_finite(competence, "competence");
    require_finite(difficulty, "difficulty");
    return sigmoid(competence - difficulty);
}

double instantaneous_difficulty(double competence, double difficulty, double pass_rate) {
    require_probability(pass_rate, "pass rate");
    return expected_performance(competence, difficulty) - pass_rate;
}

ProblemRecord update_difficulty(ProblemRecord record, double d_new) {
    if (!(d_new >= -1.0 && d_new <= 1.0)) {
        throw DomainError(fmt::format("instantaneous difficulty must lie in [-1,1], got {}", d_new));
    }
    record.t += 1;
    const auto t = static_cast<double>(record.t);
    record.difficulty = ((t - 1.0) / t) * record.difficulty + d_new / t;
    return record;
}

double update_competence(std::span<const ProblemRecord> records) {
    if (records.empty()) {
        throw DomainError("competence of an empty problem set is undefined");
    }
    double sum = 0.0;
    for (const auto& r : records) {
        sum += r.difficulty;
    }
    return -(sum / static_cast<double>(records.size()));
}

double alignment(double competence, double difficulty) {
    return std::abs(competence - difficulty);
}

DifficultyLedger::DifficultyLedger(std::vector<ProblemRecord> records, double initial_difficulty)
    : records_(std::move(records)) {
    if (records_.empty()) {
        throw DomainError("ledger needs at least one problem");
    }
    require_finite(initial_difficulty, "initial difficulty");
    for (auto& r : records_) {
        if (r.t == 0) {
            r.difficulty = initial_difficulty;
        }
        if (r.level_tag && (*r.level_tag < 1 || *r.level_tag > 5)) {
            throw ConfigError(fmt::format("problem {} has level tag {} outside 1..5",
                                          to_underlying(r.id), *r.level_tag),
                              "level_tag");
        }
    }
    build_index();
    competence_.competence = update_competence(records_);
    competence_.step = 0;
}

DifficultyLedger DifficultyLedger::restore(std::vector<ProblemRecord> records,
                                           CompetenceState competence) {
    DifficultyLedger ledger;
    ledger.records_ = std::move(records);
    ledger.competence_ = competence;
    ledger.build_index();
    return ledger;
}

void DifficultyLedger::build_index() {
    index_.clear();
    index_.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (!index_.emplace(to_underlying(records_[i].id), i).second) {
            throw ConsistencyError(
                fmt::format("problem id {} appears twice", to_underlying(records_[i].id)));
        }
    }
}

std::optional<std::size_t> DifficultyLedger::index_of(ProblemId id) const {
    auto it = index_.find(to_underlying(id));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const ProblemRecord& DifficultyLedger::record(ProblemId id) const {
    auto idx = index_of(id);
    if (!idx) {
        throw ConsistencyError(fmt::format("unknown problem id {}", to_underlying(id)));
    }
    return records_[*idx];
}

void DifficultyLedger::observe(std::span<const PassRateObservation> outcomes) {
    // Validate and score everything against the pre-batch state first.
    const double c_prev = competence_.competence;
    std::vector<std::pair<std::size_t, ProblemRecord>> updated;
    updated.reserve(outcomes.size());
    std::unordered_set<std::uint32_t> seen;
    for (const auto& o : outcomes) {
        auto idx = index_of(o.problem_id);
        if (!idx) {
            throw ConsistencyError(
                fmt::format("outcome for unknown problem id {}", to_underlying(o.problem_id)));
        }
        if (!seen.insert(to_underlying(o.problem_id)).second) {
            throw ConsistencyError(
                fmt::format("problem id {} reported twice in one batch", to_underlying(o.problem_id)));
        }
        const auto& rec = records_[*idx];
        const double d = instantaneous_difficulty(c_prev, rec.difficulty, o.pass_rate);
        updated.emplace_back(*idx, update_difficulty(rec, d));
    }
    for (auto& [idx, rec] : updated) {
        records_[idx] = std::move(rec);
    }
    competence_.competence = update_competence(records_);
    competence_.step += 1;
}

}  // namespace cdas
