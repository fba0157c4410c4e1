#include "cdas/cdas_sampler.hpp"

#include "cdas/errors.hpp"
#include "cdas/serialization.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace cdas {

namespace {

constexpr std::uint64_t kSamplerStream = 0xCDA5;

struct Candidate {
    double alignment;
    ProblemId id;
};

bool by_alignment_then_id(const Candidate& a, const Candidate& b) {
    if (a.alignment != b.alignment) {
        return a.alignment < b.alignment;
    }
    return to_underlying(a.id) < to_underlying(b.id);
}

// Sorts the first k entries into place; the rest stay in unspecified order.
void take_lowest(std::vector<Candidate>& pool, std::size_t k) {
    k = std::min(k, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end(),
                      by_alignment_then_id);
}

void validate_batch_size(std::size_t batch_size, std::size_t pool, bool symmetric) {
    if (batch_size == 0) {
        throw ConfigError("batch size must be positive", "batch_size");
    }
    if (batch_size > pool) {
        throw ConfigError(
            fmt::format("batch size {} exceeds problem count {}", batch_size, pool), "batch_size");
    }
    if (symmetric && batch_size % 2 != 0) {
        throw ConfigError(fmt::format("symmetric sampling needs an even batch size, got {}",
                                      batch_size),
                          "batch_size");
    }
}

}  // namespace

std::vector<ProblemId> select_by_alignment(std::span<const ProblemRecord> records,
                                           double competence, std::size_t batch_size,
                                           bool symmetric) {
    validate_batch_size(batch_size, records.size(), symmetric);

    std::vector<ProblemId> batch;
    batch.reserve(batch_size);

    if (!symmetric) {
        std::vector<Candidate> pool;
        pool.reserve(records.size());
        for (const auto& r : records) {
            pool.push_back({alignment(competence, r.difficulty), r.id});
        }
        take_lowest(pool, batch_size);
        for (std::size_t i = 0; i < batch_size; ++i) {
            batch.push_back(pool[i].id);
        }
        return batch;
    }

    std::vector<Candidate> easier;
    std::vector<Candidate> harder;
    for (const auto& r : records) {
        Candidate c{alignment(competence, r.difficulty), r.id};
        if (r.difficulty > competence) {
            harder.push_back(c);
        } else {
            easier.push_back(c);
        }
    }

    const std::size_t half = batch_size / 2;
    const std::size_t from_easier_first = std::min(half, easier.size());
    const std::size_t from_harder_first = std::min(half, harder.size());
    // Whatever one side cannot supply comes from the other.
    const std::size_t from_easier = from_easier_first + (half - from_harder_first);
    const std::size_t from_harder = from_harder_first + (half - from_easier_first);

    take_lowest(easier, from_easier);
    take_lowest(harder, from_harder);
    for (std::size_t i = 0; i < from_easier; ++i) {
        batch.push_back(easier[i].id);
    }
    for (std::size_t i = 0; i < from_harder; ++i) {
        batch.push_back(harder[i].id);
    }
    return batch;
}

CdasSampler::CdasSampler(std::vector<ProblemRecord> records, std::size_t batch_size,
                         CdasOptions options, std::uint64_t seed)
    : options_(options), batch_size_(batch_size), rng_(Rng::derive(seed, kSamplerStream)) {
    for (auto& r : records) {
        r.true_difficulty.reset();
    }
    ledger_ = DifficultyLedger(std::move(records), options_.initial_difficulty);
    validate_batch_size(batch_size, ledger_.size(), options_.symmetric);

    warmup_order_.reserve(ledger_.size());
    for (const auto& r : ledger_.records()) {
        warmup_order_.push_back(r.id);
    }
    std::shuffle(warmup_order_.begin(), warmup_order_.end(), rng_.engine());

    const std::size_t n = ledger_.size();
    warmup_steps_ = options_.warmup ? (n + batch_size - 1) / batch_size : 0;
}

std::vector<ProblemId> CdasSampler::select_batch(std::size_t batch_size) {
    const std::size_t n = ledger_.size();
    validate_batch_size(batch_size, n, options_.symmetric);

    std::vector<ProblemId> batch;
    if (in_warmup()) {
        batch.reserve(batch_size);
        for (std::size_t i = 0; i < batch_size; ++i) {
            batch.push_back(warmup_order_[(warmup_cursor_ + i) % n]);
        }
        warmup_cursor_ = (warmup_cursor_ + batch_size) % n;
    } else {
        batch = select_by_alignment(ledger_.records(), ledger_.competence(), batch_size,
                                    options_.symmetric);
    }
    last_batch_ = batch;
    return batch;
}

void CdasSampler::report_outcomes(std::span<const PassRateObservation> outcomes) {
    std::unordered_set<std::uint32_t> selected;
    for (auto id : last_batch_) {
        selected.insert(to_underlying(id));
    }
    for (const auto& o : outcomes) {
        if (!ledger_.index_of(o.problem_id)) {
            throw ConsistencyError(
                fmt::format("outcome for unknown problem id {}", to_underlying(o.problem_id)));
        }
        if (!selected.contains(to_underlying(o.problem_id))) {
            throw ConsistencyError(fmt::format("problem id {} was not in the most recent batch",
                                               to_underlying(o.problem_id)));
        }
    }
    ledger_.observe(outcomes);
    last_batch_.clear();
}

nlohmann::json CdasSampler::snapshot() const {
    return nlohmann::json{
        {"kind", "cdas"},
        {"records", ledger_.records()},
        {"competence", ledger_.competence_state()},
        {"symmetric", options_.symmetric},
        {"warmup", options_.warmup},
        {"initial_difficulty", options_.initial_difficulty},
        {"batch_size", batch_size_},
        {"warmup_steps", warmup_steps_},
        {"warmup_cursor", warmup_cursor_},
        {"warmup_order", warmup_order_},
        {"last_batch", last_batch_},
        {"rng", rng_.serialize()},
    };
}

CdasSampler CdasSampler::restore(const nlohmann::json& snapshot) {
    if (snapshot.at("kind").get<std::string>() != "cdas") {
        throw CheckpointError("snapshot is not a CDAS sampler");
    }
    CdasSampler s;
    s.ledger_ = DifficultyLedger::restore(snapshot.at("records").get<std::vector<ProblemRecord>>(),
                                          snapshot.at("competence").get<CompetenceState>());
    s.options_.symmetric = snapshot.at("symmetric").get<bool>();
    s.options_.warmup = snapshot.at("warmup").get<bool>();
    s.options_.initial_difficulty = snapshot.at("initial_difficulty").get<double>();
    s.batch_size_ = snapshot.at("batch_size").get<std::size_t>();
    s.warmup_steps_ = snapshot.at("warmup_steps").get<std::uint64_t>();
    s.warmup_cursor_ = snapshot.at("warmup_cursor").get<std::size_t>();
    s.warmup_order_ = snapshot.at("warmup_order").get<std::vector<ProblemId>>();
    s.last_batch_ = snapshot.at("last_batch").get<std::vector<ProblemId>>();
    s.rng_ = Rng::deserialize(snapshot.at("rng").get<std::string>());
    return s;
}

}  // namespace cdas
