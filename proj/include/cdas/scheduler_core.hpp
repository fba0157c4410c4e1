#pragma once

// Competence/difficulty bookkeeping shared by every sampler.
//
//   expected performance   p = sigmoid(C - D)
//   instantaneous diff.    d = p - s               (s = observed pass rate)
//   stable difficulty      D_t = ((t-1)/t) D_{t-1} + d / t
//   competence             C = -mean(D) over every managed problem
//   alignment              A = |C - D|

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace cdas {

enum class ProblemId : std::uint32_t {};

constexpr std::uint32_t to_underlying(ProblemId id) noexcept {
    return static_cast<std::uint32_t>(id);
}

struct ProblemRecord {
    ProblemId id{};
    std::optional<int> level_tag;           // 1..5 when present
    std::optional<double> true_difficulty;  // simulation only; samplers never read it
    std::uint64_t t = 0;                    // times sampled
    double difficulty = 0.0;
};

struct CompetenceState {
    double competence = 0.0;
    std::uint64_t step = 0;
};

struct PassRateObservation {
    ProblemId problem_id{};
    double pass_rate = 0.0;
    std::uint64_t step = 0;
};

/// Logistic function. Saturates at the largest double below 1 for large z so
/// the result stays strictly inside (0,1).
double sigmoid(double z);

double expected_performance(double competence, double difficulty);

/// Positive when the model did worse than its competence predicted.
double instantaneous_difficulty(double competence, double difficulty, double pass_rate);

/// Folds one more instantaneous difficulty into the running mean.
ProblemRecord update_difficulty(ProblemRecord record, double d_new);

/// Negative arithmetic mean of all stored difficulties, sampled or not.
double update_competence(std::span<const ProblemRecord> records);

double alignment(double competence, double difficulty);

/// Owns a problem set plus its competence and applies whole-batch updates:
/// every observation in a batch is scored against the same pre-batch
/// competence, then competence is recomputed once.
class DifficultyLedger {
public:
    DifficultyLedger() = default;
    explicit DifficultyLedger(std::vector<ProblemRecord> records, double initial_difficulty = 0.0);

    /// Throws ConsistencyError on unknown or repeated ids; DomainError on bad pass rates.
    /// Nothing is modified when an error is thrown.
    void observe(std::span<const PassRateObservation> outcomes);

    const std::vector<ProblemRecord>& records() const noexcept { return records_; }
    const CompetenceState& competence_state() const noexcept { return competence_; }
    double competence() const noexcept { return competence_.competence; }
    std::size_t size() const noexcept { return records_.size(); }

    std::optional<std::size_t> index_of(ProblemId id) const;
    const ProblemRecord& record(ProblemId id) const;

    /// Rebuilds from previously serialized parts; competence is taken as given.
    static DifficultyLedger restore(std::vector<ProblemRecord> records, CompetenceState competence);

private:
    void build_index();

    std::vector<ProblemRecord> records_;
    std::unordered_map<std::uint32_t, std::size_t> index_;
    CompetenceState competence_;
};

}  // namespace cdas
