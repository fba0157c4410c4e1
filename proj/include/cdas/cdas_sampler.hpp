#pragma once

#include "cdas/rng.hpp"
#include "cdas/scheduler_core.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace cdas {

/// Picks the batch whose difficulties sit closest to the competence.
///
/// Symmetric mode splits the pool into the harder side (D > C) and the easier
/// side (D <= C) and takes batch_size/2 lowest-alignment problems from each;
/// a side that runs short is topped up from the other. Otherwise the
/// batch_size globally lowest-alignment problems are taken. Ties are broken by
/// ascending id.
std::vector<ProblemId> select_by_alignment(std::span<const ProblemRecord> records,
                                           double competence, std::size_t batch_size,
                                           bool symmetric);

struct CdasOptions {
    bool symmetric = true;
    bool warmup = true;
    double initial_difficulty = 0.0;
};

/// Alignment-based sampler with a one-epoch warm-up.
///
/// During warm-up batches are consecutive chunks of a permutation fixed at
/// construction, so every problem has t >= 1 once ceil(N / batch_size) warm-up
/// batches have been reported. select_batch and report_outcomes must be
/// called alternately from one thread at a time.
class CdasSampler {
public:
    CdasSampler(std::vector<ProblemRecord> records, std::size_t batch_size, CdasOptions options,
                std::uint64_t seed);

    std::vector<ProblemId> select_batch(std::size_t batch_size);

    /// Every outcome must belong to the most recent batch. All outcomes are
    /// scored against the competence in force when the batch was selected.
    void report_outcomes(std::span<const PassRateObservation> outcomes);

    bool in_warmup() const noexcept { return step() < warmup_steps_; }
    std::uint64_t warmup_steps() const noexcept { return warmup_steps_; }
    std::uint64_t step() const noexcept { return ledger_.competence_state().step; }
    double competence() const noexcept { return ledger_.competence(); }
    bool symmetric() const noexcept { return options_.symmetric; }
    const CdasOptions& options() const noexcept { return options_; }
    const DifficultyLedger& ledger() const noexcept { return ledger_; }
    const std::vector<ProblemRecord>& records() const noexcept { return ledger_.records(); }
    const std::vector<ProblemId>& warmup_order() const noexcept { return warmup_order_; }
    const std::vector<ProblemId>& last_batch() const noexcept { return last_batch_; }

    nlohmann::json snapshot() const;
    static CdasSampler restore(const nlohmann::json& snapshot);

private:
    CdasSampler() = default;

    DifficultyLedger ledger_;
    CdasOptions options_;
    std::size_t batch_size_ = 0;
    std::uint64_t warmup_steps_ = 0;
    std::size_t warmup_cursor_ = 0;
    std::vector<ProblemId> warmup_order_;
    std::vector<ProblemId> last_batch_;
    Rng rng_;
};

}  // namespace cdas
