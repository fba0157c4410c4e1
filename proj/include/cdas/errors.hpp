#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cdas {

/// Invalid numeric input to a pure operation (non-finite value, probability
/// outside [0,1], empty aggregate).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid configuration: batch larger than the pool, odd symmetric batch,
/// missing level tags. Carries the offending field name when known.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& message, std::string field = {})
        : std::invalid_argument(field.empty() ? message : field + ": " + message),
          field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Sampler bookkeeping violated: outcome for an unknown or unselected problem,
/// duplicate ids within one batch.
class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Fixed-point iteration ran out of iterations. Keeps the per-step deltas so
/// callers can inspect how far it got.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& message, std::vector<double> deltas)
        : std::runtime_error(message), deltas_(std::move(deltas)) {}

    const std::vector<double>& deltas() const noexcept { return deltas_; }

private:
    std::vector<double> deltas_;
};

/// Checkpoint cannot be resumed (version or config hash mismatch).
class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cdas
