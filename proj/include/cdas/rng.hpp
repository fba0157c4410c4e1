#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>

namespace cdas {

/// Seedable generator whose full state round-trips through a string, so
/// sampler and learner snapshots resume bit-for-bit.
///
/// Distributions are constructed per draw; none of them carries hidden state
/// between calls (normal draws are never taken through this type mid-run).
class Rng {
public:
    Rng() : Rng(0) {}
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream for (seed, stream tag) pairs.
    static Rng derive(std::uint64_t seed, std::uint64_t stream);

    double uniform01();
    /// Uniform integer in [0, n). n must be positive.
    std::size_t index(std::size_t n);
    bool bernoulli(double p);

    std::mt19937_64& engine() noexcept { return engine_; }

    std::string serialize() const;
    static Rng deserialize(const std::string& state);

    friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace cdas
