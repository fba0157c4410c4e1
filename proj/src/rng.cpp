#include "cdas/rng.hpp"

#include "cdas/errors.hpp"

#include <sstream>

namespace cdas {

Rng Rng::derive(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    Rng rng;
    rng.engine_.seed(seq);
    return rng;
}

double Rng::uniform01() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) {
        throw DomainError("cannot draw an index from an empty range");
    }
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

bool Rng::bernoulli(double p) {
    return uniform01() < p;
}

std::string Rng::serialize() const {
    std::ostringstream out;
    out << engine_;
    return out.str();
}

Rng Rng::deserialize(const std::string& state) {
    Rng rng;
    std::istringstream in(state);
    in >> rng.engine_;
    if (in.fail()) {
        throw CheckpointError("malformed generator state");
    }
    return rng;
}

}  // namespace cdas
