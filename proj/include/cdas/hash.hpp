#pragma once

#include <cstdint>
#include <string_view>

namespace cdas {

/// 64-bit FNV-1a; used for config and bank fingerprints.
constexpr std::uint64_t fnv1a(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char ch : bytes) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace cdas
