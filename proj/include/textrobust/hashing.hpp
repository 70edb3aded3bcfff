#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace textrobust {

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a64(s.data(), s.size(), h);
}

namespace detail {

inline std::uint64_t hash_field(std::uint64_t h, std::string_view s) {
    h = fnv1a64(s, h);
    const unsigned char sep = 0x1f;
    return fnv1a64(&sep, 1, h);
}

inline std::uint64_t hash_field(std::uint64_t h, std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    return fnv1a64(bytes, 8, h);
}

}  // namespace detail

// Stable seed fan-out: stable_hash(seed, "stage", example_id, index, ...).
// Field separators keep ("ab","c") and ("a","bc") distinct.
template <typename... Parts>
std::uint64_t stable_hash(std::uint64_t seed, Parts&&... parts) {
    std::uint64_t h = detail::hash_field(0xcbf29ce484222325ULL, seed);
    ((h = detail::hash_field(h, std::forward<Parts>(parts))), ...);
    return h;
}

// 16-hex-digit FNV-1a digest used for config hashes and artifact checksums
std::string checksum_hex(std::string_view content);
std::string file_checksum(const std::string& path);

}  // namespace textrobust
