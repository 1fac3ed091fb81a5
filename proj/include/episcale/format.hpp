// Locale-independent number formatting and content digests for reproducible outputs.

#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

namespace episcale {

/// Formats a double with 6 significant digits (shortest form, '.' separator).
/// All CSV float cells go through here so outputs are byte-stable across runs.
inline std::string format_g6(double v) {
    if (v == 0.0) v = 0.0;  // normalize -0
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
    return std::string(buf, res.ptr);
}

/// FNV-1a 64-bit hash; cheap per-file digest for run manifests.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string fnv1a_hex(std::string_view bytes) {
    static const char* hex = "0123456789abcdef";
    std::uint64_t h = fnv1a64(bytes);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[std::size_t(i)] = hex[h & 0xf];
        h >>= 4;
    }
    return out;
}

}  // namespace episcale
