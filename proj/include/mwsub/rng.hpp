#pragma once

#include <cstdint>
#include <string_view>

namespace mwsub::rng {

/// Counter-based random numbers: every variate is a pure function of a
/// 64-bit stream key and a 64-bit counter, so draws can be evaluated in
/// any order (or in parallel) and still reproduce bit-for-bit.
///
/// The generator is the splitmix64 output function applied to
/// key + (counter+1) * golden gamma; it passes BigCrush and is the
/// standard choice for keyed, indexable streams.

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

/// Raw 64-bit word at position `counter` of the stream `key`.
inline std::uint64_t word(std::uint64_t key, std::uint64_t counter) {
    return mix64(key + (counter + 1) * kGolden);
}

/// Derive an independent sub-stream key from a parent key and a tag.
inline std::uint64_t derive(std::uint64_t key, std::uint64_t tag) {
    return mix64(key ^ mix64(tag + kGolden));
}

/// Tag helper for named streams ("alpha", "mask", ...): FNV-1a over bytes.
inline std::uint64_t tag(std::string_view name) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

inline std::uint64_t derive(std::uint64_t key, std::string_view name) {
    return derive(key, tag(name));
}

/// Uniform draw strictly inside (0, 1); 53 significant bits.
inline double uniform01(std::uint64_t key, std::uint64_t counter) {
    return (static_cast<double>(word(key, counter) >> 11) + 0.5) * 0x1.0p-53;
}

/// Quantile function of the standard normal distribution (Wichura's
/// AS 241 PPND16 rational approximations, accurate to ~1e-16).
double normal_quantile(double prob);

/// Standard normal draw at position `counter` of stream `key`.
inline double normal(std::uint64_t key, std::uint64_t counter) {
    return normal_quantile(uniform01(key, counter));
}

}  // namespace mwsub::rng
