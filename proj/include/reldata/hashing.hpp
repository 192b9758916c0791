#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace reldata {

inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

/// 64-bit FNV-1a over raw bytes.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t state = kFnvOffsetBasis) noexcept {
    for (unsigned char c : bytes) {
        state ^= c;
        state *= kFnvPrime;
    }
    return state;
}

/// 16 lowercase hex digits, zero padded.
std::string to_hex64(std::uint64_t value);

/// Hash of a file's bytes, rendered as hex. Throws DataError if unreadable.
std::string hash_file(const std::filesystem::path& path);

/// SplitMix64 generator. Every random draw in the library flows from one of
/// these, seeded from the run's master seed.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_{seed} {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) noexcept;

    /// Uniform double in [0, 1) with 53 random bits.
    double unit() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Single mixing step, used to derive per-record seeds.
    static std::uint64_t mix(std::uint64_t seed) noexcept { return SplitMix64{seed}.next(); }

private:
    std::uint64_t state_;
};

/// Per-record seed: SplitMix64(master XOR fnv1a64(key)).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view key) noexcept {
    return SplitMix64::mix(master ^ fnv1a64(key));
}

}  // namespace reldata
