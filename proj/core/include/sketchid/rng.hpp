#pragma once

#include <cmath>
#include <cstdint>

namespace sketchid {

// All randomness in the library flows through the counter-based generator
// below so that results are reproducible from a single 64-bit seed,
// independent of platform and of how work is split across threads.

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

/// SplitMix64 finalizer: a bijective 64-bit avalanche.
constexpr std::uint64_t avalanche64(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

/// Derives an independent stream key from a master seed and two labels.
/// Defined as three chained avalanche rounds; documented so that any
/// implementation can reproduce per-worker and per-substream seeds.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept {
    std::uint64_t h = avalanche64(master + kGolden);
    h = avalanche64(h ^ (a + kGolden));
    h = avalanche64(h ^ (b + 0xD1B54A32D192ED03ull));
    return h;
}

/// Counter-based random stream: the k-th output is
/// avalanche64(key + k * kGolden), i.e. SplitMix64 seeded at `key`.
/// Gaussians use the Box-Muller transform (documented in next_gaussian),
/// so equal keys reproduce equal streams everywhere.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t key) noexcept : key_(key) {}

    std::uint64_t next_u64() noexcept {
        return avalanche64(key_ + (++counter_) * kGolden);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n); n must be positive.
    /// Multiply-shift reduction (bias < n / 2^64, negligible and deterministic).
    std::uint64_t next_below(std::uint64_t n) noexcept {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Uniform integer in the inclusive range [lo, hi].
    std::int64_t next_int(std::int64_t lo, std::int64_t hi) noexcept {
        return lo + static_cast<std::int64_t>(
                        next_below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    /// +1 or -1 with equal probability (top bit of the next output).
    double next_sign() noexcept {
        return (next_u64() >> 63) ? 1.0 : -1.0;
    }

    /// Standard normal via Box-Muller:
    ///   u1 = ((x >> 11) + 1) * 2^-53 in (0, 1],  u2 = (x >> 11) * 2^-53 in [0, 1)
    ///   z0 = sqrt(-2 ln u1) cos(2 pi u2),  z1 = sqrt(-2 ln u1) sin(2 pi u2)
    /// z1 is cached and returned by the following call.
    double next_gaussian() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 =
            static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = next_unit();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sketchid
