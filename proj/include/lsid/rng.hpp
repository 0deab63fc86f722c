#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace lsid {

namespace detail {

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace detail

/// Counter-based PRNG stream. The n-th output word is a pure function of
/// (master_seed, stream_id, n), so identical seeds replay bit-identically and
/// distinct stream_ids give decorrelated parallel streams with no shared
/// state. Value type: copy freely, but concurrent users must own distinct
/// stream_ids.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}

    explicit RngStream(std::uint64_t master_seed, std::uint64_t stream_id = 0)
        : master_seed_(master_seed),
          stream_id_(stream_id),
          key_(detail::mix64(master_seed + detail::kGolden) ^
               detail::mix64(stream_id ^ 0xda942042e4dd58b5ULL)) {}

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64() {
        ++counter_;
        return detail::mix64(key_ + counter_ * detail::kGolden);
    }

    /// Uniform draw in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform draw in (0, 1]; safe as a log() argument.
    double next_unit_open() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

private:
    std::uint64_t master_seed_ = 0;
    std::uint64_t stream_id_ = 0;
    std::uint64_t counter_ = 0;
    std::uint64_t key_ = 0;
};

/// d i.i.d. N(0, scale^2) draws via Box-Muller. Consumes exactly
/// 2*ceil(d/2) words of the stream regardless of scale, so counter
/// advancement is deterministic (scale = 0 still burns the words and
/// returns exact zeros).
inline std::vector<double> gaussian_vector(RngStream& rng, std::size_t d, double scale) {
    std::vector<double> out(d);
    constexpr double two_pi = 6.283185307179586476925286766559;
    for (std::size_t i = 0; i < d; i += 2) {
        const double u1 = rng.next_unit_open();
        const double u2 = rng.next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        out[i] = scale * r * std::cos(two_pi * u2);
        if (i + 1 < d) out[i + 1] = scale * r * std::sin(two_pi * u2);
    }
    return out;
}

inline double gaussian_scalar(RngStream& rng, double scale) {
    const double u1 = rng.next_unit_open();
    const double u2 = rng.next_unit();
    return scale * std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace lsid
