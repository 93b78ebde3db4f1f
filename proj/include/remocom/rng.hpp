#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>

namespace remocom {

/// Seeded generator with draw helpers that are bit-reproducible everywhere:
/// only the raw mt19937_64 stream is consumed (std::*_distribution output is
/// implementation-defined, so it is never used).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    /// Unbiased draw from {0, ..., n-1} by rejection.
    std::uint64_t bounded(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("bounded(0)");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = gen_();
        while (x >= limit) x = gen_();
        return x % n;
    }

    int bounded_int(int n) { return static_cast<int>(bounded(static_cast<std::uint64_t>(n))); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Index drawn from a nonnegative weight vector by CDF scan.
    int weighted(const Eigen::VectorXd& w) {
        const double total = w.sum();
        double u = uniform01() * total;
        for (int i = 0; i < w.size(); ++i) {
            u -= w(i);
            if (u < 0.0) return i;
        }
        return static_cast<int>(w.size()) - 1;
    }

  private:
    std::mt19937_64 gen_;
};

/// SplitMix64 step; used to derive independent substream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace remocom
