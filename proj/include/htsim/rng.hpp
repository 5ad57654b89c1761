#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>

namespace htsim {

// splitmix64 finalizer; used both as a stream-derivation hash and to seed
// xoshiro state from a single 64-bit value.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d4a9c2233a72f9ULL;
    return z ^ (z >> 31);
}

// Derived stream seed: hash(master, index). Distinct (master, index) pairs
// give statistically independent streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0x6a09e667f3bcc909ULL + index * 0x9e3779b97f4a7c15ULL);
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b << 1);
}

// xoshiro256++ (Blackman & Vigna), seeded via splitmix64.
class Xoshiro256pp {
  public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed = 0x853c49e6748fea9bULL) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in (0,1); never returns exactly 0 or 1.
    double uniform() {
        return (double(operator()() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform in (lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> s_;
};

// Standard normal sampler, Marsaglia polar method. The pair cache makes the
// draw sequence a deterministic function of the engine stream.
class NormalSampler {
  public:
    double operator()(Xoshiro256pp& rng) {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, q;
        do {
            u = 2.0 * rng.uniform() - 1.0;
            v = 2.0 * rng.uniform() - 1.0;
            q = u * u + v * v;
        } while (q >= 1.0 || q == 0.0);
        const double f = std::sqrt(-2.0 * std::log(q) / q);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    void fill(Xoshiro256pp& rng, std::span<double> out) {
        for (auto& x : out) x = (*this)(rng);
    }

    void reset() { have_spare_ = false; }

  private:
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Gamma(shape, scale=1), Marsaglia–Tsang; shape < 1 boosted via
// G(a) = G(a+1) * U^{1/a}.
inline double sample_gamma(Xoshiro256pp& rng, NormalSampler& normal, double shape) {
    if (shape < 1.0) {
        const double u = rng.uniform();
        return sample_gamma(rng, normal, shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal(rng);
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

// chi^2(k) draw.
inline double sample_chi2(Xoshiro256pp& rng, NormalSampler& normal, double dof) {
    return 2.0 * sample_gamma(rng, normal, 0.5 * dof);
}

// chi(k) draw (nonnegative root of a chi^2(k)).
inline double sample_chi(Xoshiro256pp& rng, NormalSampler& normal, double dof) {
    return std::sqrt(sample_chi2(rng, normal, dof));
}

}  // namespace htsim
