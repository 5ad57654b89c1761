#pragma once

#include <numbers>

#include "htsim/rng.hpp"

namespace htsim {

// Symmetric alpha-stable draw, Chambers-Mallows-Stuck construction:
//   U ~ Uniform(-pi/2, pi/2), W ~ Exp(1),
//   X = sin(alpha U) / cos(U)^{1/alpha} * (cos((1-alpha) U) / W)^{(1-alpha)/alpha}
// alpha = 1 reduces to tan(U) (standard Cauchy); alpha = 2 gives a Gaussian
// with scale sqrt(2).
inline double sample_alpha_stable(Xoshiro256pp& rng, double alpha) {
    const double u = std::numbers::pi * (rng.uniform() - 0.5);
    if (alpha == 1.0) return std::tan(u);
    const double w = -std::log(rng.uniform());
    return std::sin(alpha * u) / std::pow(std::cos(u), 1.0 / alpha) *
           std::pow(std::cos((1.0 - alpha) * u) / w, (1.0 - alpha) / alpha);
}

}  // namespace htsim
