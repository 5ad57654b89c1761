#pragma once

#include <span>
#include <vector>

#include "htsim/recursion.hpp"

namespace htsim {

// Log-moment tail-index estimator for (approximately) alpha-stable samples:
// with K = K1*K2 samples X_i and block sums Y_j over K1 consecutive samples,
//   1/alpha = (1/log K1) [ (1/K2) sum_j log|Y_j| - (1/K) sum_i log|X_i| ].
// Estimates above 2 (or nonpositive reciprocals) are clipped to 2: that is
// the finite-variance regime, where the index carries no more information.
struct ScalarTailEstimate {
    double alpha;      // clipped to (0, 2]
    double alpha_raw;  // unclipped value, for diagnostics
    bool clipped;
    int n_used;        // samples actually entering the formula
};

ScalarTailEstimate estimate_alpha_scalar(std::span<const double> samples, int k1, int k2);

struct TailIndexEstimate {
    double alpha_hat;                    // median of per_node_alphas
    double alpha_raw;                    // median of the raw per-node values
    std::vector<double> per_node_alphas;
    std::vector<double> per_node_raw;
    int n_samples;                       // per-node pooled sample count
    int k1, k2;
    bool clipped;                        // any node clipped
};

inline constexpr int kMinTailSamples = 400;

// Per-node pooled estimate over the non-diverged runs of an ensemble, then
// the median across nodes.
TailIndexEstimate estimate_ensemble(const IterateEnsemble& ensemble,
                                    int min_samples = kMinTailSamples);

double median(std::vector<double> values);

}  // namespace htsim
