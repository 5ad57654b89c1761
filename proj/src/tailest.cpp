#include "htsim/tailest.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace htsim {

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty");
    const size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + long(mid), values.end());
    double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    double lower = *std::max_element(values.begin(), values.begin() + long(mid));
    return 0.5 * (lower + upper);
}

ScalarTailEstimate estimate_alpha_scalar(std::span<const double> samples, int k1, int k2) {
    if (k1 < 2 || k2 < 2) throw std::invalid_argument("estimate_alpha_scalar: K1, K2 >= 2");
    if (size_t(k1) * size_t(k2) > samples.size())
        throw std::invalid_argument("estimate_alpha_scalar: K1*K2 > sample count");

    // Tie-break for exact zeros: drop them and renormalize the counts.
    std::vector<double> x;
    x.reserve(samples.size());
    for (double v : samples)
        if (v != 0.0) x.push_back(v);
    while (size_t(k1) * size_t(k2) > x.size() && k2 > 2) --k2;
    if (size_t(k1) * size_t(k2) > x.size())
        throw std::invalid_argument("estimate_alpha_scalar: too few nonzero samples");

    double sum_log_block = 0.0;
    double sum_log_sample = 0.0;
    int blocks = 0;
    int used = 0;
    for (int j = 0; j < k2; ++j) {
        double block = 0.0;
        double block_logs = 0.0;
        for (int i = 0; i < k1; ++i) {
            const double v = x[size_t(j) * size_t(k1) + size_t(i)];
            block += v;
            block_logs += std::log(std::fabs(v));
        }
        if (block == 0.0) continue;  // degenerate block: drop it entirely
        sum_log_block += std::log(std::fabs(block));
        sum_log_sample += block_logs;
        ++blocks;
        used += k1;
    }
    if (blocks < 2) throw std::invalid_argument("estimate_alpha_scalar: degenerate blocks");

    const double inv_alpha =
        (sum_log_block / double(blocks) - sum_log_sample / double(used)) / std::log(double(k1));

    ScalarTailEstimate est;
    est.n_used = used;
    est.alpha_raw = 1.0 / inv_alpha;
    if (inv_alpha <= 0.0 || est.alpha_raw > 2.0) {
        est.alpha = 2.0;
        est.clipped = true;
    } else {
        est.alpha = est.alpha_raw;
        est.clipped = false;
    }
    return est;
}

TailIndexEstimate estimate_ensemble(const IterateEnsemble& ensemble, int min_samples) {
    const int n = ensemble.config.spec.n_nodes;
    TailIndexEstimate out;
    out.per_node_alphas.reserve(size_t(n));
    out.per_node_raw.reserve(size_t(n));
    out.clipped = false;
    out.n_samples = 0;
    out.k1 = out.k2 = 0;
    // The floor applies to the configured per-node pool (R runs x d pooled
    // coordinates); divergence thins the realized pool but only an (almost)
    // empty one blocks the estimate.
    if (ensemble.config.ensemble_size * ensemble.config.spec.d < min_samples)
        throw std::invalid_argument("estimate_ensemble: insufficient samples");
    for (int i = 0; i < n; ++i) {
        const std::vector<double> samples = ensemble.node_samples(i);
        if (int(samples.size()) < 4)
            throw std::invalid_argument("estimate_ensemble: insufficient samples");
        const int k = int(std::floor(std::sqrt(double(samples.size()))));
        const ScalarTailEstimate est = estimate_alpha_scalar(samples, k, k);
        out.per_node_alphas.push_back(est.alpha);
        out.per_node_raw.push_back(est.alpha_raw);
        out.clipped = out.clipped || est.clipped;
        out.n_samples = int(samples.size());
        out.k1 = out.k2 = k;
    }
    out.alpha_hat = median(out.per_node_alphas);
    out.alpha_raw = median(out.per_node_raw);
    return out;
}

}  // namespace htsim
