#pragma once

#include "htsim/special.hpp"

namespace htsim {

// X = scale * chi^2(dof). Covers all the squared-Gaussian laws used by the
// closed-form theory: a_i^2, batch sums, and batch means.
class ScaledChi2 {
  public:
    ScaledChi2(double dof, double scale) : dof_(dof), scale_(scale) {}

    double pdf(double x) const {
        if (x <= 0.0) return 0.0;
        const double z = x / (2.0 * scale_);
        return gamma_pdf(0.5 * dof_, z) / (2.0 * scale_);
    }
    double cdf(double x) const {
        if (x <= 0.0) return 0.0;
        return gamma_p(0.5 * dof_, x / (2.0 * scale_));
    }
    double quantile(double p) const { return 2.0 * scale_ * gamma_p_inv(0.5 * dof_, p); }

    double dof() const { return dof_; }
    double scale() const { return scale_; }
    double mean() const { return dof_ * scale_; }

    // a^2 with a ~ N(0, sigma^2).
    static ScaledChi2 feature_square(double sigma) { return {1.0, sigma * sigma}; }
    // sum_{j=1..b} a_j^2.
    static ScaledChi2 batch_sum(int b, double sigma) { return {double(b), sigma * sigma}; }
    // (1/b) sum_{j=1..b} a_j^2.
    static ScaledChi2 batch_mean(int b, double sigma) {
        return {double(b), sigma * sigma / double(b)};
    }

  private:
    double dof_;
    double scale_;
};

}  // namespace htsim
