#pragma once

#include <functional>

namespace htsim {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;     // estimated absolute error
    bool converged = false;
    int subdivisions = 0;
};

struct QuadOptions {
    double abs_tol = 1e-8;
    double rel_tol = 1e-6;
    int max_subdivisions = 2000;
};

// Adaptive Gauss-Kronrod (G7,K15) on a finite interval.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const QuadOptions& opts = {});

// Integral over [a, +inf), mapped onto (0,1] via x = a + t/(1-t).
QuadResult integrate_to_inf(const std::function<double(double)>& f, double a,
                            const QuadOptions& opts = {});

// Integral of log(x) * x^alpha * g(x) over (0,1], with the substitution
// x = exp(-u) absorbing the integrable log singularity at 0.
QuadResult integrate_log_weighted_unit(const std::function<double(double)>& g,
                                       double alpha, const QuadOptions& opts = {});

}  // namespace htsim
