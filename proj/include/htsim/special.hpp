#pragma once

namespace htsim {

// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
double gamma_p(double a, double x);

// Density of the Gamma(a, scale=1) law at x, computed in log space.
double gamma_pdf(double a, double x);

// Inverse of P(a, .): returns x with P(a, x) = p.
double gamma_p_inv(double a, double p);

// Inverse error function on (-1, 1).
double erf_inv(double y);

}  // namespace htsim
