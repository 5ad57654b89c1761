#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "htsim/dist.hpp"
#include "htsim/quadrature.hpp"
#include "htsim/recursion.hpp"
#include "htsim/synthdata.hpp"

namespace htsim {

struct MomentEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

// Cached draws of log||W - eta H|| so that h(s) = E||W - eta H||^s can be
// evaluated at many s with common random numbers. Deterministic for a fixed
// (spec, mixing, n_mc, seed).
class MomentFunction {
  public:
    MomentEstimate h(double s) const;            // E[m^s]
    MomentEstimate rho() const;                  // E[log m]
    MomentEstimate log_weighted(double s) const; // E[log m * m^s]
    int n_mc() const { return int(log_norms_.size()); }
    std::uint64_t digest() const { return digest_; }

    friend MomentFunction make_moment_function(const ProblemSpec&, const MixingMatrix&,
                                               int, std::uint64_t);

  private:
    std::vector<double> log_norms_;
    std::uint64_t digest_ = 0;
};

MomentFunction make_moment_function(const ProblemSpec& spec, const MixingMatrix& mixing,
                                    int n_mc, std::uint64_t seed);

inline constexpr int kDefaultNMcScalar = 200000;
inline constexpr int kDefaultNMcSpectral = 20000;
inline constexpr double kAlphaSMax = 64.0;

enum class RootStatus { Root, Unstable, Light };

struct AlphaRoot {
    RootStatus status = RootStatus::Root;
    double alpha = 0.0;
    // stderr-induced uncertainty: roots of h(s) = 1 -/+ stderr(s).
    double alpha_lo = 0.0, alpha_hi = 0.0;
};

AlphaRoot alpha_hat_root(const MomentFunction& mf, double tol = 1e-4,
                         double s_max = kAlphaSMax);

// (E||M^(k)...M^(1)||^s)^(1/k) over n_mc independent products; the product
// norm is accumulated in log space. Requires Nd small enough for dense
// matrices.
MomentEstimate h_finite_k_mc(const ProblemSpec& spec, const MixingMatrix& mixing,
                             double s, int k, int n_mc, std::uint64_t seed);

// Sequential top-Lyapunov-exponent estimate over n_mc chains of length k.
MomentEstimate lyapunov_mc(const ProblemSpec& spec, const MixingMatrix& mixing,
                           int k, int n_mc, std::uint64_t seed);

// ----- Closed-form d=1 machinery -----

// The three squared-Gaussian laws of one node's data: a^2, the batch sum,
// and the batch mean (the per-node H in d=1).
struct DistributionKit {
    ScaledChi2 a2;
    ScaledChi2 sum;
    ScaledChi2 mean;
    static DistributionKit gaussian(int b, double sigma) {
        return {ScaledChi2::feature_square(sigma), ScaledChi2::batch_sum(b, sigma),
                ScaledChi2::batch_mean(b, sigma)};
    }
};

// Law of max_i |1 - eta X_i| with independent X_i ~ nodes[i] (the operator
// norm of I - eta H for d=1, W = I). Heterogeneous nodes allowed.
struct DisLaw {
    double eta;
    std::vector<ScaledChi2> nodes;

    double cdf(double x) const;
    double pdf(double x) const;
    QuadResult moment(double s) const;      // E[m^s] = h_dis(s)
    QuadResult log_moment(double s) const;  // E[log m * m^s]
    double rho() const { return log_moment(0.0).value; }
};

DisLaw dis_law(double eta, int n, const ScaledChi2& mean_law);

// Root of h_dis(s) = 1 by quadrature + bisection.
AlphaRoot alpha_dis_root(const DisLaw& law, double tol = 1e-6,
                         double s_max = kAlphaSMax);

// P(min_i X_i + max_i X_i < c) for N i.i.d. X_i ~ dist.
double prob_min_plus_max_below(const ScaledChi2& dist, int n, double c);

// Sign term e(eta, N) = 1 - 2 P(min X + max X < 2/eta) with X the batch-mean
// law; decides the first-order network effect on the tail.
double e_term(double eta, int n, const DistributionKit& kit);

// E[log m * m^alpha] for the dis-law; strictly positive at alpha = alpha_dis
// when rho_dis < 0.
double denominator_expectation(double eta, int n, double alpha_dis,
                               const DistributionKit& kit);

enum class Regime { NetworkLightens, NetworkHeaviens, Boundary };

struct ExpansionReport {
    double alpha_dis = 0.0;
    double correction = 0.0;   // alpha(delta) = alpha_dis - correction * delta
    double numerator = 0.0;    // the sign term (e or its spectral analogue)
    double denominator = 0.0;  // E[log m * m^alpha_dis]
    Regime regime = Regime::Boundary;
    double numerator_stderr = 0.0;    // nonzero only for the MC variant
    double denominator_stderr = 0.0;

    double alpha_at(double delta) const { return alpha_dis - correction * delta; }
};

// d=1 homogeneous expansion; s is the exponent the correction is evaluated
// at (alpha_dis under the implicit-differentiation reading).
ExpansionReport expansion_d1(double eta, int n, const std::vector<double>& l_diag,
                             double alpha_dis, double s, const DistributionKit& kit);

// Same with batch size b (chi^2(b) kit, 2b/eta thresholds); s = alpha_dis.
ExpansionReport expansion_general_b(double eta, int n, int b,
                                    const std::vector<double>& l_diag,
                                    double alpha_dis, const DistributionKit& kit);

// Heterogeneous batch sizes / variances.
ExpansionReport expansion_heterogeneous(double eta, int n, const std::vector<int>& b,
                                        const std::vector<double>& sigma,
                                        const std::vector<double>& l_diag,
                                        double alpha_dis);

// The two per-node probability terms of the heterogeneous expansion:
// P1_i = P(X_i below all others, X_i + max_{k != i} X_k < 2/eta)  [i attains, sign +]
// P2_i = P(X_i above all others, X_i + min_{k != i} X_k > 2/eta)  [i attains, sign -]
std::pair<double, double> heterogeneous_sign_probs(double eta,
                                                   const std::vector<ScaledChi2>& laws,
                                                   int i);

// General-d expansion by Monte Carlo over per-node Wishart spectra; requires
// homogeneous b >= d. Large d uses the bidiagonal (tridiagonalized) Wishart
// model with extreme eigenvalues only.
ExpansionReport expansion_general_d_mc(const ProblemSpec& spec,
                                       const std::vector<double>& l_diag,
                                       double alpha_dis, int n_mc, std::uint64_t seed);

// Extreme eigenvalues of H = (1/b) sum_{j=1..b} a a^T, a ~ N(0, sigma^2 I_d),
// sampled without forming H (bidiagonal model + Sturm bisection for d above
// the dense cutoff).
std::pair<double, double> sample_wishart_extremes(Xoshiro256pp& rng, NormalSampler& normal,
                                                  int d, int b, double sigma,
                                                  bool force_dense = false);

// rho_dis at general d: E log max_i ||I - eta H_i|| by spectral MC.
MomentEstimate rho_dis_spectral_mc(double eta, int n, int d, int b, double sigma,
                                   int n_mc, std::uint64_t seed);

// ----- Thresholds and contours -----

enum class TailCase { I, II, III };

struct ThresholdReport {
    double tau = 0.0;                       // e-sign threshold 2/F^{-1}(2^{-1/N})
    std::optional<double> eta_crit;         // alpha_dis(eta) = 2
    std::optional<double> eta_max;          // rho_dis(eta) = 0
    std::optional<TailCase> tail_case;      // ordering of (tau, eta_crit, eta_max)
    double sigma2_threshold = 0.0;          // (1/eta_ref) erfinv(2^{-1/N})^{-2}
    double eta_ref = 0.0;
};

const char* to_string(TailCase c);

ThresholdReport thresholds(double eta_lo, double eta_hi, int n, int b, double sigma,
                           double eta_ref);

struct ContourGrid {
    std::vector<double> eta;
    std::vector<int> n;
    // value(i, j) = sign field at (n[i], eta[j]): e(eta, N) for d=1, the
    // spectral 1 - 2P(lambda_{j*} < 1/eta) for general d.
    Eigen::MatrixXd value;
    Eigen::MatrixXd rho;  // rho_dis field for general d; 0x0 for d=1
    std::vector<std::pair<double, double>> zero_curve;      // (eta, N)
    std::vector<std::pair<double, double>> rho_zero_curve;  // (eta, N)
};

ContourGrid contour_d1(const std::vector<double>& eta_grid, const std::vector<int>& n_grid,
                       int b, double sigma);

ContourGrid contour_general_d(const std::vector<double>& eta_grid,
                              const std::vector<int>& n_grid, int d, int b, double sigma,
                              int n_mc, std::uint64_t seed);

// ----- Moment bounds, rates, scalings -----

struct MomentBound {
    std::vector<double> bound_at_k;  // indices 0..k_max
    double limit = 0.0;
    double epsilon = 0.0;  // 0 for the p <= 1 case
    int case_tag = 1;      // 1 or 2
};

// h_p = h(p); e0 = E||x^(0)||^p; eq1 = E||q^(1)||^p. p <= 1 uses the direct
// geometric bound; p > 1 the epsilon-weighted one with epsilon grid-minimized
// over 20 log-spaced values in (0, 1/h_p - 1).
MomentBound moment_bound(double h_p, double p, int k_max, double e0, double eq1,
                         double alpha_hat);

double wasserstein_rate(const MomentFunction& mf, double p);

struct GcltScaling {
    double a_k = 0.0;
    double d_k = 0.0;
};

// Normalizing constants of the generalized CLT by tail regime. alpha = 1 is
// rejected (no displayed formula).
GcltScaling gclt_scaling(double alpha, double k, double x_bar);

// ----- Perturbation expansion check -----

struct PerturbationCheck {
    std::vector<double> residual_over_delta;  // one per delta
    bool degenerate = false;  // top singular value nearly tied; resample
};

// Residual of ||W(delta) - eta H||^s against the first-order expansion
// m^s - s delta sign(1 - eta lambda_{j*}) L_{i*i*} m^{s-1} for each delta.
PerturbationCheck perturbation_check(const ProblemSpec& spec, const StepDraw& draw,
                                     const Laplacian& lap,
                                     const std::vector<double>& deltas, double s);

}  // namespace htsim
