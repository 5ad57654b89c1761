#include "htsim/theory.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace htsim {

namespace {

constexpr int kSpectralDenseCutoff = 32;

MomentEstimate mean_and_stderr(const std::vector<double>& xs) {
    const double n = double(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= std::max(1.0, n - 1.0);
    return {mean, std::sqrt(var / n)};
}

// One draw of log||W - eta H||. d=1 avoids matrices entirely when W = I.
double draw_log_norm(const ProblemSpec& spec, const MixingMatrix& mixing,
                     Xoshiro256pp& rng, NormalSampler& normal) {
    const double eta = spec.eta;
    if (spec.d == 1) {
        if (mixing.is_identity()) {
            double m = 0.0;
            for (int b : spec.batch_sizes) {
                const double x =
                    spec.sigma * spec.sigma / double(b) * sample_chi2(rng, normal, double(b));
                m = std::max(m, std::fabs(1.0 - eta * x));
            }
            return std::log(m);
        }
        Eigen::MatrixXd a = mixing.matrix;
        for (int i = 0; i < spec.n_nodes; ++i) {
            const int b = spec.batch_sizes[size_t(i)];
            a(i, i) -= eta * spec.sigma * spec.sigma / double(b) *
                       sample_chi2(rng, normal, double(b));
        }
        return std::log(operator_norm(a));
    }
    if (mixing.is_identity()) {
        double m = 0.0;
        for (int b : spec.batch_sizes) {
            const auto [lmin, lmax] =
                sample_wishart_extremes(rng, normal, spec.d, b, spec.sigma);
            m = std::max(m, std::max(std::fabs(1.0 - eta * lmin),
                                     std::fabs(1.0 - eta * lmax)));
        }
        return std::log(m);
    }
    const StepDraw draw = sample_step(spec, rng);
    return std::log(operator_norm(make_step_operator(spec, mixing, draw).dense()));
}

double bisect_increasing(const std::function<double(double)>& f, double lo, double hi,
                         double f_tol, double x_tol) {
    // f assumed to cross zero from below on [lo, hi].
    for (int it = 0; it < 200 && hi - lo > x_tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double v = f(mid);
        if (std::fabs(v) <= f_tol) return mid;
        (v < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

// ----- MomentFunction -----

MomentEstimate MomentFunction::h(double s) const {
    std::vector<double> vals(log_norms_.size());
    for (size_t i = 0; i < log_norms_.size(); ++i) vals[i] = std::exp(s * log_norms_[i]);
    return mean_and_stderr(vals);
}

MomentEstimate MomentFunction::rho() const { return mean_and_stderr(log_norms_); }

MomentEstimate MomentFunction::log_weighted(double s) const {
    std::vector<double> vals(log_norms_.size());
    for (size_t i = 0; i < log_norms_.size(); ++i)
        vals[i] = log_norms_[i] * std::exp(s * log_norms_[i]);
    return mean_and_stderr(vals);
}

MomentFunction make_moment_function(const ProblemSpec& spec, const MixingMatrix& mixing,
                                    int n_mc, std::uint64_t seed) {
    spec.validate();
    if (mixing.n() != spec.n_nodes)
        throw std::invalid_argument("make_moment_function: mixing size != N");
    if (n_mc < 2) throw std::invalid_argument("make_moment_function: n_mc >= 2");
    MomentFunction mf;
    mf.log_norms_.resize(size_t(n_mc));
    for (int r = 0; r < n_mc; ++r) {
        Xoshiro256pp rng(derive_seed(seed, std::uint64_t(r)));
        NormalSampler normal;
        mf.log_norms_[size_t(r)] = draw_log_norm(spec, mixing, rng, normal);
    }
    std::uint64_t h = seed ^ (0x51ed270b8a45c681ULL + std::uint64_t(n_mc));
    mf.digest_ = splitmix64(h);
    return mf;
}

AlphaRoot alpha_hat_root(const MomentFunction& mf, double tol, double s_max) {
    AlphaRoot out;
    const MomentEstimate r = mf.rho();
    if (r.value >= 0.0) {
        out.status = RootStatus::Unstable;
        return out;
    }
    // Find a root of h(s) = target, with the bracket expanded geometrically.
    auto root_of = [&](double target) -> std::optional<double> {
        double lo = 0.0, hi = 1.0;
        for (;;) {
            const MomentEstimate e = mf.h(hi);
            if (e.value > target) break;
            lo = hi;
            hi *= 2.0;
            if (hi > s_max) return std::nullopt;
        }
        while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            const MomentEstimate e = mf.h(mid);
            // Stop once the midpoint is statistically indistinguishable from
            // the target; bisecting further would chase Monte Carlo noise.
            if (std::fabs(e.value - target) <= e.stderr_) return mid;
            (e.value < target ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    const auto alpha = root_of(1.0);
    if (!alpha) {
        out.status = RootStatus::Light;
        return out;
    }
    out.status = RootStatus::Root;
    out.alpha = *alpha;
    const double se = mf.h(*alpha).stderr_;
    out.alpha_lo = root_of(1.0 - se).value_or(*alpha);
    out.alpha_hi = root_of(1.0 + se).value_or(s_max);
    return out;
}

MomentEstimate h_finite_k_mc(const ProblemSpec& spec, const MixingMatrix& mixing,
                             double s, int k, int n_mc, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("h_finite_k_mc: k >= 1");
    const Eigen::Index nd = Eigen::Index(spec.n_nodes) * spec.d;
    if (nd > kDenseCap) throw std::invalid_argument("h_finite_k_mc: Nd above dense cap");
    // Accumulate s * log||product|| per replicate, renormalizing the running
    // product to keep entries bounded.
    std::vector<double> s_logs(size_t(n_mc), 0.0);
    for (int r = 0; r < n_mc; ++r) {
        Xoshiro256pp rng(derive_seed(seed, std::uint64_t(r)));
        Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(nd, nd);
        double log_scale = 0.0;
        for (int j = 0; j < k; ++j) {
            const StepDraw draw = sample_step(spec, rng);
            prod = make_step_operator(spec, mixing, draw).dense() * prod;
            const double scale = prod.cwiseAbs().maxCoeff();
            if (scale > 0.0) {
                prod /= scale;
                log_scale += std::log(scale);
            }
        }
        s_logs[size_t(r)] = s * (log_scale + std::log(prod.norm() == 0.0
                                                          ? std::numeric_limits<double>::min()
                                                          : prod.jacobiSvd().singularValues()(0)));
    }
    // E[||P||^s] via a max-shifted exponential mean, then the 1/k-th root.
    const double shift = *std::max_element(s_logs.begin(), s_logs.end());
    std::vector<double> scaled(s_logs.size());
    for (size_t i = 0; i < s_logs.size(); ++i) scaled[i] = std::exp(s_logs[i] - shift);
    const MomentEstimate m = mean_and_stderr(scaled);
    const double value = std::exp((std::log(m.value) + shift) / double(k));
    const double se = value * m.stderr_ / (m.value * double(k));
    return {value, se};
}

MomentEstimate lyapunov_mc(const ProblemSpec& spec, const MixingMatrix& mixing,
                           int k, int n_mc, std::uint64_t seed) {
    const int n = spec.n_nodes;
    const int d = spec.d;
    const Eigen::Index nd = Eigen::Index(n) * d;
    std::vector<double> chains(size_t(n_mc), 0.0);
    Eigen::VectorXd a(d);
    for (int r = 0; r < n_mc; ++r) {
        Xoshiro256pp rng(derive_seed(seed, std::uint64_t(r)));
        NormalSampler normal;
        Eigen::VectorXd v(nd);
        normal.fill(rng, {v.data(), size_t(nd)});
        v.normalize();
        double acc = 0.0;
        for (int j = 0; j < k; ++j) {
            Eigen::VectorXd next = lift_to_blocks(mixing, d, v);
            for (int i = 0; i < n; ++i) {
                const int b = spec.batch_sizes[size_t(i)];
                const auto vi = v.segment(Eigen::Index(i) * d, d);
                const double scale = spec.eta / double(b);
                for (int t = 0; t < b; ++t) {
                    for (int c = 0; c < d; ++c) a(c) = spec.sigma * normal(rng);
                    next.segment(Eigen::Index(i) * d, d).noalias() -=
                        (scale * a.dot(vi)) * a;
                }
            }
            const double norm = next.norm();
            acc += std::log(norm);
            v = next / norm;
        }
        chains[size_t(r)] = acc / double(k);
    }
    return mean_and_stderr(chains);
}

// ----- Closed-form d = 1 machinery -----

DisLaw dis_law(double eta, int n, const ScaledChi2& mean_law) {
    if (n < 1 || eta <= 0.0) throw std::invalid_argument("dis_law: N >= 1, eta > 0");
    return {eta, std::vector<ScaledChi2>(size_t(n), mean_law)};
}

double DisLaw::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    double p = 1.0;
    for (const auto& law : nodes)
        p *= law.cdf((1.0 + x) / eta) - law.cdf((1.0 - x) / eta);
    return p;
}

double DisLaw::pdf(double x) const {
    if (x <= 0.0) return 0.0;
    const size_t n = nodes.size();
    std::vector<double> term(n), deriv(n);
    size_t zeros = 0, zero_at = 0;
    double prod = 1.0;
    for (size_t i = 0; i < n; ++i) {
        const auto& law = nodes[i];
        term[i] = law.cdf((1.0 + x) / eta) - law.cdf((1.0 - x) / eta);
        deriv[i] = (law.pdf((1.0 + x) / eta) + law.pdf((1.0 - x) / eta)) / eta;
        if (term[i] == 0.0) {
            ++zeros;
            zero_at = i;
        } else {
            prod *= term[i];
        }
    }
    if (zeros >= 2) return 0.0;
    if (zeros == 1) return deriv[zero_at] * prod;
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) total += deriv[i] * (prod / term[i]);
    return total;
}

QuadResult DisLaw::moment(double s) const {
    const QuadResult lower = integrate([&](double x) { return std::pow(x, s) * pdf(x); },
                                       0.0, 1.0);
    const QuadResult upper =
        integrate_to_inf([&](double x) { return std::pow(x, s) * pdf(x); }, 1.0);
    return {lower.value + upper.value, lower.error + upper.error,
            lower.converged && upper.converged, lower.subdivisions + upper.subdivisions};
}

QuadResult DisLaw::log_moment(double s) const {
    const QuadResult lower =
        integrate_log_weighted_unit([&](double x) { return pdf(x); }, s);
    const QuadResult upper = integrate_to_inf(
        [&](double x) { return std::log(x) * std::pow(x, s) * pdf(x); }, 1.0);
    return {lower.value + upper.value, lower.error + upper.error,
            lower.converged && upper.converged, lower.subdivisions + upper.subdivisions};
}

AlphaRoot alpha_dis_root(const DisLaw& law, double tol, double s_max) {
    AlphaRoot out;
    if (law.rho() >= 0.0) {
        out.status = RootStatus::Unstable;
        return out;
    }
    double lo = 0.0, hi = 1.0;
    for (;;) {
        if (law.moment(hi).value > 1.0) break;
        lo = hi;
        hi *= 2.0;
        if (hi > s_max) {
            out.status = RootStatus::Light;
            return out;
        }
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (law.moment(mid).value < 1.0 ? lo : hi) = mid;
    }
    out.status = RootStatus::Root;
    out.alpha = out.alpha_lo = out.alpha_hi = 0.5 * (lo + hi);
    return out;
}

double prob_min_plus_max_below(const ScaledChi2& dist, int n, double c) {
    if (c <= 0.0) return 0.0;
    if (n == 1) return dist.cdf(0.5 * c);
    const double bulk = std::pow(dist.cdf(c), n);
    const QuadResult corr = integrate(
        [&](double y) {
            const double gap = dist.cdf(y) - dist.cdf(c - y);
            return double(n) * std::pow(std::max(0.0, gap), n - 1) * dist.pdf(y);
        },
        0.5 * c, c);
    return bulk - corr.value;
}

double e_term(double eta, int n, const DistributionKit& kit) {
    return 1.0 - 2.0 * prob_min_plus_max_below(kit.mean, n, 2.0 / eta);
}

double denominator_expectation(double eta, int n, double alpha_dis,
                               const DistributionKit& kit) {
    const double den = dis_law(eta, n, kit.mean).log_moment(alpha_dis).value;
    if (den <= 0.0)
        throw std::invalid_argument("denominator_expectation: nonpositive (bad alpha_dis?)");
    return den;
}

namespace {

Regime regime_of(double sign_term) {
    constexpr double kBoundaryTol = 1e-10;
    if (sign_term > kBoundaryTol) return Regime::NetworkHeaviens;
    if (sign_term < -kBoundaryTol) return Regime::NetworkLightens;
    return Regime::Boundary;
}

double l_diag_sum(const std::vector<double>& l_diag, int n) {
    if (int(l_diag.size()) != n)
        throw std::invalid_argument("expansion: l_diag length != N");
    double sum = 0.0;
    for (double v : l_diag) sum += v;
    return sum;
}

}  // namespace

ExpansionReport expansion_d1(double eta, int n, const std::vector<double>& l_diag,
                             double alpha_dis, double s, const DistributionKit& kit) {
    const DisLaw law = dis_law(eta, n, kit.mean);
    if (law.rho() >= 0.0) throw std::invalid_argument("expansion_d1: rho_dis >= 0");
    ExpansionReport rep;
    rep.alpha_dis = alpha_dis;
    rep.numerator = e_term(eta, n, kit);
    rep.denominator = denominator_expectation(eta, n, alpha_dis, kit);
    rep.correction =
        s * (l_diag_sum(l_diag, n) / double(n)) * rep.numerator / rep.denominator;
    rep.regime = regime_of(rep.numerator);
    return rep;
}

ExpansionReport expansion_general_b(double eta, int n, int b,
                                    const std::vector<double>& l_diag,
                                    double alpha_dis, const DistributionKit& kit) {
    if (b < 1) throw std::invalid_argument("expansion_general_b: b >= 1");
    (void)kit;  // the batch size fixes the kit
    const DistributionKit bkit =
        DistributionKit::gaussian(b, std::sqrt(kit.a2.scale()));
    return expansion_d1(eta, n, l_diag, alpha_dis, alpha_dis, bkit);
}

std::pair<double, double> heterogeneous_sign_probs(double eta,
                                                   const std::vector<ScaledChi2>& laws,
                                                   int i) {
    const double c = 2.0 / eta;
    const size_t n = laws.size();
    auto others_in = [&](double lo, double hi) {
        double p = 1.0;
        for (size_t k = 0; k < n; ++k) {
            if (int(k) == i) continue;
            p *= std::max(0.0, laws[k].cdf(hi) - laws[k].cdf(lo));
        }
        return p;
    };
    // i is the minimum, the minimum attains the norm, and the sign is +:
    // every other node sits in (x, c - x), which needs x < c/2.
    const QuadResult p1 = integrate(
        [&](double x) { return laws[size_t(i)].pdf(x) * others_in(x, c - x); }, 0.0,
        0.5 * c);
    // i is the maximum, the maximum attains, sign -: others in (c - x, x).
    const QuadResult p2 = integrate_to_inf(
        [&](double x) { return laws[size_t(i)].pdf(x) * others_in(c - x, x); }, 0.5 * c);
    return {p1.value, p2.value};
}

ExpansionReport expansion_heterogeneous(double eta, int n, const std::vector<int>& b,
                                        const std::vector<double>& sigma,
                                        const std::vector<double>& l_diag,
                                        double alpha_dis) {
    if (int(b.size()) != n || int(sigma.size()) != n || int(l_diag.size()) != n)
        throw std::invalid_argument("expansion_heterogeneous: length mismatch");
    std::vector<ScaledChi2> laws;
    laws.reserve(size_t(n));
    for (int i = 0; i < n; ++i)
        laws.push_back(ScaledChi2::batch_mean(b[size_t(i)], sigma[size_t(i)]));
    const DisLaw law{eta, laws};
    if (law.rho() >= 0.0)
        throw std::invalid_argument("expansion_heterogeneous: rho_dis >= 0");
    ExpansionReport rep;
    rep.alpha_dis = alpha_dis;
    double signed_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto [p1, p2] = heterogeneous_sign_probs(eta, laws, i);
        signed_sum += l_diag[size_t(i)] * (p2 - p1);
    }
    rep.numerator = signed_sum;
    rep.denominator = law.log_moment(alpha_dis).value;
    if (rep.denominator <= 0.0)
        throw std::invalid_argument("expansion_heterogeneous: nonpositive denominator");
    rep.correction = alpha_dis * signed_sum / rep.denominator;
    rep.regime = regime_of(rep.correction);
    return rep;
}

// ----- Spectral (general d) machinery -----

namespace {

// Eigenvalue count below x for a symmetric tridiagonal matrix (LDL^T signs).
int sturm_count(const std::vector<double>& diag, const std::vector<double>& off,
                double x) {
    int count = 0;
    double d = diag[0] - x;
    if (d < 0.0) ++count;
    for (size_t i = 1; i < diag.size(); ++i) {
        if (d == 0.0) d = std::numeric_limits<double>::min();
        d = diag[i] - x - off[i - 1] * off[i - 1] / d;
        if (d < 0.0) ++count;
    }
    return count;
}

double tridiag_extreme(const std::vector<double>& diag, const std::vector<double>& off,
                       bool want_max) {
    const int d = int(diag.size());
    double lo = diag[0], hi = diag[0];
    for (int i = 0; i < d; ++i) {
        const double r = (i > 0 ? std::fabs(off[size_t(i) - 1]) : 0.0) +
                         (i + 1 < d ? std::fabs(off[size_t(i)]) : 0.0);
        lo = std::min(lo, diag[size_t(i)] - r);
        hi = std::max(hi, diag[size_t(i)] + r);
    }
    lo = std::max(lo, 0.0);  // Gram matrix: spectrum is nonnegative
    const int threshold = want_max ? d : 1;
    const double tol = 1e-12 * std::max(1.0, std::fabs(hi));
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (sturm_count(diag, off, mid) >= threshold ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

std::pair<double, double> sample_wishart_extremes(Xoshiro256pp& rng, NormalSampler& normal,
                                                  int d, int b, double sigma,
                                                  bool force_dense) {
    const double scale = sigma * sigma / double(b);
    if (d == 1) {
        const double x = scale * sample_chi2(rng, normal, double(b));
        return {x, x};
    }
    if (force_dense || d <= kSpectralDenseCutoff || b < d) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
        Eigen::VectorXd a(d);
        for (int j = 0; j < b; ++j) {
            normal.fill(rng, {a.data(), size_t(d)});
            m.selfadjointView<Eigen::Lower>().rankUpdate(a, 1.0);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
            Eigen::MatrixXd(m.selfadjointView<Eigen::Lower>()), Eigen::EigenvaluesOnly);
        const auto& ev = solver.eigenvalues();
        return {scale * ev(0), scale * ev(ev.size() - 1)};
    }
    // Bidiagonal Wishart model: B with diagonal chi(b), chi(b-1), ...,
    // chi(b-d+1) and subdiagonal chi(d-1), ..., chi(1); the spectrum of BB^T
    // matches that of the Gram matrix exactly in distribution.
    std::vector<double> c(size_t(d), 0.0), e(size_t(d) - 1, 0.0);
    for (int i = 0; i < d; ++i) c[size_t(i)] = sample_chi(rng, normal, double(b - i));
    for (int i = 0; i + 1 < d; ++i) e[size_t(i)] = sample_chi(rng, normal, double(d - 1 - i));
    std::vector<double> diag(size_t(d), 0.0), off(size_t(d) - 1, 0.0);
    diag[0] = c[0] * c[0];
    for (int i = 1; i < d; ++i)
        diag[size_t(i)] = c[size_t(i)] * c[size_t(i)] + e[size_t(i) - 1] * e[size_t(i) - 1];
    for (int i = 0; i + 1 < d; ++i) off[size_t(i)] = c[size_t(i)] * e[size_t(i)];
    return {scale * tridiag_extreme(diag, off, false),
            scale * tridiag_extreme(diag, off, true)};
}

namespace {

struct SpectralDraw {
    double log_m;        // log max_i ||I - eta H_i||
    double lambda_star;  // eigenvalue attaining the max
};

SpectralDraw spectral_draw(double eta, int n, int d, int b, double sigma,
                           Xoshiro256pp& rng, NormalSampler& normal) {
    double m = -1.0, lambda_star = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto [lmin, lmax] = sample_wishart_extremes(rng, normal, d, b, sigma);
        const double cand_min = std::fabs(1.0 - eta * lmin);
        const double cand_max = std::fabs(1.0 - eta * lmax);
        const double mi = std::max(cand_min, cand_max);
        if (mi > m) {
            m = mi;
            lambda_star = cand_min >= cand_max ? lmin : lmax;
        }
    }
    return {std::log(m), lambda_star};
}

}  // namespace

ExpansionReport expansion_general_d_mc(const ProblemSpec& spec,
                                       const std::vector<double>& l_diag,
                                       double alpha_dis, int n_mc, std::uint64_t seed) {
    spec.validate();
    if (!spec.homogeneous_batches())
        throw std::invalid_argument("expansion_general_d_mc: homogeneous b required");
    const int b = spec.batch_sizes[0];
    if (b < spec.d)
        throw std::invalid_argument("expansion_general_d_mc: requires b >= d");
    const int n = spec.n_nodes;
    std::vector<double> neg_sign(size_t(n_mc), 0.0), den(size_t(n_mc), 0.0), logs(size_t(n_mc), 0.0);
    for (int r = 0; r < n_mc; ++r) {
        Xoshiro256pp rng(derive_seed(seed, std::uint64_t(r)));
        NormalSampler normal;
        const SpectralDraw draw =
            spectral_draw(spec.eta, n, spec.d, b, spec.sigma, rng, normal);
        const double sign = draw.lambda_star < 1.0 / spec.eta ? 1.0 : -1.0;
        neg_sign[size_t(r)] = -sign;
        den[size_t(r)] = draw.log_m * std::exp(alpha_dis * draw.log_m);
        logs[size_t(r)] = draw.log_m;
    }
    const MomentEstimate rho = mean_and_stderr(logs);
    if (rho.value >= 0.0)
        throw std::invalid_argument("expansion_general_d_mc: rho_dis >= 0");
    const MomentEstimate num = mean_and_stderr(neg_sign);
    const MomentEstimate dd = mean_and_stderr(den);
    ExpansionReport rep;
    rep.alpha_dis = alpha_dis;
    rep.numerator = num.value;
    rep.numerator_stderr = num.stderr_;
    rep.denominator = dd.value;
    rep.denominator_stderr = dd.stderr_;
    rep.correction =
        alpha_dis * (l_diag_sum(l_diag, n) / double(n)) * num.value / dd.value;
    rep.regime = regime_of(num.value);
    return rep;
}

MomentEstimate rho_dis_spectral_mc(double eta, int n, int d, int b, double sigma,
                                   int n_mc, std::uint64_t seed) {
    std::vector<double> logs(size_t(n_mc), 0.0);
    for (int r = 0; r < n_mc; ++r) {
        Xoshiro256pp rng(derive_seed(seed, std::uint64_t(r)));
        NormalSampler normal;
        logs[size_t(r)] = spectral_draw(eta, n, d, b, sigma, rng, normal).log_m;
    }
    return mean_and_stderr(logs);
}

// ----- Thresholds and contours -----

const char* to_string(TailCase c) {
    switch (c) {
        case TailCase::I: return "I";
        case TailCase::II: return "II";
        case TailCase::III: return "III";
    }
    return "?";
}

ThresholdReport thresholds(double eta_lo, double eta_hi, int n, int b, double sigma,
                           double eta_ref) {
    if (!(eta_lo > 0.0 && eta_hi > eta_lo))
        throw std::invalid_argument("thresholds: need 0 < eta_lo < eta_hi");
    const ScaledChi2 mean_law = ScaledChi2::batch_mean(b, sigma);
    ThresholdReport rep;
    const double q = std::pow(2.0, -1.0 / double(n));
    rep.tau = 2.0 / mean_law.quantile(q);
    rep.eta_ref = eta_ref;
    const double ei = erf_inv(q);
    rep.sigma2_threshold = 1.0 / (eta_ref * ei * ei);

    // eta_crit and eta_max describe each node's marginal process (plain SGD
    // with batch b), so they are computed from the single-node law; only tau
    // carries the network-size dependence.
    auto rho_at = [&](double eta) { return dis_law(eta, 1, mean_law).rho(); };
    auto h2_at = [&](double eta) { return dis_law(eta, 1, mean_law).moment(2.0).value - 1.0; };
    if (rho_at(eta_lo) < 0.0 && rho_at(eta_hi) > 0.0)
        rep.eta_max = bisect_increasing(rho_at, eta_lo, eta_hi, 1e-4, 1e-6 * eta_hi);
    if (h2_at(eta_lo) < 0.0 && h2_at(eta_hi) > 0.0)
        rep.eta_crit = bisect_increasing(h2_at, eta_lo, eta_hi, 1e-6, 1e-6 * eta_hi);
    if (rep.eta_crit && rep.eta_max) {
        if (rep.tau < *rep.eta_crit)
            rep.tail_case = TailCase::I;
        else if (rep.tau < *rep.eta_max)
            rep.tail_case = TailCase::II;
        else
            rep.tail_case = TailCase::III;
    }
    return rep;
}

namespace {

// Zero crossings of one row of a sign field, linearly interpolated in eta.
void append_row_crossings(const std::vector<double>& eta, int n_value,
                          const Eigen::MatrixXd& field, int row,
                          std::vector<std::pair<double, double>>& out) {
    for (size_t j = 0; j + 1 < eta.size(); ++j) {
        const double a = field(row, Eigen::Index(j));
        const double b = field(row, Eigen::Index(j) + 1);
        if (a == 0.0) {
            out.emplace_back(eta[j], double(n_value));
        } else if (a * b < 0.0) {
            const double t = a / (a - b);
            out.emplace_back(eta[j] + t * (eta[j + 1] - eta[j]), double(n_value));
        }
    }
}

}  // namespace

ContourGrid contour_d1(const std::vector<double>& eta_grid, const std::vector<int>& n_grid,
                       int b, double sigma) {
    if (eta_grid.empty() || n_grid.empty())
        throw std::invalid_argument("contour_d1: empty grid");
    ContourGrid grid;
    grid.eta = eta_grid;
    grid.n = n_grid;
    grid.value.resize(Eigen::Index(n_grid.size()), Eigen::Index(eta_grid.size()));
    const DistributionKit kit = DistributionKit::gaussian(b, sigma);
    for (size_t i = 0; i < n_grid.size(); ++i)
        for (size_t j = 0; j < eta_grid.size(); ++j)
            grid.value(Eigen::Index(i), Eigen::Index(j)) =
                e_term(eta_grid[j], n_grid[i], kit);
    for (size_t i = 0; i < n_grid.size(); ++i)
        append_row_crossings(eta_grid, n_grid[i], grid.value, int(i), grid.zero_curve);
    return grid;
}

ContourGrid contour_general_d(const std::vector<double>& eta_grid,
                              const std::vector<int>& n_grid, int d, int b, double sigma,
                              int n_mc, std::uint64_t seed) {
    if (eta_grid.empty() || n_grid.empty())
        throw std::invalid_argument("contour_general_d: empty grid");
    if (b < d) throw std::invalid_argument("contour_general_d: requires b >= d");
    ContourGrid grid;
    grid.eta = eta_grid;
    grid.n = n_grid;
    grid.value.resize(Eigen::Index(n_grid.size()), Eigen::Index(eta_grid.size()));
    grid.rho.resize(Eigen::Index(n_grid.size()), Eigen::Index(eta_grid.size()));
    for (size_t i = 0; i < n_grid.size(); ++i) {
        for (size_t j = 0; j < eta_grid.size(); ++j) {
            const std::uint64_t cell_seed =
                derive_seed(seed, std::uint64_t(i * eta_grid.size() + j));
            double sign_sum = 0.0, log_sum = 0.0;
            for (int r = 0; r < n_mc; ++r) {
                Xoshiro256pp rng(derive_seed(cell_seed, std::uint64_t(r)));
                NormalSampler normal;
                const SpectralDraw draw =
                    spectral_draw(eta_grid[j], n_grid[i], d, b, sigma, rng, normal);
                sign_sum += draw.lambda_star < 1.0 / eta_grid[j] ? -1.0 : 1.0;
                log_sum += draw.log_m;
            }
            grid.value(Eigen::Index(i), Eigen::Index(j)) = sign_sum / double(n_mc);
            grid.rho(Eigen::Index(i), Eigen::Index(j)) = log_sum / double(n_mc);
        }
    }
    for (size_t i = 0; i < n_grid.size(); ++i) {
        append_row_crossings(eta_grid, n_grid[i], grid.value, int(i), grid.zero_curve);
        append_row_crossings(eta_grid, n_grid[i], grid.rho, int(i), grid.rho_zero_curve);
    }
    return grid;
}

// ----- Moment bounds, rates, scalings -----

MomentBound moment_bound(double h_p, double p, int k_max, double e0, double eq1,
                         double alpha_hat) {
    if (p <= 0.0 || p >= alpha_hat)
        throw std::invalid_argument("moment_bound: requires 0 < p < alpha_hat");
    if (h_p >= 1.0) throw std::invalid_argument("moment_bound: h(p) >= 1");
    MomentBound out;
    double rate = h_p, noise_factor = 1.0;
    if (p <= 1.0) {
        out.case_tag = 1;
    } else {
        out.case_tag = 2;
        // Pick epsilon minimizing the limit over a log grid in (0, 1/h - 1).
        const double span = 1.0 / h_p - 1.0;
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < 20; ++j) {
            const double eps = span * std::pow(10.0, -3.0 + 3.0 * double(j) / 19.0) * 0.999;
            const double c = (std::pow(1.0 + eps, p / (p - 1.0)) - (1.0 + eps)) /
                             std::pow(std::pow(1.0 + eps, 1.0 / (p - 1.0)) - 1.0, p);
            const double limit = c / (1.0 - (1.0 + eps) * h_p);
            if (limit < best) {
                best = limit;
                out.epsilon = eps;
                rate = (1.0 + eps) * h_p;
                noise_factor = c;
            }
        }
    }
    out.bound_at_k.resize(size_t(k_max) + 1);
    double rk = 1.0;
    for (int k = 0; k <= k_max; ++k) {
        out.bound_at_k[size_t(k)] = rk * e0 + (1.0 - rk) / (1.0 - rate) * noise_factor * eq1;
        rk *= rate;
    }
    out.limit = noise_factor * eq1 / (1.0 - rate);
    return out;
}

double wasserstein_rate(const MomentFunction& mf, double p) {
    if (p < 1.0) throw std::invalid_argument("wasserstein_rate: p >= 1 required");
    const double h = mf.h(p).value;
    if (h >= 1.0) throw std::invalid_argument("wasserstein_rate: h(p) >= 1");
    return std::pow(h, 1.0 / p);
}

GcltScaling gclt_scaling(double alpha, double k, double x_bar) {
    if (alpha <= 0.0) throw std::invalid_argument("gclt_scaling: alpha > 0");
    if (alpha == 1.0) throw std::invalid_argument("gclt_scaling: alpha = 1 unsupported");
    if (alpha < 1.0) return {std::pow(k, -1.0 / alpha), 0.0};
    if (alpha < 2.0)
        return {std::pow(k, -1.0 / alpha), std::pow(k, 1.0 - 1.0 / alpha) * x_bar};
    if (alpha == 2.0) return {1.0 / std::sqrt(k * std::log(k)), k * x_bar};
    return {std::pow(k, -0.5), k * x_bar};
}

// ----- Perturbation expansion check -----

PerturbationCheck perturbation_check(const ProblemSpec& spec, const StepDraw& draw,
                                     const Laplacian& lap,
                                     const std::vector<double>& deltas, double s) {
    const int n = spec.n_nodes;
    const double eta = spec.eta;
    PerturbationCheck out;
    // Locate the attaining (node, eigenvalue) pair of I - eta H and check for
    // near-ties of the top singular value.
    double m = -1.0, second = -1.0, lambda_star = 0.0;
    int i_star = 0;
    for (int i = 0; i < n; ++i) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(draw.h_blocks[size_t(i)],
                                                              Eigen::EigenvaluesOnly);
        for (Eigen::Index j = 0; j < solver.eigenvalues().size(); ++j) {
            const double lambda = solver.eigenvalues()(j);
            const double cand = std::fabs(1.0 - eta * lambda);
            if (cand > m) {
                second = m;
                m = cand;
                lambda_star = lambda;
                i_star = i;
            } else if (cand > second) {
                second = cand;
            }
        }
    }
    // The first-order formula tracks a single attaining pair; once the mixing
    // perturbation (at most ~ delta * L_max * m per node) is comparable to the
    // gap to the runner-up, the attaining node can switch and the expansion
    // point is wrong. Flag such draws for resampling.
    const double delta_max = *std::max_element(deltas.begin(), deltas.end());
    const double l_max = lap.matrix.diagonal().maxCoeff();
    if (second >= 0.0 && m - second < 2.0 * delta_max * l_max * std::max(m, 1.0)) {
        out.degenerate = true;
        return out;
    }
    const double sign = 1.0 - eta * lambda_star > 0.0 ? 1.0 : -1.0;
    const double l_ii = lap.matrix(i_star, i_star);
    for (double delta : deltas) {
        const MixingMatrix w = mixing_matrix(lap, delta);
        const double norm = operator_norm(make_step_operator(spec, w, draw).dense());
        const double predicted =
            std::pow(m, s) - s * delta * sign * l_ii * std::pow(m, s - 1.0);
        out.residual_over_delta.push_back(std::fabs(std::pow(norm, s) - predicted) / delta);
    }
    return out;
}

}  // namespace htsim
