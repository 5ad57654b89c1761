// Acceptance checks for the simulation + analysis toolkit. Each criterion is
// run as `acceptance <1..10>` and prints one [PASS]/[FAIL] line per sub-check;
// the exit code is 0 iff every sub-check passed.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "htsim/scenario.hpp"
#include "htsim/stable.hpp"
#include "htsim/theory.hpp"

using namespace htsim;

namespace {

int g_failures = 0;

void check(bool ok, const std::string& label) {
    std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", label.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

void check_close(double got, double want, double tol, const std::string& label) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s (got %.6g, want %.6g +- %.2g)", label.c_str(),
                  got, want, tol);
    check(std::isfinite(got) && std::fabs(got - want) <= tol, buf);
}

struct CellStats {
    std::vector<double> alpha, raw, div;
    double med_alpha() const { return median(alpha); }
    double med_raw() const { return median(raw); }
    double med_div() const { return median(div); }
    double spread() const {
        std::vector<double> finite;
        for (double a : alpha)
            if (std::isfinite(a)) finite.push_back(a);
        if (finite.size() < 2) return 0.0;
        auto mm = std::minmax_element(finite.begin(), finite.end());
        return (*mm.second - *mm.first) / 2.0;
    }
};

CellStats run_cell(const Scenario& s, double point, RunMode mode,
                   const std::vector<std::uint64_t>& seeds) {
    CellStats out;
    for (std::uint64_t seed : seeds) {
        RunConfig c = cell_config(s, point, mode, seed, 1);
        IterateEnsemble ens = run_ensemble(c);
        out.div.push_back(ens.divergence_fraction());
        try {
            TailIndexEstimate est = estimate_ensemble(ens);
            out.alpha.push_back(est.alpha_hat);
            out.raw.push_back(est.alpha_raw);
        } catch (const std::exception&) {
            out.alpha.push_back(std::numeric_limits<double>::quiet_NaN());
            out.raw.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return out;
}

// A plain decentralized scenario with no sweep, for ad-hoc cells.
Scenario flat_scenario(int d, int n, int b, double eta, double sigma_y, GraphKind g,
                       double delta, int k, int k0, int r) {
    Scenario s;
    s.name = "acceptance";
    s.spec = ProblemSpec::make(d, n, b, eta, 1.0, sigma_y);
    s.graph = g;
    s.delta = delta;
    s.total_steps = k;
    s.burn_in = k0;
    s.ensemble_size = r;
    s.with_theory = false;
    return s;
}

// ----- 1. topology spectra against closed forms -----

bool spectrum_matches(const Eigen::VectorXd& got, std::vector<double> want,
                      double tol = 1e-10) {
    std::sort(want.begin(), want.end());
    if (got.size() != Eigen::Index(want.size())) return false;
    for (Eigen::Index i = 0; i < got.size(); ++i)
        if (std::fabs(got(i) - want[size_t(i)]) > tol) return false;
    return true;
}

void criterion_1() {
    std::puts("criterion 1: graph Laplacians match their closed-form spectra");
    check(spectrum_matches(laplacian(build_graph(GraphKind::Complete, 8)).eigenvalues,
                           {0, 8, 8, 8, 8, 8, 8, 8}),
          "complete K_8: {0, N^(x7)}");
    check(spectrum_matches(laplacian(build_graph(GraphKind::Star, 6)).eigenvalues,
                           {0, 1, 1, 1, 1, 6}),
          "star S_6: {0, 1^(x4), N}");
    std::vector<double> cyc;
    for (int k = 0; k < 6; ++k) cyc.push_back(2.0 - 2.0 * std::cos(2.0 * M_PI * k / 6.0));
    check(spectrum_matches(laplacian(build_graph(GraphKind::Cycle, 6)).eigenvalues, cyc),
          "cycle C_6: 2 - 2 cos(2 pi k / N)");
    std::vector<double> pth;
    for (int k = 0; k < 4; ++k) pth.push_back(2.0 - 2.0 * std::cos(M_PI * k / 4.0));
    check(spectrum_matches(laplacian(build_graph(GraphKind::Path, 4)).eigenvalues, pth),
          "path P_4: 2 - 2 cos(pi k / N)");
    check(spectrum_matches(laplacian(build_graph(GraphKind::Hypercube, 8)).eigenvalues,
                           {0, 2, 2, 2, 4, 4, 4, 6}),
          "hypercube Q_3: {2k with binomial multiplicity}");
    check(spectrum_matches(laplacian(build_graph(GraphKind::Bipartite, 6)).eigenvalues,
                           {0, 3, 3, 3, 3, 6}),
          "bipartite K_{3,3}: {0, N/2^(x4), N}");
    check_close(max_delta(laplacian(build_graph(GraphKind::Complete, 4))), 0.5, 1e-12,
                "delta stability bound 2/lambda_max for K_4");
    const MixingMatrix w =
        mixing_matrix(laplacian(build_graph(GraphKind::Complete, 3)), 0.1);
    check_close(w.matrix(0, 0), 0.8, 1e-12, "W diagonal of K_3 at delta = 0.1");
    bool rows_ok = true;
    for (int i = 0; i < 3; ++i) rows_ok = rows_ok && std::fabs(w.matrix.row(i).sum() - 1.0) < 1e-12;
    check(rows_ok, "mixing matrix rows sum to one");
}

// ----- 2. tail estimator on alpha-stable ground truth -----

void criterion_2() {
    std::puts("criterion 2: estimator recovers known stable indices within 0.1");
    const int k1 = 1000, k2 = 1000;
    for (double alpha : {0.8, 1.2, 1.5, 1.8, 2.0}) {
        Xoshiro256pp rng(std::uint64_t(1000 * alpha));
        std::vector<double> samples(size_t(k1) * k2);
        for (double& x : samples) x = sample_alpha_stable(rng, alpha);
        const ScalarTailEstimate est = estimate_alpha_scalar(samples, k1, k2);
        char label[64];
        std::snprintf(label, sizeof(label), "alpha = %.1f at K = 10^6", alpha);
        check_close(est.alpha, alpha, 0.1, label);
    }
    Xoshiro256pp rng(77);
    std::vector<double> samples(40000);
    for (double& x : samples) x = sample_alpha_stable(rng, 1.3);
    std::vector<double> scaled = samples;
    for (double& x : scaled) x *= 1e6;
    const double a = estimate_alpha_scalar(samples, 200, 200).alpha_raw;
    const double b = estimate_alpha_scalar(scaled, 200, 200).alpha_raw;
    check(std::fabs(a - b) < 1e-10, "estimate invariant under rescaling by 10^6");
}

// ----- 3. d = 1 theory: quadrature vs direct Monte Carlo -----

void criterion_3() {
    std::puts("criterion 3: closed-form d=1 tail theory agrees with Monte Carlo");
    for (double eta : {0.3, 0.5, 0.8}) {
        const DisLaw one = dis_law(eta, 1, ScaledChi2::batch_mean(1, 1.0));
        check_close(one.moment(2.0).value, 1.0 - 2.0 * eta + 3.0 * eta * eta, 1e-6,
                    "single-node h(2) = 1 - 2 eta + 3 eta^2 at eta = " + std::to_string(eta));
    }
    {
        const DisLaw law = dis_law(2.0 / 3.0, 1, ScaledChi2::batch_mean(1, 1.0));
        const AlphaRoot r = alpha_dis_root(law);
        check(r.status == RootStatus::Root && std::fabs(r.alpha - 2.0) < 1e-3,
              "alpha = 2 exactly at the variance-onset stepsize 2/3");
    }
    {
        const auto kit = DistributionKit::gaussian(1, 1.0);
        const double tau = 2.0 / kit.a2.quantile(std::pow(2.0, -1.0 / 30.0));
        check(std::fabs(e_term(tau, 30, kit)) < 0.02 && e_term(0.8 * tau, 30, kit) < 0.0 &&
                  e_term(1.25 * tau, 30, kit) > 0.0,
              "sign term e(eta, N) crosses zero at tau (up to the min-term offset)");
    }
    // Ten (N, eta) points inside the stability window of the max-norm law.
    struct Pt {
        int n;
        double eta;
    };
    std::vector<Pt> grid;
    for (int i = 0; i < 7; ++i) grid.push_back({1, 0.5 + 0.1 * i});
    for (double eta : {0.34, 0.37, 0.40}) grid.push_back({3, eta});
    int agreeing = 0, total = 0;
    for (size_t i = 0; i < grid.size(); ++i) {
        const DisLaw law = dis_law(grid[i].eta, grid[i].n, ScaledChi2::batch_mean(1, 1.0));
        const AlphaRoot quad = alpha_dis_root(law);
        ProblemSpec spec = ProblemSpec::make(1, grid[i].n, 1, grid[i].eta, 1.0, 0.2);
        // The h-curve is shallow near its root at small eta, so the N = 3
        // points get more draws to keep the root error under the tolerance.
        const int n_mc = grid[i].n == 1 ? 200000 : 1000000;
        const MomentFunction mf = make_moment_function(
            spec, MixingMatrix::identity(grid[i].n), n_mc, 500 + std::uint64_t(i));
        const AlphaRoot mc = alpha_hat_root(mf);
        if (quad.status == RootStatus::Root && mc.status == RootStatus::Root) {
            ++total;
            if (std::fabs(quad.alpha - mc.alpha) < 0.05) ++agreeing;
        }
    }
    char label[96];
    std::snprintf(label, sizeof(label),
                  "MC root within 0.05 of the quadrature root (%d/%d grid points)", agreeing,
                  total);
    check(total == 10 && agreeing == total, label);
}

// ----- 4. empirical monotonicity in eta and batch size -----

void criterion_4() {
    std::puts("criterion 4: estimated tails heavier with larger eta, lighter with larger b");
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    {
        Scenario s = preset("sweep-eta");
        std::vector<CellStats> cells;
        std::vector<double> etas{0.5, 0.9, 1.3};
        for (double eta : etas) cells.push_back(run_cell(s, eta, RunMode::Dis, seeds));
        double max_spread = 0.0;
        for (const auto& c : cells) max_spread = std::max(max_spread, c.spread());
        bool mono = true;
        for (size_t i = 1; i < cells.size(); ++i)
            mono = mono && cells[i].med_alpha() < cells[i - 1].med_alpha() - max_spread;
        char label[128];
        std::snprintf(label, sizeof(label),
                      "alpha decreasing in eta: %.3f > %.3f > %.3f (seed half-spread %.3f)",
                      cells[0].med_alpha(), cells[1].med_alpha(), cells[2].med_alpha(),
                      max_spread);
        check(mono, label);
    }
    {
        Scenario s = preset("sweep-batch");
        std::vector<CellStats> cells;
        for (double b : s.sweep_values) cells.push_back(run_cell(s, b, RunMode::Dis, seeds));
        bool nondecreasing = true;
        for (size_t i = 1; i < cells.size(); ++i) {
            const double tol = cells[i].spread() + cells[i - 1].spread();
            nondecreasing =
                nondecreasing && cells[i].med_alpha() >= cells[i - 1].med_alpha() - tol;
        }
        const double gap = cells.back().med_alpha() - cells.front().med_alpha();
        double max_spread = std::max(cells.front().spread(), cells.back().spread());
        char label[160];
        std::snprintf(label, sizeof(label),
                      "alpha increasing in b: %.3f -> %.3f -> %.3f -> %.3f (gap %.3f, "
                      "half-spread %.3f)",
                      cells[0].med_alpha(), cells[1].med_alpha(), cells[2].med_alpha(),
                      cells[3].med_alpha(), gap, max_spread);
        check(nondecreasing && gap > std::max(0.2, max_spread), label);
    }
}

// ----- 5. network effects: Dis vs C, and the tau sign flip -----

void criterion_5() {
    std::puts("criterion 5: decentralization cost and the tau threshold");
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    {
        // Pooling lightens the tail: the per-node proxy alpha(b) vs the
        // centralized alpha(bN), with the gap growing in N.
        const double eta = 1.9;
        auto root_at = [&](int batch) {
            const DisLaw law = dis_law(eta, 1, ScaledChi2::batch_mean(batch, 1.0));
            return alpha_dis_root(law);
        };
        const AlphaRoot solo = root_at(1);
        std::vector<double> gaps;
        bool ok = solo.status == RootStatus::Root;
        for (int n : {2, 5, 10}) {
            const AlphaRoot pooled = root_at(n);
            ok = ok && pooled.status == RootStatus::Root && pooled.alpha > solo.alpha;
            gaps.push_back(pooled.alpha - solo.alpha);
        }
        char label[128];
        std::snprintf(label, sizeof(label),
                      "alpha(b) < alpha(bN) with gap growing in N: %.3f < %.3f < %.3f",
                      gaps[0], gaps[1], gaps[2]);
        check(ok && gaps[0] < gaps[1] && gaps[1] < gaps[2], label);
    }
    {
        // The same ordering in simulation: isolated nodes vs pooled batches.
        Scenario s =
            flat_scenario(1, 10, 1, 0.9, 0.2, GraphKind::Complete, 0.0, 2000, 400, 400);
        const CellStats dis = run_cell(s, 0.9, RunMode::Dis, seeds);
        const CellStats cen = run_cell(s, 0.9, RunMode::C, seeds);
        char label[96];
        std::snprintf(label, sizeof(label),
                      "empirical alpha_Dis %.3f < alpha_C %.3f at eta = 0.9, N = 10",
                      dis.med_alpha(), cen.med_alpha());
        check(dis.med_alpha() < cen.med_alpha() - 0.2, label);
    }
    {
        // The first-order network correction flips sign with the stepsize:
        // b = 16, N = 3 keeps the joint max-norm law stable on both sides of
        // the e(eta, N) = 0 threshold.
        const int n = 3, b = 16;
        const auto kit = DistributionKit::gaussian(b, 1.0);
        const std::vector<double> l_diag(static_cast<size_t>(n), 2.0);  // complete K_3
        bool flip_ok = true;
        for (double eta : {0.8, 1.3}) {
            const DisLaw law = dis_law(eta, n, kit.mean);
            const AlphaRoot r = alpha_dis_root(law);
            if (r.status != RootStatus::Root) {
                flip_ok = false;
                break;
            }
            const ExpansionReport er = expansion_general_b(eta, n, b, l_diag, r.alpha, kit);
            const bool lightens = eta < 1.0;  // e < 0 at 0.8, e > 0 at 1.3
            flip_ok = flip_ok && (er.numerator < 0.0) == lightens &&
                      (er.regime == (lightens ? Regime::NetworkLightens
                                              : Regime::NetworkHeaviens)) &&
                      ((er.alpha_at(0.01) > r.alpha) == lightens);
        }
        check(flip_ok,
              "expansion flips from lightening to heaviening across the sign threshold");
    }
    {
        // Large stepsize: even the connected network is heavier than pooling.
        Scenario s =
            flat_scenario(1, 10, 1, 1.2, 0.2, GraphKind::Complete, 0.01, 2000, 400, 400);
        const CellStats de = run_cell(s, 1.2, RunMode::DE, seeds);
        const CellStats cen = run_cell(s, 1.2, RunMode::C, seeds);
        char label[96];
        std::snprintf(label, sizeof(label), "alpha_DE %.3f < alpha_C %.3f at eta = 1.2",
                      de.med_alpha(), cen.med_alpha());
        check(de.med_alpha() < cen.med_alpha() - 0.2, label);
    }
}

// ----- 6. the three published case studies at their endpoints -----

void criterion_6() {
    std::puts("criterion 6: case-study endpoints reproduce the published orderings");
    {
        const Scenario s = preset("case1");
        const CellStats de_lo = run_cell(s, 0.2, RunMode::DE, s.seeds);
        const CellStats dis_lo = run_cell(s, 0.2, RunMode::Dis, s.seeds);
        char lo_label[128];
        std::snprintf(lo_label, sizeof(lo_label),
                      "case1 eta=0.2: finite-variance plateau (DE %.3f, Dis %.3f near 2)",
                      de_lo.med_alpha(), dis_lo.med_alpha());
        check(de_lo.med_alpha() > 1.85 && de_lo.med_alpha() <= 2.0 &&
                  dis_lo.med_alpha() > 1.85 && dis_lo.med_alpha() <= 2.0,
              lo_label);
        const CellStats de_hi = run_cell(s, 1.2, RunMode::DE, s.seeds);
        const CellStats dis_hi = run_cell(s, 1.2, RunMode::Dis, s.seeds);
        char label[128];
        std::snprintf(label, sizeof(label),
                      "case1 eta=1.2: network heavier than isolation (DE %.3f < Dis %.3f < 2)",
                      de_hi.med_alpha(), dis_hi.med_alpha());
        check(de_hi.med_alpha() < dis_hi.med_alpha() && dis_hi.med_alpha() < 2.0, label);
    }
    {
        const Scenario s = preset("case2");
        const std::vector<std::uint64_t> seeds{1, 2, 3};
        const CellStats de_lo = run_cell(s, 0.60, RunMode::DE, seeds);
        const CellStats dis_lo = run_cell(s, 0.60, RunMode::Dis, seeds);
        char label[160];
        std::snprintf(label, sizeof(label),
                      "case2 eta=0.60: isolation measurably heavier (Dis %.3f < 1.5 and "
                      "0.2 below DE %.3f)",
                      dis_lo.med_alpha(), de_lo.med_alpha());
        // At desk-scale ensembles both estimates sit on the clipping plateau,
        // so the published gap is not resolvable; the check stays honest.
        check(dis_lo.med_alpha() < 1.5 &&
                  dis_lo.med_alpha() < de_lo.med_alpha() - 0.2,
              label);
        const CellStats de_hi = run_cell(s, 0.95, RunMode::DE, seeds);
        const CellStats dis_hi = run_cell(s, 0.95, RunMode::Dis, seeds);
        std::snprintf(label, sizeof(label),
                      "case2 eta=0.95: DE divergent (div %.2f), Dis stable (div %.2f)",
                      de_hi.med_div(), dis_hi.med_div());
        check(de_hi.med_div() == 1.0 && dis_hi.med_div() == 0.0, label);
    }
    {
        const Scenario s = preset("case3");
        const CellStats de_lo = run_cell(s, 0.11, RunMode::DE, s.seeds);
        const CellStats dis_lo = run_cell(s, 0.11, RunMode::Dis, s.seeds);
        const CellStats c_lo = run_cell(s, 0.11, RunMode::C, s.seeds);
        char label[160];
        std::snprintf(label, sizeof(label),
                      "case3 eta=0.11: only isolation already heavy (Dis %.3f < DE %.3f, C %.3f near 2)",
                      dis_lo.med_alpha(), de_lo.med_alpha(), c_lo.med_alpha());
        check(dis_lo.med_alpha() < de_lo.med_alpha() - 0.1 &&
                  dis_lo.med_alpha() < 1.95 && de_lo.med_alpha() > 1.85 &&
                  c_lo.med_alpha() > 1.85,
              label);
        const CellStats de_hi = run_cell(s, 0.16, RunMode::DE, s.seeds);
        const CellStats dis_hi = run_cell(s, 0.16, RunMode::Dis, s.seeds);
        const CellStats c_hi = run_cell(s, 0.16, RunMode::C, s.seeds);
        std::snprintf(label, sizeof(label),
                      "case3 eta=0.16: divergence ordering Dis %.2f > DE %.2f > C %.2f",
                      dis_hi.med_div(), de_hi.med_div(), c_hi.med_div());
        check(dis_hi.med_div() >= 0.9 && de_hi.med_div() > c_hi.med_div() + 0.05 &&
                  dis_hi.med_div() > de_hi.med_div() + 0.05 && c_hi.med_div() <= 0.05,
              label);
    }
}

// ----- 7. sign-term contours -----

void criterion_7() {
    std::puts("criterion 7: contour maps locate the network-effect regions");
    {
        std::vector<double> etas;
        for (int i = 0; i < 24; ++i) etas.push_back(0.15 * std::pow(40.0, i / 23.0));
        const std::vector<int> ns{2, 5, 10, 20, 40};
        const ContourGrid g = contour_d1(etas, ns, 1, 1.0);
        bool mono = true;
        for (size_t i = 0; i < ns.size(); ++i)
            for (size_t j = 1; j < etas.size(); ++j)
                mono = mono && g.value(Eigen::Index(i), Eigen::Index(j)) >
                                   g.value(Eigen::Index(i), Eigen::Index(j - 1));
        check(mono, "d=1 sign field strictly increasing in eta at every N");
        // tau(N) is the max-only closed form; the min-term offsets the true
        // zero at small N and washes out as N grows.
        const auto kit = DistributionKit::gaussian(1, 1.0);
        bool curve_ok = !g.zero_curve.empty();
        int probes = 0;
        double prev_off = std::numeric_limits<double>::infinity();
        for (const auto& [eta_star, n_val] : g.zero_curve) {
            const int n_int = int(std::lround(n_val));
            if (std::fabs(n_val - n_int) > 1e-9) continue;  // interpolated in N
            const double tau = 2.0 / kit.a2.quantile(std::pow(2.0, -1.0 / n_int));
            const double off = std::fabs(eta_star - tau) / tau;
            curve_ok = curve_ok && off <= prev_off + 0.01 && (n_int < 5 || off < 0.05);
            prev_off = off;
            ++probes;
        }
        char label[96];
        std::snprintf(label, sizeof(label),
                      "d=1 zero curve converges to tau(N) (%d grid-row crossings checked)",
                      probes);
        check(curve_ok && probes >= 4, label);
    }
    {
        std::vector<double> etas;
        for (int i = 0; i < 8; ++i) etas.push_back(0.1 * std::pow(10.0, i / 7.0));
        const std::vector<int> ns{2, 12, 22, 32};
        const ContourGrid g = contour_general_d(etas, ns, 100, 100, 1.0, 400, 2026);
        int neg = 0, pos = 0, pos_rho_pos = 0;
        for (Eigen::Index i = 0; i < g.value.rows(); ++i)
            for (Eigen::Index j = 0; j < g.value.cols(); ++j) {
                if (g.value(i, j) < 0.0) ++neg;
                if (g.value(i, j) > 0.0) {
                    ++pos;
                    if (g.rho(i, j) > 0.0) ++pos_rho_pos;
                }
            }
        char label[128];
        std::snprintf(label, sizeof(label),
                      "d=100 grid spans both regions (%d negative, %d positive cells)", neg,
                      pos);
        check(neg >= 4 && pos >= 4, label);
        std::snprintf(label, sizeof(label),
                      "positive-sign region overlaps instability (%d of %d cells with rho > 0)",
                      pos_rho_pos, pos);
        check(pos > 0 && pos_rho_pos > 0 && pos_rho_pos <= pos, label);
    }
}

// ----- 8. moment bounds and coupled contraction -----

void criterion_8() {
    std::puts("criterion 8: transient moment bounds dominate the simulated moments");
    const int n = 3, b = 1, k_max = 200;
    const double eta = 0.15;
    for (double p : {0.8, 1.5}) {
        const DisLaw law = dis_law(eta, n, ScaledChi2::batch_mean(b, 1.0));
        const double h_p = law.moment(p).value;
        ProblemSpec spec = ProblemSpec::make(1, n, b, eta, 1.0, 0.2);
        // e0 and E||q||^p by direct Monte Carlo over the known input laws.
        Xoshiro256pp rng(404);
        double e0 = 0.0, eq1 = 0.0;
        const int n_mc = 40000;
        for (int i = 0; i < n_mc; ++i) {
            Eigen::VectorXd x0(n);
            for (int j = 0; j < n; ++j) x0(j) = rng.uniform(-10.0, 10.0);
            e0 += std::pow(x0.norm(), p);
            const StepDraw draw = sample_step(spec, rng);
            Eigen::VectorXd q(n);
            for (int j = 0; j < n; ++j) q(j) = draw.q_blocks[size_t(j)](0);
            eq1 += std::pow(q.norm(), p);
        }
        e0 /= n_mc;
        eq1 /= n_mc;
        const AlphaRoot r = alpha_dis_root(law);
        const double alpha_hat =
            r.status == RootStatus::Root ? r.alpha : 64.0;  // light regime: any p works
        const MomentBound mb = moment_bound(h_p, p, k_max, e0, eq1, alpha_hat);

        RunConfig c;
        c.spec = spec;
        c.mixing = MixingMatrix::identity(n);
        c.mode = RunMode::Dis;
        c.total_steps = k_max + 10;
        c.burn_in = 1;
        c.ensemble_size = 2000;
        c.trace_steps = k_max;
        c.trace_p = p;
        c.master_seed = 31;
        const IterateEnsemble ens = run_ensemble(c);
        bool dominated = true;
        int worst_k = -1;
        for (int k = 1; k <= k_max; ++k) {
            double mean = 0.0;
            for (const auto& r : ens.runs) mean += r.moment_trace[size_t(k - 1)];
            mean /= double(ens.runs.size());
            if (mean > mb.bound_at_k[size_t(k)] * 1.02) {
                dominated = false;
                worst_k = k;
            }
        }
        char label[128];
        std::snprintf(label, sizeof(label),
                      "p = %.1f (case %d, h_p = %.3f): bound holds for k = 1..%d%s", p,
                      mb.case_tag, h_p, k_max,
                      dominated ? "" : (" (violated at k = " + std::to_string(worst_k)).c_str());
        check(h_p < 1.0 && dominated, label);
    }
    {
        // Synchronously coupled chains contract at least as fast as h(p).
        const double p = 1.0;
        RunConfig c;
        c.spec = ProblemSpec::make(1, 4, 2, 0.2, 1.0, 0.3);
        c.mixing = mixing_matrix(laplacian(build_graph(GraphKind::Complete, 4)), 0.1);
        c.mode = RunMode::DE;
        c.total_steps = 80;
        c.burn_in = 1;
        c.ensemble_size = 2000;
        c.master_seed = 77;
        const std::vector<double> trace = run_coupled(c, p);
        const MomentFunction mf = make_moment_function(c.spec, c.mixing, 100000, 19);
        const double rate_emp =
            std::pow(trace[60] / trace[10], 1.0 / 50.0);
        const double rate_bound = mf.h(p).value + 3.0 * mf.h(p).stderr_;
        char label[96];
        std::snprintf(label, sizeof(label),
                      "coupled contraction rate %.4f <= h(1) bound %.4f", rate_emp,
                      rate_bound);
        check(rate_emp <= rate_bound, label);
    }
}

// ----- 9. first-order perturbation expansion -----

void criterion_9() {
    std::puts("criterion 9: expansion residual is second order in delta");
    const std::vector<double> deltas{1e-2, 1e-3, 1e-4};
    struct Setup {
        int d, n;
        GraphKind g;
        const char* label;
    };
    for (const Setup& su : {Setup{1, 4, GraphKind::Complete, "d=1, K_4"},
                            Setup{3, 3, GraphKind::Star, "d=3, S_3"}}) {
        ProblemSpec spec = ProblemSpec::make(su.d, su.n, su.d, 0.4, 1.0, 0.2);
        const Laplacian lap = laplacian(build_graph(su.g, su.n));
        Xoshiro256pp rng(su.d * 101);
        int checked = 0, decaying = 0;
        for (int attempt = 0; attempt < 200 && checked < 20; ++attempt) {
            const StepDraw draw = sample_step(spec, rng);
            const PerturbationCheck pc = perturbation_check(spec, draw, lap, deltas, 1.6);
            if (pc.degenerate) continue;
            ++checked;
            if (pc.residual_over_delta[1] < pc.residual_over_delta[0] / 3.0 &&
                pc.residual_over_delta[2] < pc.residual_over_delta[1] / 3.0)
                ++decaying;
        }
        char label[96];
        std::snprintf(label, sizeof(label),
                      "%s: residual/delta falls 3x per decade on %d/%d draws", su.label,
                      decaying, checked);
        check(checked == 20 && decaying == 20, label);
    }
}

// ----- 10. finite-k moments and Lyapunov exponents under their limits -----

void criterion_10() {
    std::puts("criterion 10: h(s) and rho dominate their finite-k counterparts");
    struct Case {
        int d, n, b;
        double eta;
        GraphKind g;
        double delta;
    };
    const std::vector<Case> cases{
        {1, 2, 1, 0.3, GraphKind::Complete, 0.3}, {1, 5, 2, 0.5, GraphKind::Star, 0.1},
        {2, 3, 2, 0.2, GraphKind::Cycle, 0.2},    {2, 4, 3, 0.35, GraphKind::Complete, 0.1},
        {3, 2, 3, 0.15, GraphKind::Complete, 0.4},{1, 8, 1, 0.7, GraphKind::Hypercube, 0.2},
        {2, 6, 2, 0.25, GraphKind::Bipartite, 0.15},{3, 4, 4, 0.2, GraphKind::Star, 0.2},
        {1, 6, 3, 0.9, GraphKind::Barbell, 0.1},  {2, 4, 2, 0.4, GraphKind::Path, 0.2}};
    int h_ok = 0, rho_ok = 0;
    for (size_t i = 0; i < cases.size(); ++i) {
        const Case& cs = cases[i];
        ProblemSpec spec = ProblemSpec::make(cs.d, cs.n, cs.b, cs.eta, 1.0, 0.2);
        const MixingMatrix w =
            mixing_matrix(laplacian(build_graph(cs.g, cs.n)), cs.delta);
        const MomentFunction mf = make_moment_function(spec, w, 50000, 7000 + i);
        const double s = 1.4;
        const MomentEstimate hk = h_finite_k_mc(spec, w, s, 12, 4000, 8000 + i);
        const MomentEstimate h1 = mf.h(s);
        if (hk.value <= h1.value + 3.0 * std::hypot(hk.stderr_, h1.stderr_) + 1e-9) ++h_ok;
        const MomentEstimate lyap = lyapunov_mc(spec, w, 200, 400, 9000 + i);
        const MomentEstimate rho = mf.rho();
        if (lyap.value <= rho.value + 3.0 * std::hypot(lyap.stderr_, rho.stderr_) + 1e-9)
            ++rho_ok;
    }
    char label[96];
    std::snprintf(label, sizeof(label),
                  "(E||M_k...M_1||^s)^(1/k) <= h(s) on %d/10 random specs", h_ok);
    check(h_ok == 10, label);
    std::snprintf(label, sizeof(label), "finite-k Lyapunov <= E log||M|| on %d/10 random specs",
                  rho_ok);
    check(rho_ok == 10, label);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: acceptance <criterion 1..10>\n");
        return 2;
    }
    const int crit = std::atoi(argv[1]);
    switch (crit) {
        case 1: criterion_1(); break;
        case 2: criterion_2(); break;
        case 3: criterion_3(); break;
        case 4: criterion_4(); break;
        case 5: criterion_5(); break;
        case 6: criterion_6(); break;
        case 7: criterion_7(); break;
        case 8: criterion_8(); break;
        case 9: criterion_9(); break;
        case 10: criterion_10(); break;
        default:
            std::fprintf(stderr, "usage: acceptance <criterion 1..10>\n");
            return 2;
    }
    return g_failures == 0 ? 0 : 1;
}
