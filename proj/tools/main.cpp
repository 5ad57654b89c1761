#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "htsim/scenario.hpp"
#include "htsim/stable.hpp"
#include "htsim/theory.hpp"

namespace fs = std::filesystem;
using namespace htsim;

namespace {

// Exit code 3: a numerical procedure (root finding, quadrature) failed.
struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> log_grid(double lo, double hi, int points) {
    std::vector<double> g(size_t(points), 0.0);
    for (int i = 0; i < points; ++i)
        g[size_t(i)] = points == 1 ? lo
                                   : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) *
                                                                 double(i) / double(points - 1));
    return g;
}

void print_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
    char buf[32];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%9.5f", m(i, j));
            os << buf << (j + 1 == m.cols() ? "" : " ");
        }
        os << "\n";
    }
}

// ----- topology -----

struct TopologyArgs {
    std::string kind;
    int n = 4;
    double delta = 0.0;
    std::string out;
};

void run_topology(const TopologyArgs& a) {
    const Graph g = build_graph(graph_kind_from_string(a.kind), a.n);
    const Laplacian lap = laplacian(g);
    const MixingMatrix w = mixing_matrix(lap, a.delta);
    std::cout << "graph      " << to_string(g.kind) << "  N=" << a.n << "\n";
    std::cout << "connected  " << (is_connected(g) ? "yes" : "no") << "\n";
    std::cout << "max_delta  " << max_delta(lap) << "\n";
    std::cout << "delta      " << a.delta << "\n";
    if (a.n <= 16) {
        std::cout << "W = I - delta L:\n";
        print_matrix(std::cout, w.matrix);
    }
    std::cout << "W spectrum (descending):";
    for (Eigen::Index i = 0; i < w.eigenvalues.size(); ++i)
        std::cout << " " << w.eigenvalues(i);
    std::cout << "\n";
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        const std::string base = a.out + "/" + a.kind + "_n" + std::to_string(a.n);
        std::ofstream wm(base + "_w.csv");
        write_matrix_csv(wm, w.matrix);
        std::ofstream sp(base + "_spectrum.csv");
        write_matrix_csv(sp, w.eigenvalues.transpose());
        std::cout << "wrote " << base << "_w.csv, " << base << "_spectrum.csv\n";
    }
}

// ----- run -----

struct RunArgs {
    std::string scenario;
    std::string out = "out";
    int jobs = 1;
    bool paper_scale = false;
    bool no_theory = false;
    std::vector<std::uint64_t> seeds;
};

Scenario resolve_scenario(const std::string& name_or_path) {
    for (const std::string& p : preset_names())
        if (p == name_or_path) return preset(p);
    if (fs::exists(name_or_path)) return load_scenario_file(name_or_path);
    throw ScenarioError("'" + name_or_path +
                        "' is neither a preset nor a scenario file; presets: " +
                        [] {
                            std::string s;
                            for (const auto& p : preset_names()) s += p + " ";
                            return s;
                        }());
}

void run_run(const RunArgs& a) {
    Scenario s = resolve_scenario(a.scenario);
    if (a.paper_scale) s.scale_to_paper();
    if (!a.seeds.empty()) s.seeds = a.seeds;
    if (a.no_theory) s.with_theory = false;
    s.validate();
    fs::create_directories(a.out);

    const auto rows = run_scenario(s, a.jobs, &std::cerr);

    const std::string base = a.out + "/" + s.name;
    {
        std::ofstream csv(base + ".csv");
        write_rows_csv(csv, rows);
    }
    {
        std::ofstream svg(base + ".svg");
        write_sweep_svg(svg, s, rows);
    }
    {
        std::ofstream cfg(base + ".config.json");
        cfg << scenario_to_json(s).dump(2) << "\n";
    }
    {
        json reports = json::array();
        for (double p : s.points()) reports.push_back(point_report(s, p, rows));
        std::ofstream rep(base + ".report.json");
        rep << reports.dump(2) << "\n";
    }

    // Console summary: median over seeds per (point, mode).
    std::cout << s.name << ": " << rows.size() << " rows\n";
    std::printf("%10s %5s %12s %12s %8s\n", to_string(s.sweep_field), "mode",
                "alpha_median", "alpha_theory", "div");
    for (double point : s.points()) {
        for (RunMode mode : s.modes) {
            std::vector<double> alphas;
            double theory = std::nan(""), div = 0.0;
            for (const ResultRow& r : rows) {
                if (r.mode != std::string(to_string(mode))) continue;
                const double rp = s.sweep_field == SweepField::Batch
                                      ? double(r.b)
                                      : (s.sweep_field == SweepField::Delta ? r.delta : r.eta);
                if (mode != RunMode::DE && s.sweep_field == SweepField::Delta) {
                    // Dis/C rows are delta-independent.
                } else if (std::abs(rp - point) > 1e-12 * std::max(1.0, point)) {
                    continue;
                }
                if (std::isfinite(r.alpha_hat_empirical))
                    alphas.push_back(r.alpha_hat_empirical);
                theory = r.alpha_hat_theory;
                div = std::max(div, r.divergence_fraction);
            }
            std::printf("%10.4g %5s %12s %12s %8.2f\n", point, to_string(mode),
                        alphas.empty() ? "diverged" : csv_num(median(alphas)).c_str(),
                        std::isfinite(theory) ? csv_num(theory).c_str() : "-", div);
        }
    }
    std::cout << "wrote " << base << ".csv/.svg/.config.json/.report.json\n";
}

// ----- contour -----

struct ContourArgs {
    std::string preset;  // d1 | d100 | "" for explicit flags
    int d = 1, b = 1;
    double sigma = 1.0;
    double eta_lo = 0.1, eta_hi = 10.0;
    int eta_points = 40;
    int n_lo = 1, n_hi = 50, n_step = 1;
    int n_mc = 2000;
    std::uint64_t seed = 1;
    std::string out = "out";
};

void run_contour(ContourArgs a) {
    if (a.preset == "d1") {
        a.d = 1;
        a.b = 1;
        a.eta_lo = 0.1;
        a.eta_hi = 10.0;
        a.eta_points = 40;
        a.n_lo = 1;
        a.n_hi = 50;
        a.n_step = 1;
    } else if (a.preset == "d100") {
        // Both regions and the instability line are visible only once eta
        // reaches the scale 2/(lambda_min + lambda_max) of the per-node
        // sample covariance spectrum, about 0.5 at d=b=100.
        a.d = 100;
        a.b = 100;
        a.eta_lo = 0.02;
        a.eta_hi = 1.0;
        a.eta_points = 20;
        a.n_lo = 2;
        a.n_hi = 64;
        a.n_step = 10;
    } else if (!a.preset.empty()) {
        throw ScenarioError("unknown contour preset '" + a.preset + "' (d1 or d100)");
    }
    const auto eta = log_grid(a.eta_lo, a.eta_hi, a.eta_points);
    std::vector<int> ns;
    for (int n = a.n_lo; n <= a.n_hi; n += a.n_step) ns.push_back(n);
    ContourGrid grid = a.d == 1
                           ? contour_d1(eta, ns, a.b, a.sigma)
                           : contour_general_d(eta, ns, a.d, a.b, a.sigma, a.n_mc, a.seed);

    fs::create_directories(a.out);
    const std::string tag = "d" + std::to_string(a.d) + "_b" + std::to_string(a.b);
    const std::string base = a.out + "/contour_" + tag;
    {
        std::ofstream csv(base + ".csv");
        CsvWriter w(csv);
        const bool has_rho = grid.rho.size() > 0;
        if (has_rho)
            w.row({"eta", "n", "sign_term", "rho_dis"});
        else
            w.row({"eta", "n", "sign_term"});
        for (size_t i = 0; i < grid.n.size(); ++i)
            for (size_t j = 0; j < grid.eta.size(); ++j) {
                std::vector<std::string> row = {csv_num(grid.eta[j]),
                                                std::to_string(grid.n[i]),
                                                csv_num(grid.value(Eigen::Index(i),
                                                                   Eigen::Index(j)))};
                if (has_rho)
                    row.push_back(csv_num(grid.rho(Eigen::Index(i), Eigen::Index(j))));
                w.row(row);
            }
    }
    {
        std::ofstream csv(base + "_curves.csv");
        CsvWriter w(csv);
        w.row({"curve", "eta", "n"});
        for (const auto& [e, n] : grid.zero_curve)
            w.row({"sign_zero", csv_num(e), csv_num(n)});
        for (const auto& [e, n] : grid.rho_zero_curve)
            w.row({"rho_zero", csv_num(e), csv_num(n)});
    }
    {
        SvgPlot plot(a.eta_lo, a.eta_hi, double(a.n_lo), double(a.n_hi), /*log_x=*/true);
        plot.set_title("sign term over (eta, N), " + tag);
        plot.set_labels("eta", "N");
        for (size_t i = 0; i < grid.n.size(); ++i) {
            const double n0 = i == 0 ? double(grid.n[i])
                                     : 0.5 * double(grid.n[i - 1] + grid.n[i]);
            const double n1 = i + 1 == grid.n.size()
                                  ? double(grid.n[i])
                                  : 0.5 * double(grid.n[i] + grid.n[i + 1]);
            for (size_t j = 0; j < grid.eta.size(); ++j) {
                const double e0 = j == 0 ? grid.eta[j]
                                         : std::sqrt(grid.eta[j - 1] * grid.eta[j]);
                const double e1 = j + 1 == grid.eta.size()
                                      ? grid.eta[j]
                                      : std::sqrt(grid.eta[j] * grid.eta[j + 1]);
                plot.cell(e0, e1, n0, n1, grid.value(Eigen::Index(i), Eigen::Index(j)));
            }
        }
        plot.polyline(grid.zero_curve, "red", 2.0);
        if (!grid.rho_zero_curve.empty()) plot.polyline(grid.rho_zero_curve, "orange", 2.0);
        std::ofstream svg(base + ".svg");
        plot.render(svg);
    }
    std::cout << "wrote " << base << ".csv, " << base << "_curves.csv, " << base
              << ".svg\n";
}

// ----- thresholds -----

struct ThresholdArgs {
    int n = 30, b = 1;
    double sigma = 1.0;
    double eta_lo = 1e-3, eta_hi = 16.0;
    double eta_ref = 0.5;
    std::string out;
};

void run_thresholds(const ThresholdArgs& a) {
    const ThresholdReport r = thresholds(a.eta_lo, a.eta_hi, a.n, a.b, a.sigma, a.eta_ref);
    std::cout << "tau       " << r.tau << "\n";
    std::cout << "eta_crit  ";
    if (r.eta_crit) std::cout << *r.eta_crit << "\n"; else std::cout << "(outside search range)\n";
    std::cout << "eta_max   ";
    if (r.eta_max) std::cout << *r.eta_max << "\n"; else std::cout << "(outside search range)\n";
    std::cout << "case      ";
    if (r.tail_case) std::cout << to_string(*r.tail_case) << "\n"; else std::cout << "(undetermined)\n";
    std::cout << "sigma^2 threshold at eta=" << r.eta_ref << ": " << r.sigma2_threshold
              << "\n";
    if (!a.out.empty()) {
        json j;
        j["tau"] = r.tau;
        j["eta_crit"] = r.eta_crit ? json(*r.eta_crit) : json();
        j["eta_max"] = r.eta_max ? json(*r.eta_max) : json();
        j["case"] = r.tail_case ? json(to_string(*r.tail_case)) : json();
        j["sigma2_threshold"] = r.sigma2_threshold;
        j["eta_ref"] = r.eta_ref;
        j["n"] = a.n;
        j["b"] = a.b;
        j["sigma"] = a.sigma;
        fs::path p(a.out);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        std::ofstream os(a.out);
        os << j.dump(2) << "\n";
        std::cout << "wrote " << a.out << "\n";
    }
}

// ----- theory -----

struct TheoryArgs {
    int d = 1, n = 1, b = 1;
    double eta = 0.5;
    double sigma = 1.0, sigma_y = 0.2;
    double delta = 0.0;
    std::string graph = "complete";
    std::vector<double> s_values;
    int n_mc = 0;  // 0 = pick a default by dimension
    std::uint64_t seed = 1;
    double tol = 1e-4;
};

void run_theory(const TheoryArgs& a) {
    ProblemSpec spec = ProblemSpec::make(a.d, a.n, a.b, a.eta, a.sigma, a.sigma_y);
    if (a.d == 1 && a.delta == 0.0) {
        const DisLaw law = dis_law(a.eta, a.n, ScaledChi2::batch_mean(a.b, a.sigma));
        std::cout << "method     quadrature (d=1, W=I)\n";
        std::cout << "rho_dis    " << law.rho() << "\n";
        for (double s : a.s_values) {
            const QuadResult q = law.moment(s);
            if (!q.converged) throw NumericalFailure("h(s) quadrature did not converge");
            std::cout << "h(" << s << ")   " << q.value << "  (quad err " << q.error
                      << ")\n";
        }
        const AlphaRoot r = alpha_dis_root(law, a.tol);
        if (r.status == RootStatus::Unstable)
            throw NumericalFailure("no root: rho_dis >= 0 (iterates diverge)");
        if (r.status == RootStatus::Light)
            std::cout << "alpha_dis  > " << kAlphaSMax << " (no root below s_max)\n";
        else
            std::cout << "alpha_dis  " << r.alpha << "  [" << r.alpha_lo << ", "
                      << r.alpha_hi << "]\n";
        return;
    }
    MixingMatrix mixing = MixingMatrix::identity(a.n);
    if (a.delta != 0.0)
        mixing = mixing_matrix(laplacian(build_graph(graph_kind_from_string(a.graph), a.n)),
                               a.delta);
    const int n_mc = a.n_mc > 0 ? a.n_mc
                                : (a.d == 1 ? kDefaultNMcScalar : kDefaultNMcSpectral);
    const MomentFunction mf = make_moment_function(spec, mixing, n_mc, a.seed);
    const MomentEstimate rho = mf.rho();
    std::cout << "method     mc (" << n_mc << " draws)\n";
    std::cout << "rho        " << rho.value << " +- " << rho.stderr_ << "\n";
    for (double s : a.s_values) {
        const MomentEstimate h = mf.h(s);
        std::cout << "h(" << s << ")   " << h.value << " +- " << h.stderr_ << "\n";
    }
    const AlphaRoot r = alpha_hat_root(mf, a.tol);
    if (r.status == RootStatus::Unstable)
        throw NumericalFailure("no root: rho >= 0 (iterates diverge)");
    if (r.status == RootStatus::Light)
        std::cout << "alpha_hat  > " << kAlphaSMax << " (no root below s_max)\n";
    else
        std::cout << "alpha_hat  " << r.alpha << "  [" << r.alpha_lo << ", " << r.alpha_hi
                  << "]\n";
}

// ----- couple -----

struct CoupleArgs {
    int d = 1, n = 4, b = 1;
    double eta = 0.3;
    double sigma = 1.0, sigma_y = 0.2;
    double delta = 0.0;
    std::string graph = "complete";
    double p = 1.0;
    int k = 200;
    int r = 200;
    std::uint64_t seed = 1;
};

void run_couple(const CoupleArgs& a) {
    RunConfig c;
    c.spec = ProblemSpec::make(a.d, a.n, a.b, a.eta, a.sigma, a.sigma_y);
    c.mixing = a.delta == 0.0
                   ? MixingMatrix::identity(a.n)
                   : mixing_matrix(laplacian(build_graph(graph_kind_from_string(a.graph), a.n)),
                                   a.delta);
    c.mode = a.delta == 0.0 ? RunMode::Dis : RunMode::DE;
    c.total_steps = a.k;
    c.burn_in = 1;
    c.ensemble_size = a.r;
    c.master_seed = a.seed;
    const std::vector<double> trace = run_coupled(c, a.p);
    const MomentFunction mf = make_moment_function(c.spec, c.mixing, kDefaultNMcScalar / 10,
                                                   a.seed + 1);
    const MomentEstimate hp = mf.h(a.p);
    // Geometric-mean per-step contraction over the second half of the trace.
    const size_t half = trace.size() / 2;
    double rate = std::nan("");
    if (trace.size() >= 2 && trace[half] > 0.0 && trace.back() > 0.0)
        rate = std::pow(trace.back() / trace[half], 1.0 / double(trace.size() - 1 - half));
    std::cout << "coupled chains: E||x - x~||^p over k = 1.." << trace.size() << "\n";
    std::cout << "p                 " << a.p << "\n";
    std::cout << "per-step rate     " << rate << " (geometric mean, second half)\n";
    std::cout << "h(p) bound        " << hp.value << " +- " << hp.stderr_ << "\n";
    std::cout << "Wasserstein rate  " << wasserstein_rate(mf, a.p) << " per step (h(p)^{1/p})\n";
    const int show = std::min<int>(10, int(trace.size()));
    std::cout << "first " << show << " values:";
    for (int i = 0; i < show; ++i) std::cout << " " << trace[size_t(i)];
    std::cout << "\n";
}

// ----- calibrate -----

struct CalibrateArgs {
    long k = 1000000;
    std::vector<double> alphas{0.8, 1.2, 1.5, 1.8, 2.0};
    std::uint64_t seed = 1;
};

void run_calibrate(const CalibrateArgs& a) {
    const int k1 = int(std::floor(std::sqrt(double(a.k))));
    std::cout << "samples per alpha: " << a.k << "  (K1 = K2 = " << k1 << ")\n";
    std::printf("%8s %10s %10s %8s\n", "alpha", "estimate", "raw", "error");
    for (double alpha : a.alphas) {
        Xoshiro256pp rng(derive_seed(a.seed, std::uint64_t(alpha * 1000)));
        std::vector<double> samples(size_t(k1) * size_t(k1));
        for (double& x : samples) x = sample_alpha_stable(rng, alpha);
        const ScalarTailEstimate est = estimate_alpha_scalar(samples, k1, k1);
        std::printf("%8.2f %10.4f %10.4f %8.4f\n", alpha, est.alpha, est.alpha_raw,
                    est.alpha - alpha);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and numerical analysis of heavy tails in decentralized SGD"};
    app.require_subcommand(1);

    TopologyArgs topo;
    auto* t = app.add_subcommand("topology", "Build a mixing matrix and print its spectrum");
    t->add_option("kind", topo.kind, "complete|star|cycle|hypercube|bipartite|barbell|path")
        ->required();
    t->add_option("-n,--n", topo.n, "number of nodes")->required();
    t->add_option("--delta", topo.delta, "mixing stepsize delta");
    t->add_option("--out", topo.out, "directory for CSV output");

    RunArgs run;
    auto* r = app.add_subcommand("run", "Run a scenario (preset name or config file)");
    r->add_option("scenario", run.scenario, "preset name or scenario JSON path")->required();
    r->add_option("--out", run.out, "output directory");
    r->add_option("-j,--jobs", run.jobs, "worker threads per ensemble");
    r->add_flag("--paper-scale", run.paper_scale, "full protocol: K=5000, K0=500, R=1600");
    r->add_flag("--no-theory", run.no_theory, "skip the theory columns");
    r->add_option("--seed", run.seeds, "override master seeds (repeatable)");

    ContourArgs cont;
    auto* c = app.add_subcommand("contour", "Sign-term contour grid over (eta, N)");
    c->add_option("--preset", cont.preset, "d1 or d100");
    c->add_option("--d", cont.d, "dimension");
    c->add_option("--b", cont.b, "batch size");
    c->add_option("--sigma", cont.sigma, "feature scale");
    c->add_option("--eta-lo", cont.eta_lo);
    c->add_option("--eta-hi", cont.eta_hi);
    c->add_option("--eta-points", cont.eta_points);
    c->add_option("--n-lo", cont.n_lo);
    c->add_option("--n-hi", cont.n_hi);
    c->add_option("--n-step", cont.n_step);
    c->add_option("--n-mc", cont.n_mc, "MC draws per cell (d > 1)");
    c->add_option("--seed", cont.seed);
    c->add_option("--out", cont.out, "output directory");

    ThresholdArgs thr;
    auto* h = app.add_subcommand("thresholds", "tau / eta_crit / eta_max and the case split");
    h->add_option("-n,--n", thr.n, "number of nodes")->required();
    h->add_option("--b", thr.b, "batch size");
    h->add_option("--sigma", thr.sigma, "feature scale");
    h->add_option("--eta-lo", thr.eta_lo, "search range low end");
    h->add_option("--eta-hi", thr.eta_hi, "search range high end");
    h->add_option("--eta-ref", thr.eta_ref, "stepsize for the sigma^2 threshold");
    h->add_option("--out", thr.out, "JSON output path");

    TheoryArgs th;
    auto* y = app.add_subcommand("theory", "Ad-hoc h(s) / rho / alpha queries");
    y->add_option("--d", th.d);
    y->add_option("-n,--n", th.n);
    y->add_option("--b", th.b);
    y->add_option("--eta", th.eta)->required();
    y->add_option("--sigma", th.sigma);
    y->add_option("--sigma-y", th.sigma_y);
    y->add_option("--delta", th.delta);
    y->add_option("--graph", th.graph);
    y->add_option("-s,--s", th.s_values, "exponents to evaluate h at");
    y->add_option("--n-mc", th.n_mc, "MC draws (0 = default for the dimension)");
    y->add_option("--seed", th.seed);
    y->add_option("--tol", th.tol, "root tolerance");

    CoupleArgs cp;
    auto* w = app.add_subcommand("couple", "Synchronously coupled chains vs the h(p) contraction bound");
    w->add_option("--d", cp.d);
    w->add_option("-n,--n", cp.n);
    w->add_option("--b", cp.b);
    w->add_option("--eta", cp.eta)->required();
    w->add_option("--sigma", cp.sigma);
    w->add_option("--sigma-y", cp.sigma_y);
    w->add_option("--delta", cp.delta);
    w->add_option("--graph", cp.graph);
    w->add_option("-p,--p", cp.p, "moment order");
    w->add_option("-k,--k", cp.k, "steps");
    w->add_option("-r,--r", cp.r, "coupled chain pairs");
    w->add_option("--seed", cp.seed);

    CalibrateArgs cal;
    auto* g = app.add_subcommand("calibrate", "Tail estimator on alpha-stable synthetic samples");
    g->add_option("-k,--k", cal.k, "samples per alpha");
    g->add_option("--alpha", cal.alphas, "stability indices to test");
    g->add_option("--seed", cal.seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (t->parsed()) run_topology(topo);
        if (r->parsed()) run_run(run);
        if (c->parsed()) run_contour(cont);
        if (h->parsed()) run_thresholds(thr);
        if (y->parsed()) run_theory(th);
        if (w->parsed()) run_couple(cp);
        if (g->parsed()) run_calibrate(cal);
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const TopologyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ScenarioError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
