#include "htsim/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "htsim/theory.hpp"

namespace htsim {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

RunMode run_mode_from_string(const std::string& s) {
    if (s == "DE") return RunMode::DE;
    if (s == "Dis") return RunMode::Dis;
    if (s == "C") return RunMode::C;
    throw ScenarioError("unknown mode '" + s + "' (expected DE, Dis, or C)");
}

SweepField sweep_field_from_string(const std::string& s) {
    if (s == "none") return SweepField::None;
    if (s == "eta") return SweepField::Eta;
    if (s == "b") return SweepField::Batch;
    if (s == "delta") return SweepField::Delta;
    throw ScenarioError("unknown sweep field '" + s + "' (expected eta, b, delta, or none)");
}

double base_point(const Scenario& s) {
    switch (s.sweep_field) {
        case SweepField::Batch: return double(s.spec.batch_sizes.at(0));
        case SweepField::Delta: return s.delta;
        default: return s.spec.eta;
    }
}

}  // namespace

const char* to_string(SweepField f) {
    switch (f) {
        case SweepField::None: return "none";
        case SweepField::Eta: return "eta";
        case SweepField::Batch: return "b";
        case SweepField::Delta: return "delta";
    }
    return "?";
}

void Scenario::validate() const {
    spec.validate();
    if (name.empty()) throw ScenarioError("scenario needs a name");
    if (modes.empty()) throw ScenarioError("scenario needs at least one mode");
    if (seeds.empty()) throw ScenarioError("scenario needs at least one seed");
    if (sweep_field == SweepField::None && !sweep_values.empty())
        throw ScenarioError("sweep values given but sweep field is none");
    if (sweep_field != SweepField::None && sweep_values.empty())
        throw ScenarioError("sweep field set but no sweep values");
    for (double v : sweep_values) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ScenarioError("sweep values must be positive and finite");
        if (sweep_field == SweepField::Batch &&
            (v != std::floor(v) || v < 1.0))
            throw ScenarioError("batch sweep values must be integers >= 1");
    }
    // The topology must build and accept delta; throws TopologyError if not.
    if (delta != 0.0) {
        const double d_max = sweep_field == SweepField::Delta
                                 ? *std::max_element(sweep_values.begin(), sweep_values.end())
                                 : delta;
        mixing_matrix(laplacian(build_graph(graph, spec.n_nodes)), d_max);
    }
    if (total_steps <= 2 * burn_in || burn_in < 1)
        throw ScenarioError("estimation needs K > 2*K0 and K0 >= 1");
    if (ensemble_size < 1) throw ScenarioError("estimation needs R >= 1");
}

void Scenario::scale_to_paper() {
    total_steps = 5000;
    burn_in = 500;
    ensemble_size = 1600;
}

std::vector<double> Scenario::points() const {
    if (sweep_field == SweepField::None) return {base_point(*this)};
    return sweep_values;
}

// ----- Presets -----

namespace {

Scenario make_case(const std::string& name, int d, int n, int b, double sigma_y,
                   GraphKind graph, double delta, std::vector<double> etas,
                   std::vector<RunMode> modes, int k, int k0, int r) {
    Scenario s;
    s.name = name;
    s.spec = ProblemSpec::make(d, n, b, etas.front(), 1.0, sigma_y);
    s.graph = graph;
    s.delta = delta;
    s.modes = std::move(modes);
    s.sweep_field = SweepField::Eta;
    s.sweep_values = std::move(etas);
    s.total_steps = k;
    s.burn_in = k0;
    s.ensemble_size = r;
    s.seeds = {1, 2, 3, 4, 5};
    return s;
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"case1", "case2", "case3", "sweep-eta", "sweep-batch"};
}

Scenario preset(const std::string& name) {
    if (name == "case1") {
        // Finite-variance plateau, heavy-tail onset, DE eventually heavier.
        Scenario s = make_case("case1", 1, 30, 1, 0.2, GraphKind::Complete, 0.01,
                               {0.2, 0.5, 0.8, 0.9, 1.0, 1.1, 1.2},
                               {RunMode::DE, RunMode::Dis}, 2000, 400, 400);
        s.note = "eta grid approximates the published sweep range";
        return s;
    }
    if (name == "case2") {
        // Crossing inside the stable range: Dis heavier at the low end, DE
        // divergent (heavier) at the high end.
        Scenario s = make_case("case2", 100, 10, 100, 0.2, GraphKind::Complete, 0.05,
                               {0.60, 0.70, 0.80, 0.90, 0.95},
                               {RunMode::DE, RunMode::Dis}, 1600, 320, 32);
        s.note = "eta grid approximates the published sweep range";
        return s;
    }
    if (name == "case3") {
        // Every stable stepsize already heavy: Dis heavier than DE, both
        // heavier than centralized.
        Scenario s = make_case("case3", 100, 8, 5, 3.0, GraphKind::Star, 0.125,
                               {0.11, 0.13, 0.14, 0.15, 0.16},
                               {RunMode::DE, RunMode::Dis, RunMode::C}, 1000, 200, 120);
        s.note = "eta grid approximates the published sweep range";
        return s;
    }
    if (name == "sweep-eta") {
        Scenario s = make_case("sweep-eta", 1, 10, 1, 0.2, GraphKind::Complete, 0.01,
                               {0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5},
                               {RunMode::DE, RunMode::Dis, RunMode::C}, 2000, 400, 400);
        return s;
    }
    if (name == "sweep-batch") {
        Scenario s;
        s.name = "sweep-batch";
        s.spec = ProblemSpec::make(1, 10, 1, 0.9, 1.0, 0.2);
        s.graph = GraphKind::Complete;
        s.delta = 0.0;
        s.modes = {RunMode::Dis};
        s.sweep_field = SweepField::Batch;
        s.sweep_values = {1, 2, 4, 8};
        s.total_steps = 2000;
        s.burn_in = 400;
        s.ensemble_size = 400;
        s.seeds = {1, 2, 3, 4, 5};
        return s;
    }
    throw ScenarioError("unknown preset '" + name + "'");
}

// ----- JSON -----

json scenario_to_json(const Scenario& s) {
    json j;
    j["name"] = s.name;
    j["problem"] = {{"d", s.spec.d},        {"n", s.spec.n_nodes},
                    {"b", s.spec.batch_sizes}, {"eta", s.spec.eta},
                    {"sigma", s.spec.sigma}, {"sigma_y", s.spec.sigma_y}};
    j["topology"] = {{"graph", to_string(s.graph)}, {"delta", s.delta}};
    json modes = json::array();
    for (RunMode m : s.modes) modes.push_back(to_string(m));
    j["modes"] = modes;
    if (s.sweep_field != SweepField::None)
        j["sweep"] = {{"field", to_string(s.sweep_field)}, {"values", s.sweep_values}};
    j["estimation"] = {{"K", s.total_steps}, {"K0", s.burn_in}, {"R", s.ensemble_size}};
    j["seeds"] = s.seeds;
    j["with_theory"] = s.with_theory;
    if (!s.note.empty()) j["note"] = s.note;
    return j;
}

Scenario scenario_from_json(const json& j) {
    try {
        Scenario s;
        s.name = j.at("name").get<std::string>();
        const json& p = j.at("problem");
        const int d = p.at("d").get<int>();
        const int n = p.at("n").get<int>();
        const double eta = p.at("eta").get<double>();
        const double sigma = p.value("sigma", 1.0);
        const double sigma_y = p.value("sigma_y", 0.2);
        if (p.at("b").is_array()) {
            s.spec = ProblemSpec::make(d, n, 1, eta, sigma, sigma_y);
            s.spec.batch_sizes = p.at("b").get<std::vector<int>>();
        } else {
            s.spec = ProblemSpec::make(d, n, p.at("b").get<int>(), eta, sigma, sigma_y);
        }
        const json& t = j.at("topology");
        s.graph = graph_kind_from_string(t.at("graph").get<std::string>());
        s.delta = t.at("delta").get<double>();
        s.modes.clear();
        for (const auto& m : j.at("modes"))
            s.modes.push_back(run_mode_from_string(m.get<std::string>()));
        if (j.contains("sweep")) {
            s.sweep_field = sweep_field_from_string(j["sweep"].at("field").get<std::string>());
            s.sweep_values = j["sweep"].at("values").get<std::vector<double>>();
        }
        const json& e = j.at("estimation");
        s.total_steps = e.at("K").get<int>();
        s.burn_in = e.at("K0").get<int>();
        s.ensemble_size = e.at("R").get<int>();
        s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        s.with_theory = j.value("with_theory", true);
        s.note = j.value("note", std::string());
        s.validate();
        return s;
    } catch (const json::exception& ex) {
        throw ScenarioError(std::string("scenario config: ") + ex.what());
    }
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
    json j;
    try {
        j = json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
    } catch (const json::parse_error& ex) {
        throw ScenarioError("parse error in '" + path + "': " + ex.what());
    }
    return scenario_from_json(j);
}

// ----- Execution -----

RunConfig cell_config(const Scenario& s, double point, RunMode mode,
                      std::uint64_t seed, int jobs) {
    RunConfig c;
    c.spec = s.spec;
    double delta = s.delta;
    switch (s.sweep_field) {
        case SweepField::Eta: c.spec.eta = point; break;
        case SweepField::Batch:
            c.spec.batch_sizes.assign(size_t(c.spec.n_nodes), int(point));
            break;
        case SweepField::Delta: delta = point; break;
        case SweepField::None: break;
    }
    if (mode == RunMode::DE && delta != 0.0) {
        c.mixing = mixing_matrix(laplacian(build_graph(s.graph, c.spec.n_nodes)), delta);
    } else {
        c.mixing = MixingMatrix::identity(c.spec.n_nodes);
    }
    c.mode = mode == RunMode::C ? RunMode::Dis : mode;
    c.total_steps = s.total_steps;
    c.burn_in = s.burn_in;
    c.ensemble_size = s.ensemble_size;
    c.master_seed = seed;
    c.jobs = jobs;
    if (mode == RunMode::C) c = centralized(c);
    return c;
}

PointTheory point_theory(const ProblemSpec& spec, const MixingMatrix& mixing,
                         RunMode mode, std::uint64_t seed) {
    PointTheory out{kNan, kNan, "none"};
    const bool homogeneous = spec.homogeneous_batches();
    if (!homogeneous) return out;
    const int b = spec.batch_sizes.at(0);
    const double eta = spec.eta;
    if (spec.d == 1) {
        const auto kit = DistributionKit::gaussian(b, spec.sigma);
        if (mode == RunMode::C) {
            // Pooled single node.
            const auto pooled = ScaledChi2::batch_mean(spec.total_batch(), spec.sigma);
            DisLaw law = dis_law(eta, 1, pooled);
            AlphaRoot r = alpha_dis_root(law);
            out.rho = law.rho();
            out.alpha = r.status == RootStatus::Root
                            ? r.alpha
                            : (r.status == RootStatus::Light
                                   ? std::numeric_limits<double>::infinity()
                                   : kNan);
            out.method = "quadrature";
            return out;
        }
        // Per-node index: without mixing the nodes run independent scalar
        // chains, so the tail is governed by the single-node law (the joint
        // max-norm law is a conservative bound, unstable already at small
        // eta for moderate N).
        DisLaw law = dis_law(eta, 1, kit.mean);
        AlphaRoot r = alpha_dis_root(law);
        out.rho = law.rho();
        if (r.status == RootStatus::Light) {
            out.alpha = std::numeric_limits<double>::infinity();
            out.method = "quadrature";
            return out;
        }
        if (r.status != RootStatus::Root) return out;
        if (mode == RunMode::Dis || mixing.is_identity()) {
            out.alpha = r.alpha;
            out.method = "quadrature";
            return out;
        }
        const Laplacian lap = laplacian(build_graph(GraphKind::Complete, spec.n_nodes));
        // Only the Laplacian diagonal enters the first-order correction, and
        // the mixing matrix carries it: L_ii = (1 - W_ii)/delta.
        std::vector<double> l_diag(size_t(spec.n_nodes));
        for (int i = 0; i < spec.n_nodes; ++i)
            l_diag[size_t(i)] = (1.0 - mixing.matrix(i, i)) / mixing.delta;
        try {
            ExpansionReport er =
                expansion_general_b(eta, spec.n_nodes, b, l_diag, r.alpha, kit);
            out.alpha = er.alpha_at(mixing.delta);
            out.method = "expansion";
        } catch (const std::exception&) {
            // The delta-correction needs the joint max-norm law stable;
            // outside that window report the uncorrected per-node root.
            out.alpha = r.alpha;
            out.method = "quadrature";
        }
        return out;
    }
    // General d: spectral Monte Carlo; needs the bidiagonal model's b >= d
    // (otherwise the per-node norm is >= 1 almost surely and there is no root).
    if (b < spec.d && mode != RunMode::C) return out;
    if (mode == RunMode::C) {
        if (spec.total_batch() < spec.d) return out;
        ProblemSpec pooled = spec;
        pooled.n_nodes = 1;
        pooled.batch_sizes = {spec.total_batch()};
        MomentFunction mf =
            make_moment_function(pooled, MixingMatrix::identity(1), kDefaultNMcSpectral, seed);
        AlphaRoot r = alpha_hat_root(mf);
        out.rho = mf.rho().value;
        out.alpha = r.status == RootStatus::Root
                        ? r.alpha
                        : (r.status == RootStatus::Light
                               ? std::numeric_limits<double>::infinity()
                               : kNan);
        out.method = "mc";
        return out;
    }
    // Per-node index, as in the d = 1 branch: one node's ||I - eta H||.
    ProblemSpec solo = spec;
    solo.n_nodes = 1;
    solo.batch_sizes = {b};
    MomentFunction mf = make_moment_function(solo, MixingMatrix::identity(1),
                                             kDefaultNMcSpectral, seed);
    AlphaRoot r = alpha_hat_root(mf);
    out.rho = mf.rho().value;
    if (r.status == RootStatus::Light) {
        out.alpha = std::numeric_limits<double>::infinity();
        out.method = "mc";
        return out;
    }
    if (r.status != RootStatus::Root) return out;
    if (mode == RunMode::Dis || mixing.is_identity()) {
        out.alpha = r.alpha;
        out.method = "mc";
        return out;
    }
    std::vector<double> l_diag(size_t(spec.n_nodes));
    for (int i = 0; i < spec.n_nodes; ++i)
        l_diag[size_t(i)] = (1.0 - mixing.matrix(i, i)) / mixing.delta;
    try {
        ExpansionReport er = expansion_general_d_mc(spec, l_diag, r.alpha,
                                                    kDefaultNMcSpectral, seed + 1);
        out.alpha = er.alpha_at(mixing.delta);
    } catch (const std::exception&) {
        out.alpha = r.alpha;  // correction unavailable; see the d = 1 branch
    }
    out.method = "mc";
    return out;
}

std::vector<ResultRow> run_scenario(const Scenario& s, int jobs, std::ostream* progress) {
    s.validate();
    std::vector<ResultRow> rows;
    for (double point : s.points()) {
        for (RunMode mode : s.modes) {
            const RunConfig probe = cell_config(s, point, mode, s.seeds.front(), jobs);
            PointTheory th{kNan, kNan, "none"};
            if (s.with_theory)
                th = point_theory(probe.spec, probe.mixing, mode, 0x7e0du);
            for (std::uint64_t seed : s.seeds) {
                RunConfig c = cell_config(s, point, mode, seed, jobs);
                const auto t0 = std::chrono::steady_clock::now();
                IterateEnsemble ens = run_ensemble(c);
                ResultRow row;
                row.scenario = s.name;
                row.mode = to_string(mode);
                row.topology = mode == RunMode::DE ? to_string(s.graph) : "none";
                row.n = s.spec.n_nodes;
                row.d = s.spec.d;
                row.b = c.spec.batch_sizes.at(0);
                row.eta = c.spec.eta;
                row.delta = mode == RunMode::DE
                                ? (s.sweep_field == SweepField::Delta ? point : s.delta)
                                : 0.0;
                row.seed = seed;
                row.divergence_fraction = ens.divergence_fraction();
                row.alpha_hat_theory = th.alpha;
                row.rho_hat = th.rho;
                try {
                    TailIndexEstimate est = estimate_ensemble(ens);
                    row.alpha_hat_empirical = est.alpha_hat;
                    row.alpha_raw_empirical = est.alpha_raw;
                    row.status = "ok";
                } catch (const std::exception&) {
                    row.alpha_hat_empirical = kNan;
                    row.alpha_raw_empirical = kNan;
                    row.status = row.divergence_fraction >= 1.0 ? "diverged"
                                                                : "insufficient-samples";
                }
                row.runtime_ms = std::chrono::duration<double, std::milli>(
                                     std::chrono::steady_clock::now() - t0)
                                     .count();
                if (progress)
                    *progress << s.name << " " << to_string(s.sweep_field) << "=" << point
                              << " " << row.mode << " seed=" << seed
                              << " alpha=" << row.alpha_hat_empirical
                              << " div=" << row.divergence_fraction << "\n"
                              << std::flush;
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

namespace {

bool num_eq(double a, double b) {
    return (std::isnan(a) && std::isnan(b)) || a == b;
}

}  // namespace

bool rows_equivalent(const ResultRow& a, const ResultRow& b) {
    return a.scenario == b.scenario && a.mode == b.mode && a.topology == b.topology &&
           a.n == b.n && a.d == b.d && a.b == b.b && num_eq(a.eta, b.eta) &&
           num_eq(a.delta, b.delta) && a.seed == b.seed &&
           num_eq(a.alpha_hat_empirical, b.alpha_hat_empirical) &&
           num_eq(a.alpha_raw_empirical, b.alpha_raw_empirical) &&
           num_eq(a.alpha_hat_theory, b.alpha_hat_theory) &&
           num_eq(a.rho_hat, b.rho_hat) &&
           num_eq(a.divergence_fraction, b.divergence_fraction) &&
           num_eq(a.runtime_ms, b.runtime_ms) && a.status == b.status;
}

bool rows_equivalent(const std::vector<ResultRow>& a, const std::vector<ResultRow>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!rows_equivalent(a[i], b[i])) return false;
    return true;
}

// ----- CSV -----

namespace {

const std::vector<std::string> kCsvHeader = {
    "scenario", "mode", "topology", "N", "d", "b", "eta", "delta", "seed",
    "alpha_hat_empirical", "alpha_raw_empirical", "alpha_hat_theory", "rho_hat",
    "divergence_fraction", "runtime_ms", "status"};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

void write_rows_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    CsvWriter w(os);
    w.row(kCsvHeader);
    for (const ResultRow& r : rows) {
        w.row({r.scenario, r.mode, r.topology, std::to_string(r.n), std::to_string(r.d),
               std::to_string(r.b), csv_num(r.eta), csv_num(r.delta),
               std::to_string(r.seed), csv_num(r.alpha_hat_empirical),
               csv_num(r.alpha_raw_empirical), csv_num(r.alpha_hat_theory),
               csv_num(r.rho_hat), csv_num(r.divergence_fraction), csv_num(r.runtime_ms),
               r.status});
    }
}

std::vector<ResultRow> read_rows_csv(std::istream& is) {
    std::vector<ResultRow> rows;
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        auto f = split_csv_line(line);
        if (header) {
            if (f != kCsvHeader) throw ScenarioError("unexpected CSV header");
            header = false;
            continue;
        }
        if (f.size() != kCsvHeader.size())
            throw ScenarioError("CSV row with wrong field count");
        ResultRow r;
        r.scenario = f[0];
        r.mode = f[1];
        r.topology = f[2];
        r.n = std::atoi(f[3].c_str());
        r.d = std::atoi(f[4].c_str());
        r.b = std::atoi(f[5].c_str());
        r.eta = std::strtod(f[6].c_str(), nullptr);
        r.delta = std::strtod(f[7].c_str(), nullptr);
        r.seed = std::strtoull(f[8].c_str(), nullptr, 10);
        r.alpha_hat_empirical = std::strtod(f[9].c_str(), nullptr);
        r.alpha_raw_empirical = std::strtod(f[10].c_str(), nullptr);
        r.alpha_hat_theory = std::strtod(f[11].c_str(), nullptr);
        r.rho_hat = std::strtod(f[12].c_str(), nullptr);
        r.divergence_fraction = std::strtod(f[13].c_str(), nullptr);
        r.runtime_ms = std::strtod(f[14].c_str(), nullptr);
        r.status = f[15];
        rows.push_back(std::move(r));
    }
    return rows;
}

// ----- Plot and report -----

void write_sweep_svg(std::ostream& os, const Scenario& s,
                     const std::vector<ResultRow>& rows) {
    const auto pts = s.points();
    const double x_lo = *std::min_element(pts.begin(), pts.end());
    const double x_hi = *std::max_element(pts.begin(), pts.end());
    SvgPlot plot(x_lo, x_hi == x_lo ? x_lo + 1.0 : x_hi, 0.0, 2.3);
    plot.set_title(s.name + ": tail index vs " + to_string(s.sweep_field));
    plot.set_labels(to_string(s.sweep_field), "alpha_hat");
    plot.hline(2.0, "gray");
    const char* colors[] = {"#c0392b", "#2471a3", "#1e8449"};
    int ci = 0;
    for (RunMode mode : s.modes) {
        std::vector<std::pair<double, double>> emp, theory;
        for (double point : pts) {
            std::vector<double> alphas;
            double th = kNan;
            for (const ResultRow& r : rows) {
                const double rp = s.sweep_field == SweepField::Batch
                                      ? double(r.b)
                                      : (s.sweep_field == SweepField::Delta ? r.delta
                                                                            : r.eta);
                if (r.mode != to_string(mode)) continue;
                if (mode == RunMode::DE || s.sweep_field != SweepField::Delta) {
                    if (std::abs(rp - point) > 1e-12 * std::max(1.0, point)) continue;
                }
                if (std::isfinite(r.alpha_hat_empirical)) alphas.push_back(r.alpha_hat_empirical);
                th = r.alpha_hat_theory;
            }
            if (!alphas.empty()) emp.emplace_back(point, median(alphas));
            if (std::isfinite(th)) theory.emplace_back(point, std::min(th, 2.3));
        }
        const std::string color = colors[ci++ % 3];
        plot.series(emp, color, std::string(to_string(mode)) + " empirical");
        if (!theory.empty()) plot.polyline(theory, color, 0.8);
    }
    plot.render(os);
}

json point_report(const Scenario& s, double point, const std::vector<ResultRow>& rows) {
    json j;
    j["scenario"] = s.name;
    j[to_string(s.sweep_field) == std::string("none") ? "point" : to_string(s.sweep_field)] =
        point;
    json per_mode = json::object();
    for (RunMode mode : s.modes) {
        std::vector<double> alphas;
        json seeds = json::array();
        double th = kNan, rho = kNan, div = 0.0;
        for (const ResultRow& r : rows) {
            const double rp = s.sweep_field == SweepField::Batch
                                  ? double(r.b)
                                  : (s.sweep_field == SweepField::Delta ? r.delta : r.eta);
            if (r.mode != to_string(mode)) continue;
            if (mode == RunMode::DE || s.sweep_field != SweepField::Delta) {
                if (std::abs(rp - point) > 1e-12 * std::max(1.0, point)) continue;
            }
            seeds.push_back({{"seed", r.seed},
                             {"alpha", r.alpha_hat_empirical},
                             {"alpha_raw", r.alpha_raw_empirical},
                             {"divergence_fraction", r.divergence_fraction},
                             {"status", r.status}});
            if (std::isfinite(r.alpha_hat_empirical)) alphas.push_back(r.alpha_hat_empirical);
            th = r.alpha_hat_theory;
            rho = r.rho_hat;
            div = std::max(div, r.divergence_fraction);
        }
        json m;
        m["seeds"] = seeds;
        if (!alphas.empty()) {
            auto mm = std::minmax_element(alphas.begin(), alphas.end());
            m["alpha_median"] = quantity(median(alphas), (*mm.second - *mm.first) / 2.0,
                                         "ensemble-median");
        }
        if (std::isfinite(th)) m["alpha_theory"] = quantity(th, s.spec.d == 1 ? "quadrature" : "mc");
        if (std::isfinite(rho)) m["rho_theory"] = quantity(rho, s.spec.d == 1 ? "quadrature" : "mc");
        m["config_digest"] = cell_config(s, point, mode, s.seeds.front(), 1).digest();
        per_mode[to_string(mode)] = std::move(m);
    }
    j["modes"] = std::move(per_mode);
    return j;
}

}  // namespace htsim
