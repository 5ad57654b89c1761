#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "htsim/recursion.hpp"
#include "htsim/report.hpp"
#include "htsim/tailest.hpp"

namespace htsim {

enum class SweepField { None, Eta, Batch, Delta };

const char* to_string(SweepField f);

// One end-to-end experiment: a problem family, a topology, a set of
// algorithm modes, an optional parameter sweep, and the estimation protocol.
struct Scenario {
    std::string name;
    ProblemSpec spec;                 // eta / b / delta overridden per sweep point
    GraphKind graph = GraphKind::Complete;
    double delta = 0.0;
    std::vector<RunMode> modes{RunMode::DE, RunMode::Dis};
    SweepField sweep_field = SweepField::None;
    std::vector<double> sweep_values;
    int total_steps = 2000;
    int burn_in = 400;
    int ensemble_size = 400;
    std::vector<std::uint64_t> seeds{1};
    bool with_theory = true;
    std::string note;

    void validate() const;
    // Restores the full protocol (K=5000, K0=500, R=1600) from desk scale.
    void scale_to_paper();
    std::vector<double> points() const;  // sweep values, or the base value
};

struct ResultRow {
    std::string scenario;
    std::string mode;
    std::string topology;
    int n = 0, d = 0, b = 0;
    double eta = 0.0, delta = 0.0;
    std::uint64_t seed = 0;
    double alpha_hat_empirical = 0.0;  // nan when diverged
    double alpha_raw_empirical = 0.0;
    double alpha_hat_theory = 0.0;     // nan when no engine applies
    double rho_hat = 0.0;              // nan when no engine applies
    double divergence_fraction = 0.0;
    double runtime_ms = 0.0;
    std::string status;                // ok | diverged | insufficient-samples
};

// Field-wise equality with NaN == NaN, for round-trip checks.
bool rows_equivalent(const ResultRow& a, const ResultRow& b);
bool rows_equivalent(const std::vector<ResultRow>& a, const std::vector<ResultRow>& b);

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Embedded presets mirroring the experiment definitions.
std::vector<std::string> preset_names();
Scenario preset(const std::string& name);

json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const json& j);
// Parses a scenario file (JSON, // and /* */ comments allowed). Throws
// ScenarioError with position diagnostics on malformed input.
Scenario load_scenario_file(const std::string& path);

// Theory-side tail quantities for one sweep point of a scenario mode.
struct PointTheory {
    double alpha = 0.0;      // nan when unavailable
    double rho = 0.0;        // nan when unavailable
    std::string method;      // quadrature | expansion | mc | none
};

PointTheory point_theory(const ProblemSpec& spec, const MixingMatrix& mixing,
                         RunMode mode, std::uint64_t seed);

// Runs every (sweep point x mode x seed) cell; rows in deterministic order.
// Theory is evaluated once per (point, mode) and shared across seeds.
std::vector<ResultRow> run_scenario(const Scenario& s, int jobs,
                                    std::ostream* progress = nullptr);

// Builds the per-cell run configuration (exposed for tests and for the
// acceptance suite, which runs endpoints only).
RunConfig cell_config(const Scenario& s, double point, RunMode mode,
                      std::uint64_t seed, int jobs);

void write_rows_csv(std::ostream& os, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_rows_csv(std::istream& is);

// Median-over-seeds alpha curves per mode, one SVG.
void write_sweep_svg(std::ostream& os, const Scenario& s,
                     const std::vector<ResultRow>& rows);

// JSON report for one sweep point: empirical and theory quantities with
// method tags and the config digest.
json point_report(const Scenario& s, double point,
                  const std::vector<ResultRow>& rows);

}  // namespace htsim
