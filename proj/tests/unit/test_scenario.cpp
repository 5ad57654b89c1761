#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "htsim/scenario.hpp"
#include "htsim/theory.hpp"

using namespace htsim;

namespace {

Scenario tiny_scenario() {
    Scenario s;
    s.name = "tiny";
    s.spec = ProblemSpec::make(2, 3, 2, 0.2, 1.0, 0.3);
    s.graph = GraphKind::Complete;
    s.delta = 0.1;
    s.modes = {RunMode::DE, RunMode::Dis};
    s.sweep_field = SweepField::Eta;
    s.sweep_values = {0.1, 0.2};
    s.total_steps = 300;
    s.burn_in = 50;
    s.ensemble_size = 200;
    s.seeds = {1, 2};
    s.with_theory = false;
    return s;
}

}  // namespace

TEST_CASE("presets are named, valid, and match their definitions") {
    const auto names = preset_names();
    CHECK(names.size() == 5);
    for (const auto& n : names) CHECK_NOTHROW(preset(n).validate());

    const Scenario c1 = preset("case1");
    CHECK(c1.spec.d == 1);
    CHECK(c1.spec.n_nodes == 30);
    CHECK(c1.graph == GraphKind::Complete);
    CHECK(c1.delta == 0.01);
    CHECK(c1.sweep_field == SweepField::Eta);
    CHECK(c1.sweep_values.front() == 0.2);
    CHECK(c1.seeds.size() == 5);

    const Scenario sb = preset("sweep-batch");
    CHECK(sb.sweep_field == SweepField::Batch);
    CHECK(sb.sweep_values == std::vector<double>{1, 2, 4, 8});
    CHECK(sb.modes == std::vector<RunMode>{RunMode::Dis});

    CHECK_THROWS_AS(preset("nope"), ScenarioError);
}

TEST_CASE("validation rejects inconsistent scenarios") {
    Scenario s = tiny_scenario();
    CHECK_NOTHROW(s.validate());

    s.sweep_values.clear();
    CHECK_THROWS_AS(s.validate(), ScenarioError);

    s = tiny_scenario();
    s.sweep_field = SweepField::None;  // values left over
    CHECK_THROWS_AS(s.validate(), ScenarioError);

    s = tiny_scenario();
    s.burn_in = 200;  // K <= 2 K0
    CHECK_THROWS_AS(s.validate(), ScenarioError);

    s = tiny_scenario();
    s.sweep_field = SweepField::Batch;
    s.sweep_values = {1.5};
    CHECK_THROWS_AS(s.validate(), ScenarioError);

    s = tiny_scenario();
    s.delta = 2.0;  // outside the stable mixing range for K_3
    CHECK_THROWS(s.validate());
}

TEST_CASE("paper scaling restores the full protocol") {
    Scenario s = preset("case1");
    s.scale_to_paper();
    CHECK(s.total_steps == 5000);
    CHECK(s.burn_in == 500);
    CHECK(s.ensemble_size == 1600);
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("scenario json round trip") {
    const Scenario s = preset("case3");
    const Scenario back = scenario_from_json(scenario_to_json(s));
    CHECK(back.name == s.name);
    CHECK(back.spec.d == s.spec.d);
    CHECK(back.spec.batch_sizes == s.spec.batch_sizes);
    CHECK(back.spec.sigma_y == s.spec.sigma_y);
    CHECK(back.graph == s.graph);
    CHECK(back.delta == s.delta);
    CHECK(back.modes == s.modes);
    CHECK(back.sweep_field == s.sweep_field);
    CHECK(back.sweep_values == s.sweep_values);
    CHECK(back.total_steps == s.total_steps);
    CHECK(back.burn_in == s.burn_in);
    CHECK(back.ensemble_size == s.ensemble_size);
    CHECK(back.seeds == s.seeds);
    CHECK(back.note == s.note);
}

TEST_CASE("scenario files accept comments and report malformed input") {
    const char* path = "scenario_test_tmp.json";
    {
        std::ofstream out(path);
        out << "// sweep over two stepsizes\n"
            << "{\n"
            << "  \"name\": \"from-file\",\n"
            << "  \"problem\": {\"d\": 1, \"n\": 2, \"b\": 1, \"eta\": 0.5},\n"
            << "  \"topology\": {\"graph\": \"complete\", \"delta\": 0.2},\n"
            << "  \"modes\": [\"Dis\"], /* decentralized only */\n"
            << "  \"estimation\": {\"K\": 500, \"K0\": 100, \"R\": 400},\n"
            << "  \"seeds\": [7]\n"
            << "}\n";
    }
    const Scenario s = load_scenario_file(path);
    CHECK(s.name == "from-file");
    CHECK(s.spec.sigma == 1.0);  // defaulted
    CHECK(s.sweep_field == SweepField::None);
    std::remove(path);

    {
        std::ofstream out(path);
        out << "{ \"name\": \"broken\" ";
    }
    CHECK_THROWS_AS(load_scenario_file(path), ScenarioError);
    std::remove(path);
    CHECK_THROWS_AS(load_scenario_file("no_such_file.json"), ScenarioError);
}

TEST_CASE("cell configs apply sweeps and mode conventions") {
    Scenario s = tiny_scenario();

    SUBCASE("eta sweep overrides the stepsize") {
        const RunConfig c = cell_config(s, 0.2, RunMode::DE, 9, 1);
        CHECK(c.spec.eta == 0.2);
        CHECK(c.master_seed == 9);
        CHECK_FALSE(c.mixing.is_identity());
        CHECK(c.mixing.delta == s.delta);
    }
    SUBCASE("Dis ignores the graph") {
        const RunConfig c = cell_config(s, 0.1, RunMode::Dis, 1, 1);
        CHECK(c.mixing.is_identity());
        CHECK(c.spec.n_nodes == 3);
    }
    SUBCASE("C pools every batch into one node") {
        const RunConfig c = cell_config(s, 0.1, RunMode::C, 1, 1);
        CHECK(c.spec.n_nodes == 1);
        CHECK(c.spec.total_batch() == s.spec.total_batch());
        CHECK(c.mixing.is_identity());
    }
    SUBCASE("batch sweep overrides every node's batch") {
        s.sweep_field = SweepField::Batch;
        s.sweep_values = {4};
        const RunConfig c = cell_config(s, 4, RunMode::Dis, 1, 1);
        CHECK(c.spec.batch_sizes == std::vector<int>(3, 4));
    }
    SUBCASE("delta sweep overrides the mixing strength") {
        s.sweep_field = SweepField::Delta;
        s.sweep_values = {0.05};
        const RunConfig c = cell_config(s, 0.05, RunMode::DE, 1, 1);
        CHECK(c.mixing.delta == 0.05);
    }
}

TEST_CASE("result csv round trips including nan fields") {
    std::vector<ResultRow> rows(2);
    rows[0] = {"tiny", "DE", "complete", 3, 2, 2, 0.1, 0.1, 1,
               1.5,  1.47, 1.52,  -0.3, 0.0,  12.5, "ok"};
    rows[1] = {"tiny", "Dis", "complete", 3, 2, 2, 0.2, 0.1, 2,
               std::nan(""), std::nan(""), std::nan(""), std::nan(""), 1.0, 3.25,
               "diverged"};
    std::stringstream ss;
    write_rows_csv(ss, rows);
    const auto back = read_rows_csv(ss);
    CHECK(rows_equivalent(rows, back));
    // NaN-aware equality is not reflexive-by-accident: a genuine difference shows.
    auto changed = back;
    changed[0].eta = 0.9;
    CHECK_FALSE(rows_equivalent(rows, changed));
}

TEST_CASE("a tiny scenario runs deterministically end to end") {
    const Scenario s = tiny_scenario();
    std::ostringstream progress;
    const auto rows = run_scenario(s, 2, &progress);
    // points x modes x seeds rows, in deterministic order.
    REQUIRE(rows.size() == 2 * 2 * 2);
    CHECK(rows[0].eta == 0.1);
    CHECK(rows[0].mode == "DE");
    CHECK(rows[0].seed == 1);
    CHECK(rows[1].seed == 2);
    for (const auto& r : rows) {
        CHECK(r.scenario == "tiny");
        CHECK(r.status == "ok");
        CHECK(r.divergence_fraction == 0.0);
        CHECK(std::isfinite(r.alpha_hat_empirical));
        CHECK(std::isnan(r.alpha_hat_theory));  // with_theory = false
    }
    const auto again = run_scenario(s, 1, nullptr);
    REQUIRE(again.size() == rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(again[i].alpha_hat_empirical == rows[i].alpha_hat_empirical);
        CHECK(again[i].divergence_fraction == rows[i].divergence_fraction);
    }
}

TEST_CASE("theory column uses the quadrature engine for d = 1") {
    ProblemSpec spec = ProblemSpec::make(1, 4, 1, 0.8, 1.0, 0.2);
    const PointTheory dis =
        point_theory(spec, MixingMatrix::identity(4), RunMode::Dis, 1);
    CHECK(dis.method == "quadrature");
    // The reported index is the per-node (single-chain) root.
    const DisLaw law = dis_law(0.8, 1, ScaledChi2::batch_mean(1, 1.0));
    const AlphaRoot r = alpha_dis_root(law);
    REQUIRE(r.status == RootStatus::Root);
    CHECK(dis.alpha == doctest::Approx(r.alpha).epsilon(1e-9));

    const MixingMatrix w =
        mixing_matrix(laplacian(build_graph(GraphKind::Complete, 4)), 0.05);
    // The delta-correction needs the joint max-norm law stable: eta = 0.3
    // is inside that window for N = 4, eta = 0.8 outside (falls back to the
    // uncorrected root).
    ProblemSpec spec_lo = spec;
    spec_lo.eta = 0.3;
    const PointTheory de = point_theory(spec_lo, w, RunMode::DE, 1);
    CHECK(de.method == "expansion");
    CHECK(std::isfinite(de.alpha));
    const PointTheory de_hi = point_theory(spec, w, RunMode::DE, 1);
    CHECK(de_hi.method == "quadrature");
    CHECK(de_hi.alpha == doctest::Approx(r.alpha).epsilon(1e-9));

    // Small stepsize: the root is far into the light regime (or absent
    // entirely, reported as infinity).
    spec.eta = 0.05;
    const PointTheory light =
        point_theory(spec, MixingMatrix::identity(4), RunMode::Dis, 1);
    CHECK(light.alpha > 10.0);
}

TEST_CASE("sweep svg renders one curve per mode") {
    const Scenario s = tiny_scenario();
    const auto rows = run_scenario(s, 2, nullptr);
    std::ostringstream svg;
    write_sweep_svg(svg, s, rows);
    const std::string body = svg.str();
    CHECK(body.find("<svg") != std::string::npos);
    CHECK(body.find("DE") != std::string::npos);
    CHECK(body.find("Dis") != std::string::npos);
    CHECK(body.find("polyline") != std::string::npos);
}

TEST_CASE("point report carries per-seed values and the config digest") {
    const Scenario s = tiny_scenario();
    const auto rows = run_scenario(s, 2, nullptr);
    const json rep = point_report(s, 0.2, rows);
    CHECK(rep.at("scenario") == "tiny");
    CHECK(rep.at("eta") == 0.2);
    REQUIRE(rep.contains("modes"));
    CHECK(rep.at("modes").size() == 2);
    for (const auto& m : rep.at("modes")) {
        CHECK(m.at("seeds").size() == 2);
        CHECK(m.contains("alpha_median"));
    }
}
