#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "htsim/synthdata.hpp"
#include "htsim/topology.hpp"

namespace htsim {

enum class RunMode { DE, Dis, C };

const char* to_string(RunMode mode);

struct RunConfig {
    ProblemSpec spec;
    MixingMatrix mixing = MixingMatrix::identity(1);
    RunMode mode = RunMode::DE;
    int total_steps = 2000;       // K
    int burn_in = 400;            // K0
    int ensemble_size = 400;      // R
    std::uint64_t master_seed = 1;
    int jobs = 1;
    // Optional per-step moment trace ||x^(k)||^p for k = 1..trace_steps.
    int trace_steps = 0;
    double trace_p = 1.0;
    // Node stream relabeling; empty means identity. Node i consumes the
    // random stream labeled node_labels[i].
    std::vector<int> node_labels;
    double init_lo = -10.0, init_hi = 10.0;

    void validate() const;
    bool config_labels_ok() const;
    std::uint64_t digest() const;
};

// Builds the centralized counterpart of a config: one node, pooled batch.
RunConfig centralized(const RunConfig& de_config);

inline constexpr double kOverflowGuard = 1e12;

struct RunResult {
    Eigen::VectorXd tail_average;  // centered tail average, length Nd
    Eigen::VectorXd final_state;   // x^(K)
    bool diverged = false;
    std::vector<double> moment_trace;
};

struct IterateEnsemble {
    std::vector<RunResult> runs;
    RunConfig config;

    double divergence_fraction() const;
    // Pooled scalar samples for one node: every coordinate of the node's
    // centered tail average, across non-diverged runs.
    std::vector<double> node_samples(int node) const;
};

RunResult run_single(const RunConfig& config, int run_index);

IterateEnsemble run_ensemble(const RunConfig& config);

// Synchronous coupling: two chains share every (M, q) draw but start from
// independent initial points. Returns the empirical p-th moment of the
// difference at each step k = 1..K.
std::vector<double> run_coupled(const RunConfig& config, double p);

// Evaluates the DE-SGD step and the modified-objective C-SGD view of it on
// the same draw; returns the max abs difference between the two updates.
double fw_gradient_check(const ProblemSpec& spec, const MixingMatrix& mixing,
                         const Eigen::VectorXd& x, const StepDraw& draw);

}  // namespace htsim
