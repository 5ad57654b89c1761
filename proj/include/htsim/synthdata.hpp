#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "htsim/rng.hpp"
#include "htsim/topology.hpp"

namespace htsim {

// Synthetic Gaussian least-squares data law plus the algorithm
// hyperparameters that define one recursion instance.
struct ProblemSpec {
    int d = 1;
    int n_nodes = 1;
    std::vector<int> batch_sizes;  // length n_nodes, all >= 1
    double eta = 0.1;
    double sigma = 1.0;
    double sigma_y = 0.2;
    Eigen::VectorXd x_true;        // defaults to zero vector of length d

    static ProblemSpec make(int d, int n_nodes, int batch, double eta, double sigma,
                            double sigma_y);

    void validate() const;
    bool homogeneous_batches() const;
    int total_batch() const;
};

// One iteration's random objects: per-node H_i = (1/b_i) sum a a^T and
// q_i = (eta/b_i) sum a y.
struct StepDraw {
    std::vector<Eigen::MatrixXd> h_blocks;
    std::vector<Eigen::VectorXd> q_blocks;
};

// M = W (x) I_d - eta * blkdiag(H_i), kept in block form; dense() assembles
// the Nd x Nd matrix (only for Nd <= kDenseCap).
struct StepOperator {
    const MixingMatrix* mixing;
    int d;
    double eta;
    const StepDraw* draw;

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd dense() const;
};

inline constexpr int kDenseCap = 4096;

StepDraw sample_step(const ProblemSpec& spec, Xoshiro256pp& rng);

StepOperator make_step_operator(const ProblemSpec& spec, const MixingMatrix& mixing,
                                const StepDraw& draw);

// Largest absolute eigenvalue of a symmetric matrix (its 2-norm).
double operator_norm(const Eigen::MatrixXd& symmetric);

}  // namespace htsim
