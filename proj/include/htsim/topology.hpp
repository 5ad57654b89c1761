#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace htsim {

enum class GraphKind { Complete, Star, Cycle, Hypercube, Bipartite, Barbell, Path };

const char* to_string(GraphKind kind);
GraphKind graph_kind_from_string(const std::string& name);

struct Graph {
    GraphKind kind;
    int n_nodes;
    Eigen::MatrixXd adjacency;  // symmetric 0/1, zero diagonal
};

struct Laplacian {
    Eigen::MatrixXd matrix;        // D_deg - A
    Eigen::VectorXd eigenvalues;   // ascending
};

struct MixingMatrix {
    Eigen::MatrixXd matrix;        // W = I - delta L
    double delta;
    Eigen::VectorXd eigenvalues;   // descending, lambda_1 = 1

    int n() const { return int(matrix.rows()); }
    static MixingMatrix identity(int n);
    bool is_identity() const { return delta == 0.0; }
};

struct TopologyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Builds one of the seven graph families. Hypercube requires N a power of
// two; Bipartite and Barbell require N even.
Graph build_graph(GraphKind kind, int n_nodes);

Laplacian laplacian(const Graph& g);

// Stability bound 2 / lambda_N^L for the mixing stepsize.
double max_delta(const Laplacian& lap);

// W = I - delta L; delta = 0 accepted (identity, the disconnected case),
// delta >= 2/lambda_N^L rejected.
MixingMatrix mixing_matrix(const Laplacian& lap, double delta);

// Block application of W (x) I_d to a concatenated vector of N blocks of
// length d: output block i = sum_j W_ij * block j.
Eigen::VectorXd lift_to_blocks(const MixingMatrix& w, int d, const Eigen::VectorXd& x);

bool is_connected(const Graph& g);

// Row-major full-matrix CSV, 17 significant digits.
void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m);

}  // namespace htsim
