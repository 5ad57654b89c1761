#include "htsim/topology.hpp"

#include <Eigen/Eigenvalues>
#include <deque>
#include <ostream>

namespace htsim {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

const char* to_string(GraphKind kind) {
    switch (kind) {
        case GraphKind::Complete: return "complete";
        case GraphKind::Star: return "star";
        case GraphKind::Cycle: return "cycle";
        case GraphKind::Hypercube: return "hypercube";
        case GraphKind::Bipartite: return "bipartite";
        case GraphKind::Barbell: return "barbell";
        case GraphKind::Path: return "path";
    }
    return "?";
}

GraphKind graph_kind_from_string(const std::string& name) {
    if (name == "complete") return GraphKind::Complete;
    if (name == "star") return GraphKind::Star;
    if (name == "cycle") return GraphKind::Cycle;
    if (name == "hypercube") return GraphKind::Hypercube;
    if (name == "bipartite") return GraphKind::Bipartite;
    if (name == "barbell") return GraphKind::Barbell;
    if (name == "path") return GraphKind::Path;
    throw TopologyError("unknown graph kind: " + name);
}

Graph build_graph(GraphKind kind, int n) {
    if (n < 2) throw TopologyError("graph needs at least 2 nodes");
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    switch (kind) {
        case GraphKind::Complete:
            a.setOnes();
            a.diagonal().setZero();
            break;
        case GraphKind::Star:
            for (int j = 1; j < n; ++j) a(0, j) = a(j, 0) = 1.0;
            break;
        case GraphKind::Cycle:
            for (int i = 0; i + 1 < n; ++i) a(i, i + 1) = a(i + 1, i) = 1.0;
            a(0, n - 1) = a(n - 1, 0) = 1.0;
            break;
        case GraphKind::Hypercube: {
            if (!is_power_of_two(n))
                throw TopologyError("hypercube requires N = 2^n");
            // Nodes adjacent iff their labels differ in exactly one bit.
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    unsigned x = unsigned(i ^ j);
                    if ((x & (x - 1)) == 0) a(i, j) = a(j, i) = 1.0;
                }
            break;
        }
        case GraphKind::Bipartite: {
            if (n % 2 != 0) throw TopologyError("bipartite requires even N");
            const int half = n / 2;
            for (int i = 0; i < half; ++i)
                for (int j = half; j < n; ++j) a(i, j) = a(j, i) = 1.0;
            break;
        }
        case GraphKind::Barbell: {
            if (n % 2 != 0) throw TopologyError("barbell requires even N");
            const int half = n / 2;
            for (int i = 0; i < half; ++i)
                for (int j = i + 1; j < half; ++j) a(i, j) = a(j, i) = 1.0;
            for (int i = half; i < n; ++i)
                for (int j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 1.0;
            a(0, half) = a(half, 0) = 1.0;  // the bridge
            break;
        }
        case GraphKind::Path:
            for (int i = 0; i + 1 < n; ++i) a(i, i + 1) = a(i + 1, i) = 1.0;
            break;
    }
    Graph g{kind, n, std::move(a)};
    if (!is_connected(g)) throw TopologyError("internal error: disconnected graph");
    return g;
}

bool is_connected(const Graph& g) {
    const int n = g.n_nodes;
    std::vector<char> seen(n, 0);
    std::deque<int> queue{0};
    seen[0] = 1;
    int count = 1;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int v = 0; v < n; ++v) {
            if (g.adjacency(u, v) != 0.0 && !seen[v]) {
                seen[v] = 1;
                ++count;
                queue.push_back(v);
            }
        }
    }
    return count == n;
}

Laplacian laplacian(const Graph& g) {
    Eigen::MatrixXd l = -g.adjacency;
    l.diagonal() = g.adjacency.rowwise().sum();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(l, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw TopologyError("internal error: eigensolver failed on Laplacian");
    return {std::move(l), solver.eigenvalues()};
}

double max_delta(const Laplacian& lap) {
    const double lmax = lap.eigenvalues(lap.eigenvalues.size() - 1);
    if (lmax <= 0.0) throw TopologyError("internal error: Laplacian has no positive eigenvalue");
    return 2.0 / lmax;
}

MixingMatrix mixing_matrix(const Laplacian& lap, double delta) {
    if (delta < 0.0 || (delta > 0.0 && delta >= max_delta(lap)))
        throw TopologyError("delta out of range [0, 2/lambda_max)");
    const int n = int(lap.matrix.rows());
    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(n, n) - delta * lap.matrix;
    Eigen::VectorXd eig = Eigen::VectorXd::Ones(n) - delta * lap.eigenvalues;
    // lap eigenvalues ascend, so 1 - delta*lambda^L descends already.
    return {std::move(w), delta, std::move(eig)};
}

MixingMatrix MixingMatrix::identity(int n) {
    return {Eigen::MatrixXd::Identity(n, n), 0.0, Eigen::VectorXd::Ones(n)};
}

Eigen::VectorXd lift_to_blocks(const MixingMatrix& w, int d, const Eigen::VectorXd& x) {
    const int n = w.n();
    if (x.size() != Eigen::Index(n) * d) throw TopologyError("lift_to_blocks: size mismatch");
    if (w.is_identity()) return x;
    Eigen::VectorXd out(x.size());
    // Treat x as a d x N matrix (blocks as columns); out = blocks * W^T = blocks * W.
    Eigen::Map<const Eigen::MatrixXd> blocks(x.data(), d, n);
    Eigen::Map<Eigen::MatrixXd> result(out.data(), d, n);
    result.noalias() = blocks * w.matrix;
    return out;
}

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m) {
    const Eigen::IOFormat fmt(17, Eigen::DontAlignCols, ",", "\n");
    os << m.format(fmt) << "\n";
}

}  // namespace htsim
