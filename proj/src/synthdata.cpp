#include "htsim/synthdata.hpp"

#include <Eigen/Eigenvalues>

namespace htsim {

ProblemSpec ProblemSpec::make(int d, int n_nodes, int batch, double eta, double sigma,
                              double sigma_y) {
    ProblemSpec spec;
    spec.d = d;
    spec.n_nodes = n_nodes;
    spec.batch_sizes.assign(size_t(n_nodes), batch);
    spec.eta = eta;
    spec.sigma = sigma;
    spec.sigma_y = sigma_y;
    spec.x_true = Eigen::VectorXd::Zero(d);
    spec.validate();
    return spec;
}

void ProblemSpec::validate() const {
    if (d < 1 || n_nodes < 1) throw std::invalid_argument("ProblemSpec: d, N must be >= 1");
    if (int(batch_sizes.size()) != n_nodes)
        throw std::invalid_argument("ProblemSpec: batch_sizes length != N");
    for (int b : batch_sizes)
        if (b < 1) throw std::invalid_argument("ProblemSpec: batch sizes must be >= 1");
    if (!(eta >= 0.0) || !(sigma > 0.0) || !(sigma_y > 0.0))
        throw std::invalid_argument("ProblemSpec: eta >= 0, sigma > 0, sigma_y > 0 required");
    if (x_true.size() != d) throw std::invalid_argument("ProblemSpec: x_true length != d");
}

bool ProblemSpec::homogeneous_batches() const {
    for (int b : batch_sizes)
        if (b != batch_sizes.front()) return false;
    return true;
}

int ProblemSpec::total_batch() const {
    int total = 0;
    for (int b : batch_sizes) total += b;
    return total;
}

StepDraw sample_step(const ProblemSpec& spec, Xoshiro256pp& rng) {
    StepDraw draw;
    draw.h_blocks.reserve(size_t(spec.n_nodes));
    draw.q_blocks.reserve(size_t(spec.n_nodes));
    NormalSampler normal;
    Eigen::VectorXd a(spec.d);
    for (int i = 0; i < spec.n_nodes; ++i) {
        const int b = spec.batch_sizes[size_t(i)];
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(spec.d, spec.d);
        Eigen::VectorXd q = Eigen::VectorXd::Zero(spec.d);
        for (int j = 0; j < b; ++j) {
            for (int k = 0; k < spec.d; ++k) a(k) = spec.sigma * normal(rng);
            const double y = spec.x_true.dot(a) + spec.sigma_y * normal(rng);
            h.selfadjointView<Eigen::Lower>().rankUpdate(a, 1.0);
            q.noalias() += a * y;
        }
        h = h.selfadjointView<Eigen::Lower>();
        draw.h_blocks.push_back(h / double(b));
        draw.q_blocks.push_back(q * (spec.eta / double(b)));
    }
    return draw;
}

StepOperator make_step_operator(const ProblemSpec& spec, const MixingMatrix& mixing,
                                const StepDraw& draw) {
    if (mixing.n() != spec.n_nodes)
        throw std::invalid_argument("make_step_operator: mixing size != N");
    return {&mixing, spec.d, spec.eta, &draw};
}

Eigen::VectorXd StepOperator::apply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out = lift_to_blocks(*mixing, d, x);
    const int n = mixing->n();
    for (int i = 0; i < n; ++i)
        out.segment(Eigen::Index(i) * d, d).noalias() -=
            eta * (draw->h_blocks[size_t(i)] * x.segment(Eigen::Index(i) * d, d));
    return out;
}

Eigen::MatrixXd StepOperator::dense() const {
    const int n = mixing->n();
    const Eigen::Index nd = Eigen::Index(n) * d;
    if (nd > kDenseCap) throw std::invalid_argument("StepOperator::dense: Nd above cap");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nd, nd);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (mixing->matrix(i, j) != 0.0)
                m.block(Eigen::Index(i) * d, Eigen::Index(j) * d, d, d) =
                    mixing->matrix(i, j) * Eigen::MatrixXd::Identity(d, d);
    for (int i = 0; i < n; ++i)
        m.block(Eigen::Index(i) * d, Eigen::Index(i) * d, d, d) -=
            eta * draw->h_blocks[size_t(i)];
    return m;
}

double operator_norm(const Eigen::MatrixXd& symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();
    return std::max(std::fabs(ev(0)), std::fabs(ev(ev.size() - 1)));
}

}  // namespace htsim
