#include "htsim/recursion.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <thread>

namespace htsim {

namespace {

std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    std::uint64_t s = h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
    return splitmix64(s);
}

std::uint64_t hash_double(double x) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(x));
    std::memcpy(&bits, &x, sizeof(bits));
    return bits;
}

struct NodeStep {
    // One stochastic-gradient application: x_i_out -= (eta/b) * sum_j a_j (a_j^T x_i - y_j),
    // optionally applied to a coupled second chain with the same draws.
    static void apply(const ProblemSpec& spec, int node, Xoshiro256pp& rng,
                      NormalSampler& normal, Eigen::VectorXd& scratch_a,
                      const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> out,
                      const Eigen::VectorXd* x2, Eigen::VectorXd* out2) {
        const int d = spec.d;
        const int b = spec.batch_sizes[size_t(node)];
        const auto xi = x.segment(Eigen::Index(node) * d, d);
        const double scale = spec.eta / double(b);
        for (int j = 0; j < b; ++j) {
            for (int k = 0; k < d; ++k) scratch_a(k) = spec.sigma * normal(rng);
            const double y = spec.x_true.dot(scratch_a) + spec.sigma_y * normal(rng);
            out.noalias() -= (scale * (scratch_a.dot(xi) - y)) * scratch_a;
            if (x2 != nullptr) {
                const auto xi2 = x2->segment(Eigen::Index(node) * d, d);
                out2->segment(Eigen::Index(node) * d, d).noalias() -=
                    (scale * (scratch_a.dot(xi2) - y)) * scratch_a;
            }
        }
    }
};

void init_state(const RunConfig& config, std::uint64_t seed, Eigen::VectorXd& x) {
    Xoshiro256pp rng(seed);
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x(i) = rng.uniform(config.init_lo, config.init_hi);
}

int stream_label(const RunConfig& config, int node) {
    return config.node_labels.empty() ? node : config.node_labels[size_t(node)];
}

}  // namespace

const char* to_string(RunMode mode) {
    switch (mode) {
        case RunMode::DE: return "DE";
        case RunMode::Dis: return "Dis";
        case RunMode::C: return "C";
    }
    return "?";
}

void RunConfig::validate() const {
    spec.validate();
    if (mixing.n() != spec.n_nodes) throw std::invalid_argument("RunConfig: mixing size != N");
    if (mode == RunMode::C && spec.n_nodes != 1)
        throw std::invalid_argument("RunConfig: mode C requires N = 1 (use centralized())");
    if (mode == RunMode::Dis && !mixing.is_identity())
        throw std::invalid_argument("RunConfig: mode Dis requires identity mixing");
    if (!(total_steps > burn_in && burn_in >= 1))
        throw std::invalid_argument("RunConfig: require K > K0 >= 1");
    if (total_steps <= 2 * burn_in)
        throw std::invalid_argument("RunConfig: require K > 2*K0 (tail windows overlap)");
    if (ensemble_size < 1) throw std::invalid_argument("RunConfig: R >= 1");
    if (!config_labels_ok()) throw std::invalid_argument("RunConfig: bad node_labels");
}

bool RunConfig::config_labels_ok() const {
    if (node_labels.empty()) return true;
    if (int(node_labels.size()) != spec.n_nodes) return false;
    std::vector<char> seen(size_t(spec.n_nodes), 0);
    for (int l : node_labels) {
        if (l < 0 || l >= spec.n_nodes || seen[size_t(l)]) return false;
        seen[size_t(l)] = 1;
    }
    return true;
}

std::uint64_t RunConfig::digest() const {
    std::uint64_t h = 0x7d5f2a31c9e4b806ULL;
    h = hash_combine(h, std::uint64_t(spec.d));
    h = hash_combine(h, std::uint64_t(spec.n_nodes));
    for (int b : spec.batch_sizes) h = hash_combine(h, std::uint64_t(b));
    h = hash_combine(h, hash_double(spec.eta));
    h = hash_combine(h, hash_double(spec.sigma));
    h = hash_combine(h, hash_double(spec.sigma_y));
    h = hash_combine(h, hash_double(mixing.delta));
    h = hash_combine(h, std::uint64_t(mode));
    h = hash_combine(h, std::uint64_t(total_steps));
    h = hash_combine(h, std::uint64_t(burn_in));
    h = hash_combine(h, std::uint64_t(ensemble_size));
    h = hash_combine(h, master_seed);
    return h;
}

RunConfig centralized(const RunConfig& de_config) {
    RunConfig c = de_config;
    c.spec = ProblemSpec::make(de_config.spec.d, 1, de_config.spec.total_batch(),
                               de_config.spec.eta, de_config.spec.sigma,
                               de_config.spec.sigma_y);
    c.spec.x_true = de_config.spec.x_true;
    c.mixing = MixingMatrix::identity(1);
    c.mode = RunMode::C;
    c.node_labels.clear();
    return c;
}

RunResult run_single(const RunConfig& config, int run_index) {
    const int n = config.spec.n_nodes;
    const int d = config.spec.d;
    const Eigen::Index nd = Eigen::Index(n) * d;
    const std::uint64_t run_seed = derive_seed(config.master_seed, std::uint64_t(run_index));

    Eigen::VectorXd x(nd);
    init_state(config, derive_seed(run_seed, 0), x);

    const int k_total = config.total_steps;
    const int k0 = config.burn_in;
    const int long_window = k_total - k0;  // k in (k0, K]
    const int short_window = k0;           // final K0 iterates

    Eigen::VectorXd sum_long = Eigen::VectorXd::Zero(nd);
    Eigen::VectorXd sum_short = Eigen::VectorXd::Zero(nd);
    Eigen::VectorXd next(nd), scratch_a(d);
    RunResult result;
    result.moment_trace.reserve(size_t(std::min(config.trace_steps, k_total)));

    for (int k = 1; k <= k_total; ++k) {
        const std::uint64_t step_seed = derive_seed(run_seed, std::uint64_t(k));
        next = lift_to_blocks(config.mixing, d, x);
        for (int i = 0; i < n; ++i) {
            Xoshiro256pp rng(derive_seed(step_seed, std::uint64_t(stream_label(config, i))));
            NormalSampler normal;
            NodeStep::apply(config.spec, i, rng, normal, scratch_a, x,
                            next.segment(Eigen::Index(i) * d, d), nullptr, nullptr);
        }
        x.swap(next);

        if (k <= config.trace_steps)
            result.moment_trace.push_back(std::pow(x.norm(), config.trace_p));
        if (x.cwiseAbs().maxCoeff() > kOverflowGuard) {
            result.diverged = true;
            break;
        }
        if (k > k0) sum_long += x;
        if (k > k_total - short_window) sum_short += x;
    }

    result.final_state = x;
    if (!result.diverged) {
        const Eigen::VectorXd mean_long = sum_long / double(long_window);
        result.tail_average =
            (sum_short - double(short_window) * mean_long) / double(long_window);
    } else {
        result.tail_average = Eigen::VectorXd::Constant(nd, std::nan(""));
    }
    return result;
}

IterateEnsemble run_ensemble(const RunConfig& config) {
    config.validate();
    IterateEnsemble ensemble;
    ensemble.config = config;
    ensemble.runs.resize(size_t(config.ensemble_size));
    const int jobs = std::max(1, config.jobs);
    if (jobs == 1) {
        for (int r = 0; r < config.ensemble_size; ++r)
            ensemble.runs[size_t(r)] = run_single(config, r);
    } else {
        std::vector<std::thread> workers;
        workers.reserve(size_t(jobs));
        for (int w = 0; w < jobs; ++w)
            workers.emplace_back([&, w] {
                for (int r = w; r < config.ensemble_size; r += jobs)
                    ensemble.runs[size_t(r)] = run_single(config, r);
            });
        for (auto& t : workers) t.join();
    }
    return ensemble;
}

double IterateEnsemble::divergence_fraction() const {
    if (runs.empty()) return 0.0;
    int diverged = 0;
    for (const auto& r : runs) diverged += r.diverged ? 1 : 0;
    return double(diverged) / double(runs.size());
}

std::vector<double> IterateEnsemble::node_samples(int node) const {
    const int d = config.spec.d;
    std::vector<double> samples;
    samples.reserve(runs.size() * size_t(d));
    for (const auto& r : runs) {
        if (r.diverged) continue;
        for (int c = 0; c < d; ++c)
            samples.push_back(r.tail_average(Eigen::Index(node) * d + c));
    }
    return samples;
}

std::vector<double> run_coupled(const RunConfig& config, double p) {
    config.validate();
    const int n = config.spec.n_nodes;
    const int d = config.spec.d;
    const Eigen::Index nd = Eigen::Index(n) * d;
    std::vector<double> moments(size_t(config.total_steps), 0.0);

    Eigen::VectorXd x(nd), x2(nd), next(nd), next2(nd), scratch_a(d);
    for (int r = 0; r < config.ensemble_size; ++r) {
        const std::uint64_t run_seed = derive_seed(config.master_seed, std::uint64_t(r));
        init_state(config, derive_seed(run_seed, 0), x);
        init_state(config, derive_seed(run_seed, std::uint64_t(-1)), x2);
        for (int k = 1; k <= config.total_steps; ++k) {
            const std::uint64_t step_seed = derive_seed(run_seed, std::uint64_t(k));
            next = lift_to_blocks(config.mixing, d, x);
            next2 = lift_to_blocks(config.mixing, d, x2);
            for (int i = 0; i < n; ++i) {
                Xoshiro256pp rng(derive_seed(step_seed, std::uint64_t(stream_label(config, i))));
                NormalSampler normal;
                NodeStep::apply(config.spec, i, rng, normal, scratch_a, x,
                                next.segment(Eigen::Index(i) * d, d), &x2, &next2);
            }
            x.swap(next);
            x2.swap(next2);
            moments[size_t(k - 1)] += std::pow((x - x2).norm(), p);
        }
    }
    for (double& m : moments) m /= double(config.ensemble_size);
    return moments;
}

double fw_gradient_check(const ProblemSpec& spec, const MixingMatrix& mixing,
                         const Eigen::VectorXd& x, const StepDraw& draw) {
    const int n = spec.n_nodes;
    const int d = spec.d;
    Eigen::VectorXd grad(Eigen::Index(n) * d);
    for (int i = 0; i < n; ++i)
        grad.segment(Eigen::Index(i) * d, d) =
            draw.h_blocks[size_t(i)] * x.segment(Eigen::Index(i) * d, d) -
            draw.q_blocks[size_t(i)] / spec.eta;
    // Route 1: mixing then local gradient step.
    const Eigen::VectorXd de_step = lift_to_blocks(mixing, d, x) - spec.eta * grad;
    // Route 2: plain gradient step on the modified objective.
    const Eigen::VectorXd grad_fw = grad + (x - lift_to_blocks(mixing, d, x)) / spec.eta;
    const Eigen::VectorXd c_step = x - spec.eta * grad_fw;
    return (de_step - c_step).cwiseAbs().maxCoeff();
}

}  // namespace htsim
