#pragma once

// Round execution for the three noisy decentralized SGD variants and the
// driver for full training runs. Rounds are synchronous: all gradients and
// noise vectors of round t are drawn against the pre-round snapshot before
// any state is written.

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fednoisy/channel.hpp"
#include "fednoisy/datagen.hpp"
#include "fednoisy/metrics.hpp"
#include "fednoisy/rng.hpp"
#include "fednoisy/topology.hpp"

namespace fednoisy {

enum class Algorithm { FedNDL1, FedNDL2, FedNDL3 };

inline std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::FedNDL1: return "FedNDL1";
        case Algorithm::FedNDL2: return "FedNDL2";
        case Algorithm::FedNDL3: return "FedNDL3";
    }
    return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
    if (s == "fedndl1" || s == "FedNDL1") return Algorithm::FedNDL1;
    if (s == "fedndl2" || s == "FedNDL2") return Algorithm::FedNDL2;
    if (s == "fedndl3" || s == "FedNDL3") return Algorithm::FedNDL3;
    throw std::invalid_argument("unknown algorithm '" + s + "'");
}

struct LrSchedule {
    enum class Kind { Geometric, Constant };

    Kind kind = Kind::Geometric;
    double lr0 = 0.2;
    double decay = 0.9;

    static LrSchedule geometric(double lr0, double decay) {
        return {Kind::Geometric, lr0, decay};
    }
    static LrSchedule constant(double lr0) { return {Kind::Constant, lr0, 1.0}; }
};

inline double lr_at(const LrSchedule& s, int t) {
    if (t < 0) throw std::invalid_argument("lr_at: negative round");
    if (s.kind == LrSchedule::Kind::Constant) return s.lr0;
    return s.lr0 * std::pow(s.decay, t);
}

// grad(i, x): stochastic gradient of client i at x for the current round.
using GradFn = std::function<Eigen::VectorXd(int, const Eigen::VectorXd&)>;
// noise(j): channel noise broadcast by sender j in the current round.
using NoiseFn = std::function<Eigen::VectorXd(int)>;

// What a step drew and computed; used by tests to check the averaged
// recursions without touching engine internals.
struct RoundTrace {
    Eigen::MatrixXd grads;   // column j = gradient used for client j
    Eigen::MatrixXd noise;   // column j = delta_j
    Eigen::MatrixXd x_half;  // intermediate state
};

// FedNDL1: local SGD step, then gossip of the noisy updated parameters.
//   x_i' = sum_j w_ij (x_j - eta g_j + delta_j)
inline Eigen::MatrixXd step_fedndl1(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w, double eta,
                                    const GradFn& grad, const NoiseFn& noise,
                                    RoundTrace* trace = nullptr) {
    const int n = static_cast<int>(x.cols());
    Eigen::MatrixXd g(x.rows(), n), delta(x.rows(), n);
    for (int i = 0; i < n; ++i) {
        g.col(i) = grad(i, x.col(i));
        delta.col(i) = noise(i);
    }
    Eigen::MatrixXd x_half = x - eta * g;
    Eigen::MatrixXd next = (x_half + delta) * w;
    if (trace) *trace = {std::move(g), std::move(delta), std::move(x_half)};
    return next;
}

// FedNDL2: gossip of the noisy parameters first, then the local SGD step at
// the mixed point.
//   x_i^{+1/2} = sum_j w_ij (x_j + delta_j);  x_i' = x_i^{+1/2} - eta g_i(x_i^{+1/2})
inline Eigen::MatrixXd step_fedndl2(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w, double eta,
                                    const GradFn& grad, const NoiseFn& noise,
                                    RoundTrace* trace = nullptr) {
    const int n = static_cast<int>(x.cols());
    Eigen::MatrixXd delta(x.rows(), n);
    for (int i = 0; i < n; ++i) delta.col(i) = noise(i);
    Eigen::MatrixXd x_half = (x + delta) * w;
    Eigen::MatrixXd g(x.rows(), n);
    for (int i = 0; i < n; ++i) g.col(i) = grad(i, x_half.col(i));
    Eigen::MatrixXd next = x_half - eta * g;
    if (trace) *trace = {std::move(g), std::move(delta), std::move(x_half)};
    return next;
}

// FedNDL3: gradients travel over the noisy channel, parameters are never
// mixed.
//   x_i' = x_i - eta sum_j w_ij (g_j + delta_j)
inline Eigen::MatrixXd step_fedndl3(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w, double eta,
                                    const GradFn& grad, const NoiseFn& noise,
                                    RoundTrace* trace = nullptr) {
    const int n = static_cast<int>(x.cols());
    Eigen::MatrixXd g(x.rows(), n), delta(x.rows(), n);
    for (int i = 0; i < n; ++i) {
        g.col(i) = grad(i, x.col(i));
        delta.col(i) = noise(i);
    }
    Eigen::MatrixXd next = x - eta * ((g + delta) * w);
    if (trace) *trace = {std::move(g), std::move(delta), x};
    return next;
}

inline Eigen::MatrixXd step(Algorithm alg, const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                            double eta, const GradFn& grad, const NoiseFn& noise,
                            RoundTrace* trace = nullptr) {
    switch (alg) {
        case Algorithm::FedNDL1: return step_fedndl1(x, w, eta, grad, noise, trace);
        case Algorithm::FedNDL2: return step_fedndl2(x, w, eta, grad, noise, trace);
        case Algorithm::FedNDL3: return step_fedndl3(x, w, eta, grad, noise, trace);
    }
    throw std::logic_error("unreachable");
}

struct RunConfig {
    Algorithm algorithm = Algorithm::FedNDL1;
    TopologyKind topology;
    int n = 16;
    int rounds = 300;
    LrSchedule lr;
    LossConfig loss;
    NoiseSchedule noise;
    std::uint64_t master_seed = 42;
    int repeats = 1;
    bool per_client_init = false;  // default: all columns start at the same seeded vector
};

// Builds the per-round gradient closure for one repeat. Each (client, round)
// draws its mini-batch from a freshly derived stream, so replays are exact.
inline GradFn make_grad_fn(const RegressionTask& task, const std::vector<ClientShard>& shards,
                           const LossConfig& loss, std::uint64_t master_seed, int repeat, int t) {
    return [&task, &shards, loss, master_seed, repeat, t](int i, const Eigen::VectorXd& xi) {
        Rng rng = derive_stream(master_seed, repeat, StreamPurpose::Batch,
                                static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(t));
        return gradient(xi, task, shards[i], loss, rng);
    };
}

inline NoiseFn make_noise_fn(const NoiseSchedule& schedule, std::uint64_t master_seed, int repeat,
                             int t) {
    std::uint64_t noise_seed = hash_combine(master_seed, static_cast<std::uint64_t>(repeat));
    return [&schedule, noise_seed, t](int j) { return sample_noise(t, j, schedule, noise_seed); };
}

inline Eigen::MatrixXd initial_state(const RunConfig& cfg, int d, int repeat) {
    Eigen::MatrixXd x(d, cfg.n);
    if (cfg.per_client_init) {
        for (int i = 0; i < cfg.n; ++i) {
            Rng rng = derive_stream(cfg.master_seed, repeat, StreamPurpose::Init,
                                    static_cast<std::uint64_t>(i));
            for (int j = 0; j < d; ++j) x(j, i) = rng.normal();
        }
    } else {
        Rng rng = derive_stream(cfg.master_seed, repeat, StreamPurpose::Init);
        Eigen::VectorXd x0(d);
        for (int j = 0; j < d; ++j) x0(j) = rng.normal();
        x.colwise() = x0;
    }
    return x;
}

// Runs all repeats and records one MetricsRecord per (repeat, round),
// including the round-0 evaluation. A repeat that produces a non-finite state
// stops early with its last finite record flagged as diverged.
inline std::vector<MetricsRecord> run_experiment(const RegressionTask& task,
                                                 const std::vector<ClientShard>& shards,
                                                 const MixingMatrix& mixing, const RunConfig& cfg) {
    if (static_cast<int>(shards.size()) != cfg.n)
        throw std::invalid_argument("run_experiment: shard count != client count");
    if (cfg.repeats < 1) throw std::invalid_argument("run_experiment: repeats >= 1 required");
    const std::string alg_name = algorithm_name(cfg.algorithm);
    const std::string topo_name = cfg.topology.name();
    const double nu = cfg.noise.per_coord_variance(0, 0);
    std::vector<MetricsRecord> log;
    log.reserve(static_cast<std::size_t>(cfg.repeats) * (cfg.rounds + 1));

    for (int rep = 0; rep < cfg.repeats; ++rep) {
        Eigen::MatrixXd x = initial_state(cfg, task.d, rep);
        // returns false when a metric overflowed even though x is still finite
        auto record = [&](int t, double eta) {
            MetricsRecord r;
            r.algorithm = alg_name;
            r.topology = topo_name;
            r.noise_var_per_coord = nu;
            r.repeat = rep;
            r.t = t;
            r.eta = eta;
            Eigen::VectorXd mean = column_mean(x);
            r.loss = evaluate_loss(mean, task, cfg.loss.reg);
            double local_sum = 0.0;
            for (int i = 0; i < cfg.n; ++i)
                local_sum += evaluate_loss(x.col(i), task, shards[i], cfg.loss.reg);
            r.loss_local_mean = local_sum / cfg.n;
            r.consensus_error = consensus_error(x);
            r.grad_norm_sq = full_gradient(mean, task, cfg.loss.reg).squaredNorm();
            bool finite = std::isfinite(r.loss) && std::isfinite(r.consensus_error) &&
                          std::isfinite(r.grad_norm_sq);
            if (finite) log.push_back(std::move(r));
            return finite;
        };
        record(0, lr_at(cfg.lr, 0));
        for (int t = 0; t < cfg.rounds; ++t) {
            double eta = lr_at(cfg.lr, t);
            GradFn grad = make_grad_fn(task, shards, cfg.loss, cfg.master_seed, rep, t);
            NoiseFn noise = make_noise_fn(cfg.noise, cfg.master_seed, rep, t);
            Eigen::MatrixXd next = step(cfg.algorithm, x, mixing.w, eta, grad, noise);
            bool ok = next.allFinite();
            if (ok) {
                x = std::move(next);
                ok = record(t + 1, eta);
            }
            if (!ok) {
                // record-and-stop: divergence is a result, not a failure
                log.back().diverged = true;
                break;
            }
        }
    }
    return log;
}

}  // namespace fednoisy
