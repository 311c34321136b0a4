#pragma once

// Closed-form convergence upper bounds for the three algorithms, the phi
// potential constants with their step-size gates, and estimators for the
// assumption constants (L, sigma^2, B^2, consensus recursion (rho_t, gamma_t)).

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fednoisy/datagen.hpp"
#include "fednoisy/engine.hpp"
#include "fednoisy/rng.hpp"

namespace fednoisy {

struct BoundError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Assumption-constant estimators
// ---------------------------------------------------------------------------

struct SmoothnessEstimate {
    double global = 0.0;          // lambda_max of (2/m) F^T F + 2 reg I
    double per_client_max = 0.0;  // max over client Hessians
};

namespace detail {

// Power iteration for lambda_max of v -> (2/m) F^T (F v) + 2 reg v, where F is
// the row subset given by `indices` (empty = all rows).
inline double hessian_lambda_max(const RegressionTask& task, const std::vector<int>& indices,
                                 double reg, double rel_tol) {
    const int d = task.d;
    const int m = indices.empty() ? task.m : static_cast<int>(indices.size());
    auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        Eigen::VectorXd out;
        if (indices.empty()) {
            out = (2.0 / m) * (task.features.transpose() * (task.features * v));
        } else {
            out = Eigen::VectorXd::Zero(d);
            for (int k : indices) {
                double p = task.features.row(k).dot(v);
                out += p * task.features.row(k).transpose();
            }
            out *= 2.0 / m;
        }
        return out + 2.0 * reg * v;
    };
    Rng rng = derive_stream(task.seed, 1, StreamPurpose::Probe);
    Eigen::VectorXd v(d);
    for (int j = 0; j < d; ++j) v(j) = rng.normal();
    v.normalize();
    double lambda = 0.0;
    for (int iter = 0; iter < 100000; ++iter) {
        Eigen::VectorXd av = apply(v);
        double next = v.dot(av);
        double norm = av.norm();
        if (norm == 0.0) return 2.0 * reg;  // zero data matrix
        v = av / norm;
        if (iter > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) return next;
        lambda = next;
    }
    throw BoundError("estimate_smoothness: power iteration did not converge");
}

}  // namespace detail

inline SmoothnessEstimate estimate_smoothness(const RegressionTask& task,
                                              const std::vector<ClientShard>& shards, double reg,
                                              double rel_tol = 1e-8) {
    SmoothnessEstimate est;
    est.global = detail::hessian_lambda_max(task, {}, reg, rel_tol);
    for (const auto& shard : shards) {
        std::vector<int> idx = shard.indices;
        est.per_client_max =
            std::max(est.per_client_max, detail::hessian_lambda_max(task, idx, reg, rel_tol));
    }
    return est;
}

inline std::vector<Eigen::VectorXd> probe_points(int count, int d, std::uint64_t seed) {
    std::vector<Eigen::VectorXd> points;
    points.reserve(count);
    Rng rng = derive_stream(seed, 2, StreamPurpose::Probe);
    for (int p = 0; p < count; ++p) {
        Eigen::VectorXd x(d);
        for (int j = 0; j < d; ++j) x(j) = rng.normal();
        points.push_back(std::move(x));
    }
    return points;
}

struct Sigma2Estimate {
    double value = 0.0;      // max over probes and clients of E||g~ - g||^2
    double std_error = 0.0;  // Monte Carlo standard error of the max cell
};

inline Sigma2Estimate estimate_sigma2(const RegressionTask& task,
                                      const std::vector<ClientShard>& shards, const LossConfig& cfg,
                                      int probes, int samples, std::uint64_t seed = 0) {
    if (cfg.full_batch()) return {0.0, 0.0};
    Sigma2Estimate est;
    auto points = probe_points(probes, task.d, seed ? seed : task.seed);
    for (int p = 0; p < probes; ++p) {
        for (const auto& shard : shards) {
            Eigen::VectorXd exact = full_gradient(points[p], task, shard, cfg.reg);
            double sum = 0.0, sum_sq = 0.0;
            Rng rng = derive_stream(seed ? seed : task.seed, 3, StreamPurpose::Probe,
                                    static_cast<std::uint64_t>(shard.client_id),
                                    static_cast<std::uint64_t>(p));
            for (int s = 0; s < samples; ++s) {
                double dev = (gradient(points[p], task, shard, cfg, rng) - exact).squaredNorm();
                sum += dev;
                sum_sq += dev * dev;
            }
            double mean = sum / samples;
            if (mean > est.value) {
                est.value = mean;
                double var = std::max(0.0, sum_sq / samples - mean * mean);
                est.std_error = std::sqrt(var / samples);
            }
        }
    }
    return est;
}

// Max over probe points of (1/n) sum_i ||grad f_i(x) - grad f(x)||^2 with
// deterministic full gradients (Assumption: bounded client dissimilarity).
inline double estimate_B2(const RegressionTask& task, const std::vector<ClientShard>& shards,
                          double reg, int probes, std::uint64_t seed = 0) {
    auto points = probe_points(probes, task.d, seed ? seed : hash_combine(task.seed, 7));
    const int n = static_cast<int>(shards.size());
    double b2 = 0.0;
    for (const auto& x : points) {
        Eigen::VectorXd global = full_gradient(x, task, reg);
        double acc = 0.0;
        for (const auto& shard : shards)
            acc += (full_gradient(x, task, shard, reg) - global).squaredNorm();
        b2 = std::max(b2, acc / n);
    }
    return b2;
}

struct ConsensusFit {
    double rho_hat = 0.0;
    double gamma_hat = 0.0;
};

// Fits c_{t+1} <= rho_hat c_t + gamma_hat as an upper envelope: least-squares
// slope clamped into (0,1), then the intercept lifted until the inequality
// holds for every consecutive pair.
inline ConsensusFit fit_consensus_recursion(const std::vector<double>& ce) {
    if (ce.size() < 3) throw std::invalid_argument("fit_consensus_recursion: need >= 3 points");
    for (double c : ce)
        if (!std::isfinite(c) || c < 0.0)
            throw std::invalid_argument("fit_consensus_recursion: sequence must be finite and >= 0");
    const std::size_t k = ce.size() - 1;
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
        mean_x += ce[t];
        mean_y += ce[t + 1];
    }
    mean_x /= k;
    mean_y /= k;
    double cov = 0.0, var = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
        cov += (ce[t] - mean_x) * (ce[t + 1] - mean_y);
        var += (ce[t] - mean_x) * (ce[t] - mean_x);
    }
    // degenerate fit (constant sequence): any rho in (0,1) works with the
    // matching envelope intercept
    double slope = var > 1e-30 ? cov / var : 0.5;
    ConsensusFit fit;
    fit.rho_hat = std::min(1.0 - 1e-9, std::max(1e-9, slope));
    double gamma = 0.0;
    for (std::size_t t = 0; t < k; ++t)
        gamma = std::max(gamma, ce[t + 1] - fit.rho_hat * ce[t]);
    fit.gamma_hat = std::max(0.0, gamma);
    return fit;
}

// ---------------------------------------------------------------------------
// phi constants and theorem evaluators
// ---------------------------------------------------------------------------

struct TheoremInputs {
    double L = 0.0;
    double sigma2 = 0.0;
    double B2 = 0.0;
    double rho = 0.0;
    double eta = 0.0;  // constant step size assumed by the theorems
    int T = 0;
    int n = 0;
    double Dbar2 = 0.0;  // (1/nT) sum_{t,i} D^2_{t,i}
    double f_gap = 0.0;  // f(xbar_1) - f*
    double ce1 = 0.0;    // (C.E.)_1
    std::vector<ConsensusFit> recursion;  // (rho_t, gamma_t) per round, FedNDL3 only
};

struct BoundBreakdown {
    double total = 0.0;
    double term_init = 0.0;
    double term_sigma = 0.0;
    double term_B = 0.0;  // for FedNDL3 this is the (1/T) sum gamma_t/rho_t term
    double term_noise = 0.0;
    double phi = 0.0;  // phi_1 for FedNDL3
    bool init_divided_by_T = false;
};

inline double phi_fedndl1(double L, double eta, double rho) {
    if (!(eta * L < rho / (2.0 * std::sqrt(6.0))))
        throw BoundError("eta*L < rho/(2*sqrt(6)) violated");
    return 2.0 * rho * L * L * eta / (rho * rho - 24.0 * eta * eta * L * L);
}

inline double phi_fedndl2(double L, double eta, double rho) {
    if (!(eta * L < rho / (4.0 * std::sqrt(3.0))))
        throw BoundError("eta*L < rho/(4*sqrt(3)) violated");
    return rho * L * L * eta * (3.0 + 2.0 * eta * L) / (rho * rho - 48.0 * L * L * eta * eta);
}

// phi_{t+1} = L^2 eta (1 - 6 eta L) / (2 rho_t), one value per round.
inline std::vector<double> phi_fedndl3(double L, double eta, const std::vector<double>& rho_t) {
    if (!(eta * L < 1.0 / 6.0)) throw BoundError("eta*L < 1/6 violated");
    std::vector<double> phis;
    phis.reserve(rho_t.size());
    for (double r : rho_t) {
        if (!(r > 0.0 && r < 1.0)) throw BoundError("rho_t not in (0,1)");
        phis.push_back(L * L * eta * (1.0 - 6.0 * eta * L) / (2.0 * r));
    }
    return phis;
}

// phi_1 follows from the recursion phi_t = L^2 eta (1+2L eta) + 2 phi_{t+1} rho_t
// and is independent of the rho_t values.
inline double phi1_fedndl3(double L, double eta) {
    return 2.0 * L * L * eta * (1.0 - 2.0 * eta * L);
}

// Weight the theorems put on the consensus-error part of the LHS.
inline double lhs_ce_weight(Algorithm alg, double L) {
    switch (alg) {
        case Algorithm::FedNDL1: return L * L / 2.0;
        case Algorithm::FedNDL2: return L * L;
        case Algorithm::FedNDL3: return 2.0 * L * L;
    }
    return 0.0;
}

// RHS of the appendix theorems, term by term as printed. For FedNDL1 the
// first term is not divided by T in the printed statement (unlike the other
// two); divide_init_by_T applies the division anyway for comparison.
inline BoundBreakdown theorem_bound(Algorithm alg, const TheoremInputs& in,
                                    bool divide_init_by_T = false) {
    if (in.eta <= 0.0 || in.L < 0.0 || in.T < 1 || in.n < 1)
        throw std::invalid_argument("theorem_bound: need eta > 0, L >= 0, T >= 1, n >= 1");
    const double L = in.L, eta = in.eta, rho = in.rho, n = in.n, T = in.T;
    BoundBreakdown out;
    switch (alg) {
        case Algorithm::FedNDL1: {
            if (!(eta * L < 1.0 / 6.0)) throw BoundError("eta*L < 1/6 violated");
            const double phi = phi_fedndl1(L, eta, rho);
            const double c = 1.0 - 4.0 * eta * L;
            out.phi = phi;
            out.term_init = 2.0 * (in.f_gap + phi * in.ce1) / (eta * c);
            if (divide_init_by_T) {
                out.term_init /= T;
                out.init_divided_by_T = true;
            }
            out.term_sigma = 2.0 * eta * (phi * (1.0 - rho) + L / n) * in.sigma2 / c;
            out.term_B = 16.0 * phi * eta * in.B2 / (c * rho);
            out.term_noise = 2.0 * (L + phi * (rho / 2.0 + 2.0 / rho)) * in.Dbar2 / (eta * c);
            break;
        }
        case Algorithm::FedNDL2: {
            if (!(eta * L < 1.0 / 12.0)) throw BoundError("eta*L < 1/12 violated");
            const double phi = phi_fedndl2(L, eta, rho);
            const double c = 1.0 - 2.0 * eta * L;
            out.phi = phi;
            out.term_init = 2.0 * (in.f_gap + phi * in.ce1) / (eta * c * T);
            out.term_sigma = 2.0 * eta * (phi + L / n) * in.sigma2 / c;
            out.term_B = 8.0 * phi * eta * (1.0 + 2.0 / rho) * in.B2 / c;
            out.term_noise = 2.0 *
                             (L * L * (eta * (1.0 + 2.0 * L * eta) + 2.0) +
                              4.0 * phi * (1.0 - rho + 24.0 * L * L * eta * eta / rho)) *
                             in.Dbar2 / (eta * c);
            break;
        }
        case Algorithm::FedNDL3: {
            if (static_cast<int>(in.recursion.size()) != in.T)
                throw std::invalid_argument("theorem_bound: FedNDL3 needs a (rho_t, gamma_t) list of length T");
            if (!(eta * L < 1.0 / 6.0)) throw BoundError("eta*L < 1/6 violated");
            const double c = 1.0 - 2.0 * L * eta;
            const double phi1 = phi1_fedndl3(L, eta);
            out.phi = phi1;
            out.term_init = 2.0 * (in.f_gap + phi1 * in.ce1) / (eta * c * T);
            out.term_sigma = L * eta * in.sigma2 / (n * c);
            double gamma_over_rho = 0.0;
            for (const auto& p : in.recursion) {
                if (!(p.rho_hat > 0.0 && p.rho_hat < 1.0)) throw BoundError("rho_t not in (0,1)");
                if (p.gamma_hat < 0.0) throw BoundError("gamma_t >= 0 violated");
                gamma_over_rho += p.gamma_hat / p.rho_hat;
            }
            out.term_B = L * L * (1.0 - 6.0 * L * eta) / (T * c) * gamma_over_rho;
            out.term_noise = L * eta * in.Dbar2 / c;
            break;
        }
    }
    out.total = out.term_init + out.term_sigma + out.term_B + out.term_noise;
    return out;
}

// Big-O scaling of the noise term after substituting eta = O(1/sqrt(T)):
// T^{3/2}/rho * Dbar2 for FedNDL1/2, Dbar2/sqrt(T) for FedNDL3.
inline double noise_scaling_probe(Algorithm alg, double T, double rho, double Dbar2) {
    switch (alg) {
        case Algorithm::FedNDL1:
        case Algorithm::FedNDL2: return std::pow(T, 1.5) / rho * Dbar2;
        case Algorithm::FedNDL3: return Dbar2 / std::sqrt(T);
    }
    return 0.0;
}

// Full-batch gradient descent on the pooled task until ||grad f|| <= tol.
// The objective is quadratic, so this pins f* to machine precision.
struct MinimizerResult {
    Eigen::VectorXd x_star;
    double f_star = 0.0;
    int iterations = 0;
};

inline MinimizerResult solve_fstar(const RegressionTask& task, double reg, double grad_tol = 1e-10) {
    double L = detail::hessian_lambda_max(task, {}, reg, 1e-10);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(task.d);
    const double step = 1.0 / L;
    MinimizerResult res;
    for (int it = 0; it < 1000000; ++it) {
        Eigen::VectorXd g = full_gradient(x, task, reg);
        if (g.norm() <= grad_tol) {
            res.iterations = it;
            break;
        }
        x -= step * g;
        res.iterations = it + 1;
    }
    res.x_star = std::move(x);
    res.f_star = evaluate_loss(res.x_star, task, reg);
    return res;
}

}  // namespace fednoisy
