#pragma once

// Per-round quantities: global loss at the average iterate, consensus error
// (1/n)||Xbar - X||_F^2, squared gradient norm at the average iterate, and
// aggregation of repeated runs.

#include <Eigen/Dense>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "fednoisy/datagen.hpp"

namespace fednoisy {

struct MetricsRecord {
    std::string algorithm;
    std::string topology;
    double noise_var_per_coord = 0.0;
    int repeat = 0;
    int t = 0;
    double eta = 0.0;
    double loss = 0.0;            // f at the average iterate, pooled data
    double loss_local_mean = 0.0; // mean of per-client local losses (alternative reading)
    double consensus_error = 0.0;
    double grad_norm_sq = 0.0;
    bool diverged = false;
};

// Mean over columns by pairwise tree summation. A strided sequential
// reduction rounds even when every column is bit-identical; the tree keeps
// all partial sums exact in that case (for power-of-two n), so consensus of
// identical columns measures as exactly zero.
inline Eigen::VectorXd column_mean(const Eigen::MatrixXd& x) {
    const int n = static_cast<int>(x.cols());
    std::vector<Eigen::VectorXd> acc(n);
    for (int i = 0; i < n; ++i) acc[i] = x.col(i);
    int len = n;
    while (len > 1) {
        int half = len / 2;
        for (int i = 0; i < half; ++i) acc[i] = acc[2 * i] + acc[2 * i + 1];
        if (len % 2) {
            acc[half] = acc[len - 1];
            ++half;
        }
        len = half;
    }
    return acc[0] / n;
}

inline double consensus_error(const Eigen::MatrixXd& x) {
    const int n = static_cast<int>(x.cols());
    Eigen::VectorXd mean = column_mean(x);
    return (x.colwise() - mean).squaredNorm() / n;
}

inline double grad_norm_at_average(const Eigen::MatrixXd& x, const RegressionTask& task, double reg) {
    Eigen::VectorXd mean = column_mean(x);
    return full_gradient(mean, task, reg).squaredNorm();
}

struct AggregateRecord {
    std::string algorithm;
    std::string topology;
    double noise_var_per_coord = 0.0;
    int t = 0;
    double eta = 0.0;
    double loss = 0.0;
    double consensus_error = 0.0;
    double grad_norm_sq = 0.0;
    int survivors = 0;  // repeats still running (not yet stopped by divergence) at t
};

// Arithmetic mean per (algorithm, topology, noise, t). Diverged repeats stop
// contributing after their last recorded round; the survivor count says how
// many repeats the mean covers.
inline std::vector<AggregateRecord> aggregate(const std::vector<MetricsRecord>& records) {
    if (records.empty()) throw std::invalid_argument("aggregate: empty record set");
    std::map<std::tuple<std::string, std::string, double, int>, AggregateRecord> groups;
    for (const auto& r : records) {
        auto key = std::make_tuple(r.algorithm, r.topology, r.noise_var_per_coord, r.t);
        auto& agg = groups[key];
        if (agg.survivors == 0) {
            agg.algorithm = r.algorithm;
            agg.topology = r.topology;
            agg.noise_var_per_coord = r.noise_var_per_coord;
            agg.t = r.t;
            agg.eta = r.eta;
        }
        agg.loss += r.loss;
        agg.consensus_error += r.consensus_error;
        agg.grad_norm_sq += r.grad_norm_sq;
        agg.survivors += 1;
    }
    std::vector<AggregateRecord> out;
    out.reserve(groups.size());
    for (auto& [key, agg] : groups) {
        agg.loss /= agg.survivors;
        agg.consensus_error /= agg.survivors;
        agg.grad_norm_sq /= agg.survivors;
        out.push_back(std::move(agg));
    }
    return out;
}

}  // namespace fednoisy
