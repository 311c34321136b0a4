#pragma once

// Synthetic linear regression task, client sharding, and loss/gradient
// oracles. Loss convention: mean squared error (not half, not sum) plus
// reg * ||x||^2, so the full gradient is (2/m) F^T (F x - y) + 2 reg x.

#include <Eigen/Dense>
#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fednoisy/rng.hpp"

namespace fednoisy {

struct RegressionTask {
    int m = 0;  // samples
    int d = 0;  // dimension
    Eigen::VectorXd true_w;
    Eigen::MatrixXd features;  // m x d, row k = sample k
    Eigen::VectorXd labels;
    double label_noise_var = 0.0;
    std::uint64_t seed = 0;
};

struct ClientShard {
    int client_id = 0;
    std::vector<int> indices;  // into the parent task

    int size() const { return static_cast<int>(indices.size()); }
};

struct LossConfig {
    static constexpr int kFullBatch = -1;

    double reg = 1e-4;
    int batch_size = 32;  // kFullBatch for the deterministic full gradient

    bool full_batch() const { return batch_size == kFullBatch; }
};

inline RegressionTask generate_task(int m, int d, double label_noise_var, std::uint64_t seed) {
    if (m < 1 || d < 1) throw std::invalid_argument("generate_task: need m >= 1 and d >= 1");
    if (label_noise_var < 0.0) throw std::invalid_argument("generate_task: negative label noise variance");
    RegressionTask task;
    task.m = m;
    task.d = d;
    task.label_noise_var = label_noise_var;
    task.seed = seed;
    Rng rng = derive_stream(seed, 0, StreamPurpose::TaskData);
    task.true_w.resize(d);
    for (int j = 0; j < d; ++j) task.true_w(j) = rng.normal();
    task.features.resize(m, d);
    for (int k = 0; k < m; ++k)
        for (int j = 0; j < d; ++j) task.features(k, j) = rng.normal();
    task.labels = task.features * task.true_w;
    if (label_noise_var > 0.0) {
        const double sd = std::sqrt(label_noise_var);
        for (int k = 0; k < m; ++k) task.labels(k) += sd * rng.normal();
    }
    return task;
}

// Random IID partition into n shards with sizes differing by at most one.
inline std::vector<ClientShard> partition(const RegressionTask& task, int n, std::uint64_t seed) {
    if (n < 1 || n > task.m)
        throw std::invalid_argument("partition: need 1 <= n <= m, got n=" + std::to_string(n) +
                                    ", m=" + std::to_string(task.m));
    std::vector<int> perm(task.m);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng = derive_stream(seed, 0, StreamPurpose::Partition);
    for (int i = task.m - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    std::vector<ClientShard> shards(n);
    const int base = task.m / n;
    const int extra = task.m % n;
    int pos = 0;
    for (int i = 0; i < n; ++i) {
        shards[i].client_id = i;
        int size = base + (i < extra ? 1 : 0);
        shards[i].indices.assign(perm.begin() + pos, perm.begin() + pos + size);
        pos += size;
    }
    return shards;
}

inline double evaluate_loss(const Eigen::VectorXd& x, const RegressionTask& task, double reg) {
    if (task.m == 0) throw std::invalid_argument("evaluate_loss: empty data set");
    Eigen::VectorXd residual = task.features * x - task.labels;
    return residual.squaredNorm() / task.m + reg * x.squaredNorm();
}

inline double evaluate_loss(const Eigen::VectorXd& x, const RegressionTask& task,
                            const ClientShard& shard, double reg) {
    if (shard.indices.empty()) throw std::invalid_argument("evaluate_loss: empty shard");
    double sum = 0.0;
    for (int k : shard.indices) {
        double r = task.features.row(k).dot(x) - task.labels(k);
        sum += r * r;
    }
    return sum / shard.size() + reg * x.squaredNorm();
}

// Deterministic full gradient of the global objective.
inline Eigen::VectorXd full_gradient(const Eigen::VectorXd& x, const RegressionTask& task, double reg) {
    Eigen::VectorXd residual = task.features * x - task.labels;
    return (2.0 / task.m) * (task.features.transpose() * residual) + 2.0 * reg * x;
}

// Deterministic full gradient of one client's local objective.
inline Eigen::VectorXd full_gradient(const Eigen::VectorXd& x, const RegressionTask& task,
                                     const ClientShard& shard, double reg) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(task.d);
    for (int k : shard.indices) {
        double r = task.features.row(k).dot(x) - task.labels(k);
        g += 2.0 * r * task.features.row(k).transpose();
    }
    return g / shard.size() + 2.0 * reg * x;
}

// Stochastic gradient: a uniformly drawn mini-batch without replacement,
// unbiased for the local full gradient. With batch_size == kFullBatch this is
// exactly the full gradient.
inline Eigen::VectorXd gradient(const Eigen::VectorXd& x, const RegressionTask& task,
                                const ClientShard& shard, const LossConfig& cfg, Rng& rng) {
    if (cfg.full_batch()) return full_gradient(x, task, shard, cfg.reg);
    const int b = cfg.batch_size;
    if (b < 1 || b > shard.size())
        throw std::invalid_argument("gradient: batch size " + std::to_string(b) +
                                    " out of range for shard of " + std::to_string(shard.size()));
    // partial Fisher-Yates over a scratch copy of the shard indices
    std::vector<int> pool = shard.indices;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(task.d);
    for (int i = 0; i < b; ++i) {
        std::uint64_t j = i + rng.below(static_cast<std::uint64_t>(pool.size()) - i);
        std::swap(pool[i], pool[j]);
        int k = pool[i];
        double r = task.features.row(k).dot(x) - task.labels(k);
        g += 2.0 * r * task.features.row(k).transpose();
    }
    return g / b + 2.0 * cfg.reg * x;
}

// Flat CSV export for cross-implementation comparison.
// Header: m,d,label_noise_var,seed then one row per sample (features..., label),
// then a final row with the ground-truth weights.
inline void save_task_csv(const RegressionTask& task, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.precision(17);
    out << task.m << "," << task.d << "," << task.label_noise_var << "," << task.seed << "\n";
    for (int k = 0; k < task.m; ++k) {
        for (int j = 0; j < task.d; ++j) out << task.features(k, j) << ",";
        out << task.labels(k) << "\n";
    }
    for (int j = 0; j < task.d; ++j) out << task.true_w(j) << (j + 1 < task.d ? "," : "\n");
}

inline RegressionTask load_task_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open task file: " + path);
    auto next_fields = [&in, &path]() {
        std::string line;
        if (!std::getline(in, line)) throw std::runtime_error("truncated task file: " + path);
        std::vector<double> fields;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) fields.push_back(std::stod(cell));
        return fields;
    };
    auto header = next_fields();
    if (header.size() != 4) throw std::runtime_error("bad task file header: " + path);
    RegressionTask task;
    task.m = static_cast<int>(header[0]);
    task.d = static_cast<int>(header[1]);
    task.label_noise_var = header[2];
    task.seed = static_cast<std::uint64_t>(header[3]);
    task.features.resize(task.m, task.d);
    task.labels.resize(task.m);
    for (int k = 0; k < task.m; ++k) {
        auto row = next_fields();
        if (static_cast<int>(row.size()) != task.d + 1)
            throw std::runtime_error("bad sample row in task file: " + path);
        for (int j = 0; j < task.d; ++j) task.features(k, j) = row[j];
        task.labels(k) = row[task.d];
    }
    auto w = next_fields();
    if (static_cast<int>(w.size()) != task.d)
        throw std::runtime_error("bad weight row in task file: " + path);
    task.true_w.resize(task.d);
    for (int j = 0; j < task.d; ++j) task.true_w(j) = w[j];
    return task;
}

}  // namespace fednoisy
