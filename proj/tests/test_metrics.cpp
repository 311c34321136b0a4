#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fednoisy/bounds.hpp"
#include "fednoisy/engine.hpp"
#include "fednoisy/metrics.hpp"
#include "helpers.hpp"

using namespace fednoisy;

TEST_CASE("consensus error: closed forms") {
    Eigen::MatrixXd equal(3, 5);
    equal.colwise() = Eigen::Vector3d(1.0, -2.0, 0.5);
    CHECK(consensus_error(equal) == 0.0);

    Eigen::MatrixXd x(1, 2);
    x << 0.0, 2.0;
    CHECK(consensus_error(x) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("consensus error matches the projection-matrix oracle") {
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd x = testutil::random_matrix(3, 4, rng);
        const int n = 4;
        Eigen::MatrixXd proj =
            Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
        double oracle = (x * proj).squaredNorm() / n;
        CHECK(consensus_error(x) == Catch::Approx(oracle).margin(1e-12));
    }
}

TEST_CASE("consensus error invariances") {
    Rng rng(13);
    Eigen::MatrixXd x = testutil::random_matrix(6, 5, rng);
    double base = consensus_error(x);

    Eigen::VectorXd shift = testutil::random_vector(6, rng);
    Eigen::MatrixXd shifted = x.colwise() + shift;
    CHECK(consensus_error(shifted) == Catch::Approx(base).margin(1e-12));

    Eigen::VectorXd mean = x.rowwise().mean();
    Eigen::MatrixXd centered = x.colwise() - mean;
    CHECK(consensus_error(3.0 * centered) ==
          Catch::Approx(9.0 * consensus_error(centered)).margin(1e-12));
}

TEST_CASE("pure gossip contracts consensus error by at least (1 - rho)") {
    for (auto kind : {TopologyKind::ring(), TopologyKind::torus(4, 4), TopologyKind::full()}) {
        auto mm = build_mixing_matrix(kind, 16);
        Rng rng(14);
        Eigen::MatrixXd x = testutil::random_matrix(5, 16, rng);
        for (int t = 0; t < 10; ++t) {
            double before = consensus_error(x);
            x = x * mm.w;  // zero gradients, zero noise: every algorithm's mixing core
            CHECK(consensus_error(x) <= (1.0 - mm.rho) * before + 1e-12);
        }
    }
}

TEST_CASE("grad_norm_at_average: stationarity and closed form") {
    auto task = generate_task(40, 5, 0.05, 15);
    const double reg = 1e-3;
    auto opt = solve_fstar(task, reg);
    Eigen::MatrixXd at_opt(5, 3);
    at_opt.colwise() = opt.x_star;
    CHECK(grad_norm_at_average(at_opt, task, reg) <= 1e-10);

    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(5, 3);
    Eigen::VectorXd closed = (-2.0 / task.m) * (task.features.transpose() * task.labels);
    CHECK(grad_norm_at_average(zero, task, 0.0) ==
          Catch::Approx(closed.squaredNorm()).margin(1e-10));
}

TEST_CASE("grad_norm_at_average matches finite differences") {
    auto task = generate_task(30, 5, 0.05, 16);
    Rng rng(17);
    Eigen::VectorXd mean = testutil::random_vector(5, rng);
    Eigen::MatrixXd x(5, 2);
    x.colwise() = mean;
    const double reg = 1e-4, h = 1e-6;
    Eigen::VectorXd fd(5);
    for (int j = 0; j < 5; ++j) {
        Eigen::VectorXd xp = mean, xm = mean;
        xp(j) += h;
        xm(j) -= h;
        fd(j) = (evaluate_loss(xp, task, reg) - evaluate_loss(xm, task, reg)) / (2.0 * h);
    }
    double got = grad_norm_at_average(x, task, reg);
    CHECK(got == Catch::Approx(fd.squaredNorm()).epsilon(1e-5));
}

namespace {

MetricsRecord rec(const std::string& alg, int repeat, int t, double loss, bool diverged = false) {
    MetricsRecord r;
    r.algorithm = alg;
    r.topology = "ring";
    r.noise_var_per_coord = 0.005;
    r.repeat = repeat;
    r.t = t;
    r.eta = 0.1;
    r.loss = loss;
    r.consensus_error = loss / 10.0;
    r.grad_norm_sq = loss * 2.0;
    r.diverged = diverged;
    return r;
}

}  // namespace

TEST_CASE("aggregate: identical repeats and simple means") {
    std::vector<MetricsRecord> log = {rec("FedNDL1", 0, 0, 5.0), rec("FedNDL1", 1, 0, 5.0),
                                      rec("FedNDL1", 2, 0, 5.0), rec("FedNDL1", 0, 1, 1.0),
                                      rec("FedNDL1", 1, 1, 2.0), rec("FedNDL1", 2, 1, 3.0)};
    auto aggs = aggregate(log);
    REQUIRE(aggs.size() == 2);
    CHECK(aggs[0].t == 0);
    CHECK(aggs[0].loss == 5.0);
    CHECK(aggs[0].survivors == 3);
    CHECK(aggs[1].t == 1);
    CHECK(aggs[1].loss == Catch::Approx(2.0).margin(1e-15));
    CHECK(aggs[1].grad_norm_sq == Catch::Approx(4.0).margin(1e-15));

    CHECK_THROWS_AS(aggregate(std::vector<MetricsRecord>{}), std::invalid_argument);
}

TEST_CASE("aggregate: diverged repeats stop contributing after their stop round") {
    // three repeats; repeat 2 diverges at t = 10 and has no later rows
    std::vector<MetricsRecord> log;
    for (int repeat = 0; repeat < 3; ++repeat) {
        int last = repeat == 2 ? 10 : 20;
        for (int t = 0; t <= last; ++t)
            log.push_back(rec("FedNDL2", repeat, t, repeat + 1.0, repeat == 2 && t == last));
    }
    auto aggs = aggregate(log);
    for (const auto& a : aggs) {
        if (a.t <= 10) {
            CHECK(a.survivors == 3);
            CHECK(a.loss == Catch::Approx(2.0).margin(1e-15));  // mean of {1,2,3}
        } else {
            CHECK(a.survivors == 2);
            CHECK(a.loss == Catch::Approx(1.5).margin(1e-15));  // mean of {1,2}
        }
    }
}

TEST_CASE("aggregate groups by algorithm, topology, and noise") {
    std::vector<MetricsRecord> log = {rec("FedNDL1", 0, 0, 1.0), rec("FedNDL2", 0, 0, 2.0)};
    log[1].topology = "full";
    auto aggs = aggregate(log);
    REQUIRE(aggs.size() == 2);
    CHECK(aggs[0].survivors == 1);
    CHECK(aggs[1].survivors == 1);
}
