#pragma once

// Communication graphs and their gossip (mixing) matrices. A mixing matrix is
// symmetric, doubly stochastic and nonnegative; its spectral gap
// rho = 1 - lambda2^2 is the per-step contraction factor of gossip averaging
// measured in squared Frobenius norm.

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fednoisy {

struct TopologyKind {
    enum class Type { Ring, Torus, FullyConnected };

    Type type = Type::FullyConnected;
    int rows = 0;  // Torus only
    int cols = 0;

    static TopologyKind ring() { return {Type::Ring, 0, 0}; }
    static TopologyKind torus(int rows, int cols) { return {Type::Torus, rows, cols}; }
    static TopologyKind full() { return {Type::FullyConnected, 0, 0}; }

    std::string name() const {
        switch (type) {
            case Type::Ring: return "ring";
            case Type::Torus: return "torus" + std::to_string(rows) + "x" + std::to_string(cols);
            case Type::FullyConnected: return "full";
        }
        return "?";
    }
};

// Parses "ring", "full", "torus" (square, side inferred from n later) or
// "torusRxC". Throws on anything else.
inline TopologyKind parse_topology(const std::string& s, int n) {
    if (s == "ring") return TopologyKind::ring();
    if (s == "full" || s == "fully_connected") return TopologyKind::full();
    if (s.rfind("torus", 0) == 0) {
        std::string dims = s.substr(5);
        if (dims.empty()) {
            int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
            if (side * side != n)
                throw std::invalid_argument("topology 'torus' needs a square client count, got n=" +
                                            std::to_string(n) + "; use torusRxC");
            return TopologyKind::torus(side, side);
        }
        auto xpos = dims.find('x');
        if (xpos == std::string::npos)
            throw std::invalid_argument("bad torus spec '" + s + "', expected torusRxC");
        int r = std::stoi(dims.substr(0, xpos));
        int c = std::stoi(dims.substr(xpos + 1));
        return TopologyKind::torus(r, c);
    }
    throw std::invalid_argument("unknown topology '" + s + "' (expected ring, torus[RxC], full)");
}

struct MixingMatrix {
    int n = 0;
    Eigen::MatrixXd w;
    double rho = 0.0;

    // Wraps a raw matrix without running construction checks. Test hook for
    // degenerate matrices (e.g. W = I) and for user-supplied files.
    static MixingMatrix unchecked(Eigen::MatrixXd mat);
};

// Largest absolute eigenvalue of W restricted to the complement of the
// all-ones eigenvector, returned as rho = 1 - lambda2^2.
inline double spectral_gap(const Eigen::MatrixXd& w) {
    const int n = static_cast<int>(w.rows());
    Eigen::MatrixXd deflated = w - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(deflated, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("spectral_gap: eigen-solve failed, matrix is malformed");
    double lambda2 = solver.eigenvalues().cwiseAbs().maxCoeff();
    double rho = 1.0 - lambda2 * lambda2;
    if (std::abs(rho) < 1e-14) rho = 0.0;
    return rho;
}

inline MixingMatrix MixingMatrix::unchecked(Eigen::MatrixXd mat) {
    MixingMatrix mm;
    mm.n = static_cast<int>(mat.rows());
    mm.w = std::move(mat);
    mm.rho = spectral_gap(mm.w);
    return mm;
}

inline MixingMatrix build_mixing_matrix(TopologyKind kind, int n) {
    if (n < 2) throw std::invalid_argument("mixing matrix needs n >= 2 clients");
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    switch (kind.type) {
        case TopologyKind::Type::Ring: {
            if (n < 3) throw std::invalid_argument("ring topology needs n >= 3");
            for (int i = 0; i < n; ++i) {
                w(i, i) += 1.0 / 3.0;
                w(i, (i + 1) % n) += 1.0 / 3.0;
                w(i, (i + n - 1) % n) += 1.0 / 3.0;
            }
            break;
        }
        case TopologyKind::Type::Torus: {
            const int r = kind.rows, c = kind.cols;
            if (r < 3 || c < 3)
                throw std::invalid_argument("torus topology needs rows >= 3 and cols >= 3");
            if (r * c != n)
                throw std::invalid_argument("torus dims " + std::to_string(r) + "x" +
                                            std::to_string(c) + " do not match n=" + std::to_string(n));
            auto id = [c](int row, int col) { return row * c + col; };
            for (int row = 0; row < r; ++row) {
                for (int col = 0; col < c; ++col) {
                    int i = id(row, col);
                    w(i, i) += 0.2;
                    w(i, id((row + 1) % r, col)) += 0.2;
                    w(i, id((row + r - 1) % r, col)) += 0.2;
                    w(i, id(row, (col + 1) % c)) += 0.2;
                    w(i, id(row, (col + c - 1) % c)) += 0.2;
                }
            }
            break;
        }
        case TopologyKind::Type::FullyConnected:
            w.setConstant(1.0 / n);
            break;
    }
    MixingMatrix mm;
    mm.n = n;
    mm.w = std::move(w);
    mm.rho = spectral_gap(mm.w);
    return mm;
}

// Returns the list of violated invariants; empty means valid. Tolerance is
// 1e-12 for constructed matrices, pass 1e-9 for matrices loaded from file.
inline std::vector<std::string> validate_mixing(const MixingMatrix& mm, double tol = 1e-12) {
    std::vector<std::string> violations;
    const int n = mm.n;
    const Eigen::MatrixXd& w = mm.w;
    if (w.rows() != n || w.cols() != n) {
        violations.push_back("matrix is not n x n");
        return violations;
    }
    if ((w - w.transpose()).cwiseAbs().maxCoeff() > tol)
        violations.push_back("not symmetric");
    if (w.minCoeff() < -tol)
        violations.push_back("negative entries");
    if ((w.rowwise().sum().array() - 1.0).abs().maxCoeff() > tol)
        violations.push_back("row sums != 1");
    if ((w.colwise().sum().array() - 1.0).abs().maxCoeff() > tol)
        violations.push_back("column sums != 1");
    if (w.diagonal().minCoeff() <= 0.0)
        violations.push_back("missing self-loop (w_ii <= 0)");
    if (!(mm.rho > 0.0 && mm.rho <= 1.0))
        violations.push_back("rho not in (0,1]");
    return violations;
}

// Loads an n x n mixing matrix from CSV (n rows of n comma-separated reals)
// and validates it with the file tolerance.
inline MixingMatrix load_mixing_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mixing matrix file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    const int n = static_cast<int>(rows.size());
    Eigen::MatrixXd w(n, n);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rows[i].size()) != n)
            throw std::runtime_error("mixing matrix file is not square: row " + std::to_string(i) +
                                     " has " + std::to_string(rows[i].size()) + " entries, expected " +
                                     std::to_string(n));
        for (int j = 0; j < n; ++j) w(i, j) = rows[i][j];
    }
    MixingMatrix mm = MixingMatrix::unchecked(std::move(w));
    auto violations = validate_mixing(mm, 1e-9);
    if (!violations.empty()) {
        std::string msg = "invalid mixing matrix in " + path + ":";
        for (const auto& v : violations) msg += " [" + v + "]";
        throw std::runtime_error(msg);
    }
    return mm;
}

}  // namespace fednoisy
