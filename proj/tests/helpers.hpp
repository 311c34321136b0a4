#pragma once

// Shared fixtures for the test suite: seeded random matrices, scratch
// directories, and small file helpers.

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fednoisy/rng.hpp"

namespace testutil {

inline Eigen::MatrixXd random_matrix(int rows, int cols, fednoisy::Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

inline Eigen::VectorXd random_vector(int d, fednoisy::Rng& rng) {
    Eigen::VectorXd v(d);
    for (int j = 0; j < d; ++j) v(j) = rng.normal();
    return v;
}

// Fresh empty scratch directory under the system temp root.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("fednoisy_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

}  // namespace testutil
