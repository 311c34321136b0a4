#pragma once

// Additive channel noise: each sender j broadcasts one zero-mean Gaussian
// vector delta_j per round, observed identically by all of its receivers.
// Variances are per coordinate; the total variance D^2_{t,i} of a vector is
// d * nu.

#include <Eigen/Dense>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fednoisy/rng.hpp"

namespace fednoisy {

struct NoiseSchedule {
    enum class Kind { Zero, ConstantPerCoord, PerRoundTable };

    Kind kind = Kind::Zero;
    int d = 0;
    double nu = 0.0;                            // ConstantPerCoord
    std::vector<std::vector<double>> table;     // PerRoundTable: [t][i] per-coordinate variance

    static NoiseSchedule zero(int d) { return {Kind::Zero, d, 0.0, {}}; }

    static NoiseSchedule constant(double nu, int d) {
        if (nu < 0.0) throw std::invalid_argument("noise variance must be >= 0");
        if (nu == 0.0) return zero(d);
        return {Kind::ConstantPerCoord, d, nu, {}};
    }

    static NoiseSchedule per_round(std::vector<std::vector<double>> tab, int d) {
        for (const auto& row : tab)
            for (double v : row)
                if (v < 0.0) throw std::invalid_argument("noise table entries must be >= 0");
        return {Kind::PerRoundTable, d, 0.0, std::move(tab)};
    }

    // Per-coordinate variance nu_{t,i}. A table is clamped to its last row for
    // rounds beyond its length.
    double per_coord_variance(int t, int i) const {
        switch (kind) {
            case Kind::Zero: return 0.0;
            case Kind::ConstantPerCoord: return nu;
            case Kind::PerRoundTable: {
                if (table.empty()) return 0.0;
                const auto& row = table[std::min<std::size_t>(t, table.size() - 1)];
                if (i < 0 || i >= static_cast<int>(row.size()))
                    throw std::out_of_range("noise table has no column for client " + std::to_string(i));
                return row[i];
            }
        }
        return 0.0;
    }

    // Total vector variance D^2_{t,i} = E||delta||^2 = d * nu_{t,i}.
    double total_variance(int t, int i) const { return d * per_coord_variance(t, i); }
};

// One noise vector per (round, sender). The stream is derived from
// (seed, t, i) only, so the same triple always reproduces the same vector.
inline Eigen::VectorXd sample_noise(int t, int i, const NoiseSchedule& schedule,
                                    std::uint64_t noise_seed) {
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(schedule.d);
    double var = schedule.per_coord_variance(t, i);
    if (var == 0.0) return delta;
    Rng rng = derive_stream(noise_seed, 0, StreamPurpose::ChannelNoise,
                            static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(t));
    const double sd = std::sqrt(var);
    for (int j = 0; j < schedule.d; ++j) delta(j) = sd * rng.normal();
    return delta;
}

inline std::vector<std::vector<double>> load_noise_table_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open noise table: " + path);
    std::vector<std::vector<double>> table;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        table.push_back(std::move(row));
    }
    return table;
}

// "zero" | "const:<nu>" | "table:<path>"
inline NoiseSchedule make_schedule(const std::string& spec, int d) {
    if (spec == "zero") return NoiseSchedule::zero(d);
    if (spec.rfind("const:", 0) == 0) {
        double nu = std::stod(spec.substr(6));
        return NoiseSchedule::constant(nu, d);
    }
    if (spec.rfind("table:", 0) == 0)
        return NoiseSchedule::per_round(load_noise_table_csv(spec.substr(6)), d);
    throw std::invalid_argument("bad noise spec '" + spec + "' (expected zero, const:<nu>, table:<path>)");
}

}  // namespace fednoisy
