#pragma once

// CSV serialization of metrics logs. The per-record schema is frozen; golden
// tests pin the exact header string.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fednoisy/metrics.hpp"

namespace fednoisy {

inline constexpr const char* kCsvHeader =
    "algorithm,topology,noise_var_per_coord,repeat,iteration,eta,loss,consensus_error,"
    "grad_norm_sq,diverged";

inline constexpr const char* kMeanCsvHeader =
    "algorithm,topology,noise_var_per_coord,iteration,eta,loss,consensus_error,"
    "grad_norm_sq,survivors";

// Short stable rendering for noise levels in filenames and CSV cells.
inline std::string format_noise(double nu) {
    std::ostringstream out;
    out << nu;
    return out.str();
}

inline void write_records_csv(const std::string& path, const std::vector<MetricsRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.precision(17);
    out << kCsvHeader << "\n";
    for (const auto& r : records) {
        out << r.algorithm << "," << r.topology << "," << format_noise(r.noise_var_per_coord) << ","
            << r.repeat << "," << r.t << "," << r.eta << "," << r.loss << "," << r.consensus_error
            << "," << r.grad_norm_sq << "," << (r.diverged ? 1 : 0) << "\n";
    }
}

inline void write_aggregates_csv(const std::string& path, const std::vector<AggregateRecord>& aggs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.precision(17);
    out << kMeanCsvHeader << "\n";
    for (const auto& a : aggs) {
        out << a.algorithm << "," << a.topology << "," << format_noise(a.noise_var_per_coord) << ","
            << a.t << "," << a.eta << "," << a.loss << "," << a.consensus_error << ","
            << a.grad_norm_sq << "," << a.survivors << "\n";
    }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
}

}  // namespace detail

inline std::vector<MetricsRecord> read_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
    if (line != kCsvHeader) throw std::runtime_error("csv schema mismatch in " + path);
    std::vector<MetricsRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != 10) throw std::runtime_error("bad csv row in " + path + ": " + line);
        MetricsRecord r;
        r.algorithm = cells[0];
        r.topology = cells[1];
        r.noise_var_per_coord = std::stod(cells[2]);
        r.repeat = std::stoi(cells[3]);
        r.t = std::stoi(cells[4]);
        r.eta = std::stod(cells[5]);
        r.loss = std::stod(cells[6]);
        r.consensus_error = std::stod(cells[7]);
        r.grad_norm_sq = std::stod(cells[8]);
        r.diverged = cells[9] == "1";
        records.push_back(std::move(r));
    }
    return records;
}

inline std::vector<AggregateRecord> read_aggregates_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
    if (line != kMeanCsvHeader) throw std::runtime_error("csv schema mismatch in " + path);
    std::vector<AggregateRecord> aggs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != 9) throw std::runtime_error("bad csv row in " + path + ": " + line);
        AggregateRecord a;
        a.algorithm = cells[0];
        a.topology = cells[1];
        a.noise_var_per_coord = std::stod(cells[2]);
        a.t = std::stoi(cells[3]);
        a.eta = std::stod(cells[4]);
        a.loss = std::stod(cells[5]);
        a.consensus_error = std::stod(cells[6]);
        a.grad_norm_sq = std::stod(cells[7]);
        a.survivors = std::stoi(cells[8]);
        aggs.push_back(std::move(a));
    }
    return aggs;
}

}  // namespace fednoisy
