#pragma once

// Experiment configuration: a flat sectioned key = value file (TOML-like
// subset, chosen for diffability and provenance echoing). Parsing is strict:
// unknown sections or keys are errors, defaults are documented per field, and
// the fully resolved config is echoed into the output directory.

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fednoisy/datagen.hpp"
#include "fednoisy/engine.hpp"

namespace fednoisy {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    // [experiment]
    std::vector<std::string> algorithms;   // required
    std::vector<std::string> topologies;   // required
    std::vector<double> noise_vars;        // required; per-coordinate variances
    int clients = 16;                      // required
    int repeats = 3;                       // default 3
    std::uint64_t master_seed = 42;        // default 42

    // [data]
    int samples = 0;                       // required
    int dimension = 0;                     // required
    double label_noise_var = 0.05;         // default 0.05
    double reg = 1e-4;                     // default 1e-4
    int batch_size = 32;                   // default 32; "full" for full batch

    // [optim]
    double lr0 = 0.0;                      // required
    double decay = 0.9;                    // default 0.9
    int rounds = 0;                        // required
    std::string schedule = "geometric";    // default geometric

    LossConfig loss_config() const { return LossConfig{reg, batch_size}; }

    LrSchedule lr_schedule() const {
        return schedule == "constant" ? LrSchedule::constant(lr0)
                                      : LrSchedule::geometric(lr0, decay);
    }

    // Serialized form that parse_config_text reads back identically.
    std::string echo() const {
        std::ostringstream out;
        out.precision(17);
        auto join = [](const std::vector<std::string>& v) {
            std::string s;
            for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
            return s;
        };
        out << "[experiment]\n";
        out << "algorithms = " << join(algorithms) << "\n";
        out << "topologies = " << join(topologies) << "\n";
        out << "noise_vars = ";
        for (std::size_t i = 0; i < noise_vars.size(); ++i)
            out << (i ? "," : "") << noise_vars[i];
        out << "\n";
        out << "clients = " << clients << "\n";
        out << "repeats = " << repeats << "\n";
        out << "master_seed = " << master_seed << "\n";
        out << "\n[data]\n";
        out << "samples = " << samples << "\n";
        out << "dimension = " << dimension << "\n";
        out << "label_noise_var = " << label_noise_var << "\n";
        out << "reg = " << reg << "\n";
        out << "batch_size = " << (batch_size == LossConfig::kFullBatch ? "full" : std::to_string(batch_size))
            << "\n";
        out << "\n[optim]\n";
        out << "lr0 = " << lr0 << "\n";
        out << "decay = " << decay << "\n";
        out << "rounds = " << rounds << "\n";
        out << "schedule = " << schedule << "\n";
        return out.str();
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;

    auto fail = [&](const std::string& msg) {
        throw ConfigError("config line " + std::to_string(lineno) + ": " + msg);
    };
    auto to_int = [&](const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            long x = std::stol(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return static_cast<int>(x);
        } catch (...) {
            fail("field '" + key + "' expects an integer, got '" + v + "'");
        }
        return 0;
    };
    auto to_double = [&](const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return x;
        } catch (...) {
            fail("field '" + key + "' expects a number, got '" + v + "'");
        }
        return 0.0;
    };

    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail("malformed section header '" + line + "'");
            section = line.substr(1, line.size() - 2);
            if (section != "experiment" && section != "data" && section != "optim")
                fail("unknown section [" + section + "]");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected key = value, got '" + line + "'");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (section.empty()) fail("key '" + key + "' outside any section");
        std::string qualified = section + "." + key;
        if (!seen.insert(qualified).second) fail("duplicate key '" + qualified + "'");

        if (qualified == "experiment.algorithms") {
            cfg.algorithms = detail::split_list(value);
            for (const auto& a : cfg.algorithms) parse_algorithm(a);  // validate early
        } else if (qualified == "experiment.topologies") {
            cfg.topologies = detail::split_list(value);
        } else if (qualified == "experiment.noise_vars") {
            for (const auto& v : detail::split_list(value)) {
                double nu = to_double(key, v);
                if (nu < 0.0) fail("field 'noise_vars' entries must be >= 0");
                cfg.noise_vars.push_back(nu);
            }
        } else if (qualified == "experiment.clients") {
            cfg.clients = to_int(key, value);
        } else if (qualified == "experiment.repeats") {
            cfg.repeats = to_int(key, value);
        } else if (qualified == "experiment.master_seed") {
            cfg.master_seed = static_cast<std::uint64_t>(std::stoull(value));
        } else if (qualified == "data.samples") {
            cfg.samples = to_int(key, value);
        } else if (qualified == "data.dimension") {
            cfg.dimension = to_int(key, value);
        } else if (qualified == "data.label_noise_var") {
            cfg.label_noise_var = to_double(key, value);
        } else if (qualified == "data.reg") {
            cfg.reg = to_double(key, value);
        } else if (qualified == "data.batch_size") {
            cfg.batch_size = (value == "full") ? LossConfig::kFullBatch : to_int(key, value);
        } else if (qualified == "optim.lr0") {
            cfg.lr0 = to_double(key, value);
        } else if (qualified == "optim.decay") {
            cfg.decay = to_double(key, value);
        } else if (qualified == "optim.rounds") {
            cfg.rounds = to_int(key, value);
        } else if (qualified == "optim.schedule") {
            cfg.schedule = value;
        } else {
            fail("unknown key '" + qualified + "'");
        }
    }

    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError("config: " + what);
    };
    require(!cfg.algorithms.empty(), "field 'experiment.algorithms' is required and non-empty");
    require(!cfg.topologies.empty(), "field 'experiment.topologies' is required and non-empty");
    require(!cfg.noise_vars.empty(), "field 'experiment.noise_vars' is required and non-empty");
    require(cfg.clients >= 2, "field 'experiment.clients' must be >= 2");
    require(cfg.repeats >= 1, "field 'experiment.repeats' must be >= 1");
    require(cfg.samples >= 1, "field 'data.samples' is required and >= 1");
    require(cfg.dimension >= 1, "field 'data.dimension' is required and >= 1");
    require(cfg.label_noise_var >= 0.0, "field 'data.label_noise_var' must be >= 0");
    require(cfg.reg >= 0.0, "field 'data.reg' must be >= 0");
    require(cfg.batch_size == LossConfig::kFullBatch || cfg.batch_size >= 1,
            "field 'data.batch_size' must be >= 1 or 'full'");
    require(cfg.lr0 > 0.0, "field 'optim.lr0' must be > 0");
    require(cfg.decay > 0.0 && cfg.decay <= 1.0, "field 'optim.decay' must be in (0,1]");
    require(cfg.rounds >= 0, "field 'optim.rounds' must be >= 0");
    require(cfg.schedule == "geometric" || cfg.schedule == "constant",
            "field 'optim.schedule' must be geometric or constant");
    require(cfg.samples >= cfg.clients, "need samples >= clients for the partition");
    if (cfg.batch_size != LossConfig::kFullBatch)
        require(cfg.batch_size <= cfg.samples / cfg.clients,
                "field 'data.batch_size' exceeds the smallest shard size");
    for (const auto& t : cfg.topologies) parse_topology(t, cfg.clients);  // validate early
    return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace fednoisy
