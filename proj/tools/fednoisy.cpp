// fednoisy: run the noisy decentralized FL experiment grid, plot the results,
// and evaluate the theoretical convergence bounds.
//
// Exit codes: 0 success, 1 configuration error, 2 I/O error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fednoisy/config.hpp"
#include "fednoisy/runner.hpp"

namespace {

std::string resolve_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("FEDNOISY_OUT")) return env;
    return "out";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noisy decentralized federated learning simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir_flag, run_dir;

    auto* run = app.add_subcommand("run", "Run the experiment grid from a config file");
    run->add_option("config", config_path, "Config file")->required();
    run->add_option("-o,--out", out_dir_flag, "Output directory (default: $FEDNOISY_OUT or ./out)");

    auto* plot = app.add_subcommand("plot", "Render SVG charts for a completed run directory");
    plot->add_option("dir", run_dir, "Run directory (as produced by 'run')")->required();

    auto* bounds = app.add_subcommand("bounds", "Evaluate theorem bounds for a completed run");
    bounds->add_option("dir", run_dir, "Run directory (as produced by 'run')")->required();

    auto* validate = app.add_subcommand("validate", "Parse and validate a config file");
    validate->add_option("config", config_path, "Config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            auto cfg = fednoisy::parse_config(config_path);
            std::string out_dir = resolve_out_dir(out_dir_flag);
            auto result = fednoisy::run_grid(cfg, out_dir);
            std::cout << "wrote " << result.csv_paths.size() << " grid cells to " << out_dir
                      << "/runs\n";
            for (const auto& p : result.csv_paths) std::cout << "  " << p << "\n";
        } else if (plot->parsed()) {
            auto outputs = fednoisy::render_plots(run_dir);
            std::cout << "wrote " << outputs.size() << " charts\n";
            for (const auto& p : outputs) std::cout << "  " << p << "\n";
        } else if (bounds->parsed()) {
            std::cout << fednoisy::report_bounds(run_dir);
        } else if (validate->parsed()) {
            auto cfg = fednoisy::parse_config(config_path);
            std::cout << "config ok\n" << cfg.echo();
        }
    } catch (const fednoisy::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
