// Experiment runner: analytic evaluation, Monte Carlo simulation, and
// theory-vs-simulation validation for the random-rotation IRS schemes.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "irslab/config.hpp"
#include "irslab/runner.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trials;
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out_dir, "output directory (overrides config)");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&o](std::uint64_t v) { o.seed = v; }, "RNG seed (overrides config)");
    cmd->add_option_function<std::uint64_t>(
        "--trials", [&o](std::uint64_t v) { o.trials = v; }, "Monte Carlo trials (overrides config)");
    cmd->add_option_function<int>(
        "--threads", [&o](int v) { o.threads = v; },
        "worker threads, 0 = all cores (never changes results)");
}

int run_mode(const CommonOpts& o, irslab::config::Mode mode) {
    irslab::config::json j;
    try {
        std::ifstream is(o.config_path);
        is >> j;
    } catch (const std::exception& e) {
        std::cerr << "error: cannot parse " << o.config_path << ": " << e.what() << "\n";
        return 2;
    }
    irslab::config::ExperimentConfig cfg;
    try {
        cfg = irslab::config::config_from_json(j);
    } catch (const std::exception& e) {
        std::cerr << "error: " << o.config_path << ": " << e.what() << "\n";
        return 2;
    }
    cfg.mode = mode;  // the subcommand decides the mode
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    if (o.seed) cfg.seed = *o.seed;
    if (o.trials) cfg.trials = *o.trials;
    if (o.threads) cfg.threads = *o.threads;
    return irslab::runner::run(cfg);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"irslab: IRS random-rotation link performance toolkit"};
    app.require_subcommand(1);

    CommonOpts oa, os, ov, ow;
    CLI::App* analytic = app.add_subcommand("analytic", "evaluate analytic expressions on a grid");
    add_common(analytic, oa);
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo estimates on a grid");
    add_common(simulate, os);
    CLI::App* validate =
        app.add_subcommand("validate", "simulate and score against the analytic values");
    add_common(validate, ov);
    CLI::App* sweep = app.add_subcommand("sweep", "analytic + simulated sweep without scoring");
    add_common(sweep, ow);

    std::string recipe_name, recipe_out = ".";
    CLI::App* recipe = app.add_subcommand("recipe", "emit a ready-made figure sweep config");
    recipe->add_option("name", recipe_name, "fig3 | fig5 | fig6 | fig7-like")->required();
    recipe->add_option("--out", recipe_out, "directory for <name>.json");

    CLI11_PARSE(app, argc, argv);

    try {
        if (analytic->parsed()) return run_mode(oa, irslab::config::Mode::Analytic);
        if (simulate->parsed()) return run_mode(os, irslab::config::Mode::Simulate);
        if (validate->parsed()) return run_mode(ov, irslab::config::Mode::Validate);
        if (sweep->parsed()) return run_mode(ow, irslab::config::Mode::Sweep);
        if (recipe->parsed()) {
            const auto cfg = irslab::runner::figure_recipe(recipe_name);
            std::filesystem::create_directories(recipe_out);
            const auto path = std::filesystem::path(recipe_out) / (recipe_name + ".json");
            std::ofstream osf(path, std::ios::binary);
            if (!osf) throw std::runtime_error("cannot write " + path.string());
            osf << irslab::config::config_to_json(cfg).dump(2) << "\n";
            std::cout << path.string() << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
