// Batch driver: runs one experiment config or a cartesian sweep and writes
// CSV + JSON-lines reports.

#include <string>

#include <CLI11.hpp>

#include "tentlab/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"tentlab: numerical experiments for weighted parabolic tent "
                 "norms and stochastic convolutions"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;
    int workers = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config_path, "experiment config file")
            ->required();
        cmd->add_option("--out-dir", out_dir, "override the output directory");
        cmd->add_option("--seed", seed, "override the noise seed");
        cmd->add_option("--workers", workers,
                        "worker threads (changes wall-clock only)");
    };

    auto* run = app.add_subcommand(
        "run", "run a single experiment (all parameter lists must have one "
               "entry)");
    add_common(run);
    auto* sweep = app.add_subcommand(
        "sweep", "run the cartesian sweep over the parameter lists");
    add_common(sweep);

    CLI11_PARSE(app, argc, argv);

    const bool sweep_mode = sweep->parsed();
    return tentlab::run_experiment_file(config_path, sweep_mode, out_dir, seed,
                                        workers);
}
