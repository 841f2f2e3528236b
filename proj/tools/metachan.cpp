#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "metachan/commands.hpp"
#include "metachan/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"metachan: metastability analysis of sequential quantum channels"};
    app.set_version_flag("--version", metachan::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    bool emit_trajectories = false;

    int threads = 0;
    if (const char* env = std::getenv("METACHAN_THREADS")) threads = std::atoi(env);

    const auto add_common = [&](CLI::App* sub, bool with_trajectories) {
        sub->add_option("--config", config_path, "experiment config file (JSON)")->required();
        sub->add_option("--seed", seed, "override run.seed");
        sub->add_option("--out", out_dir, "override the output directory");
        sub->add_option("--threads", threads, "worker thread count (0 = hardware)");
        if (with_trajectories)
            sub->add_flag("--emit-trajectories", emit_trajectories, "write trajectories.jsonl");
        return sub;
    };

    add_common(app.add_subcommand("spectrum", "eigenvalues, classes and metastable region"),
               false);
    add_common(app.add_subcommand("ems", "extreme metastable states and dual observables"),
               false);
    add_common(app.add_subcommand("simulate", "Monte Carlo measurement trajectories"), true);
    add_common(app.add_subcommand("validate", "CPTP/unitality/biorthonormality checks"), false);

    CLI11_PARSE(app, argc, argv);

    CLI::App* sub = app.get_subcommands().front();
    metachan::CommandOptions opt;
    opt.threads = threads;
    if (sub->count("--seed") > 0) opt.seed = seed;
    if (sub->count("--out") > 0) opt.out_dir = out_dir;
    if (emit_trajectories) opt.emit_trajectories = true;
    return metachan::run_command(sub->get_name(), config_path, opt);
}
