#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <gddpc/gddpc.hpp>

using namespace gddpc;

int main(int argc, char** argv) {
    CLI::App app{"data-driven predictive control benchmark in LQ coordinates"};
    app.require_subcommand(1);

    std::string config_path;
    std::string mode_str;
    std::string out_dir;
    uint64_t seed = 0;
    int workers = 1;
    bool dump_lq = false;

    app.add_option("--config", config_path, "experiment config file");
    app.add_option("--mode", mode_str,
                   "montecarlo: unreg | beta2-fixed | beta3-fixed | beta2-online | beta3-online | "
                   "kalman-oracle; sweep: beta2 | beta3");
    CLI::Option* seed_opt = app.add_option("--seed", seed, "master seed override");
    app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "output directory override");
    app.add_flag("--dump-lq", dump_lq, "also dump replica 0's L blocks to CSV");

    CLI::App* g = app.add_subcommand("generate", "write the base series and the noisy replicas");
    CLI::App* mc = app.add_subcommand("montecarlo", "closed-loop episodes over all replicas");
    CLI::App* sw = app.add_subcommand("sweep", "average closed-loop cost over a beta grid");
    CLI::App* pl = app.add_subcommand("plot", "render boxplots and sweep curves from result files");
    CLI::App* vf = app.add_subcommand("verify", "statistical checks of the predictor theory");
    // flags read naturally after the verb too
    for (CLI::App* s : {g, mc, sw, pl, vf}) s->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        auto load = [&]() {
            if (config_path.empty()) throw ConfigError("--config is required for this verb");
            ExperimentConfig c = load_experiment(config_path);
            if (seed_opt->count() > 0) c.seed = seed;
            if (!out_dir.empty()) c.out_dir = out_dir;
            return c;
        };

        if (g->parsed()) {
            const ExperimentConfig c = load();
            return bench::cmd_generate(c, c.out_dir);
        }
        if (mc->parsed()) {
            const ExperimentConfig c = load();
            if (mode_str.empty()) throw ConfigError("--mode is required for montecarlo");
            return bench::cmd_montecarlo(c, control_mode_from_string(mode_str), c.out_dir,
                                         workers, dump_lq);
        }
        if (sw->parsed()) {
            const ExperimentConfig c = load();
            TuneMode which;
            if (mode_str == "beta2") which = TuneMode::Beta2;
            else if (mode_str == "beta3") which = TuneMode::Beta3;
            else throw ConfigError("--mode must be beta2 or beta3 for sweep");
            return bench::cmd_sweep(c, which, c.out_dir, workers, dump_lq);
        }
        if (pl->parsed()) {
            std::string dir = out_dir;
            if (dir.empty() && !config_path.empty()) dir = load().out_dir;
            if (dir.empty()) dir = "results";
            return bench::cmd_plot(dir, dir);
        }
        if (vf->parsed()) {
            return bench::cmd_verify(load(), workers);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
