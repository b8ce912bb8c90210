#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "syncleft/harness.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string preset_name;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<double> dt_pbs;
    std::optional<int> threads;
    std::size_t max_window_states = 4'000'000;
};

void add_common_options(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "config file ([scenario]/[pde]/[cme]/[pbs])");
    cmd->add_option("--preset", args.preset_name, "scenario preset: S0, S1 or S2");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "PBS master seed override");
    cmd->add_option("--trials", args.trials, "PBS ensemble size override");
    cmd->add_option("--dt-pbs", args.dt_pbs, "PBS time step override, us");
    cmd->add_option("--threads", args.threads, "PBS worker threads (0 = hardware)");
    cmd->add_option("--max-window-states", args.max_window_states,
                    "abort when an adaptive window exceeds this state count");
}

syncleft::LoadedConfig resolve_config(const CommonArgs& args) {
    syncleft::LoadedConfig cfg;
    if (!args.preset_name.empty()) cfg = syncleft::preset(args.preset_name);
    if (!args.config_path.empty())
        syncleft::parse_config_file(args.config_path, cfg,
                                    /*warn_missing_geometry=*/args.preset_name.empty());
    if (args.seed) cfg.seed = *args.seed;
    if (args.trials) cfg.trials = *args.trials;
    if (args.dt_pbs) cfg.dt_pbs = *args.dt_pbs;
    if (args.threads) cfg.threads = *args.threads;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"syncleft: joint survival/occupancy statistics of a synaptic channel"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* cmd_mean = app.add_subcommand("mean-field", "solve the mean-field model");
    CLI::App* cmd_cme = app.add_subcommand("cme", "mean field + adaptive CME solve");
    CLI::App* cmd_pbs = app.add_subcommand("pbs", "particle-based ensemble only");
    CLI::App* cmd_compare =
        app.add_subcommand("compare", "all solvers + comparison report");
    CLI::App* cmd_all = app.add_subcommand("all", "compare plus plot data");
    for (CLI::App* cmd : {cmd_mean, cmd_cme, cmd_pbs, cmd_compare, cmd_all})
        add_common_options(cmd, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const syncleft::LoadedConfig cfg = resolve_config(args);
        const std::filesystem::path out = args.out_dir;

        if (cmd_mean->parsed()) {
            syncleft::run_mean_field_stage(cfg.scenario, out);
        } else if (cmd_cme->parsed()) {
            const auto mf = syncleft::run_mean_field_stage(cfg.scenario, out);
            syncleft::run_cme_stage(cfg.scenario, mf, out, args.max_window_states);
        } else if (cmd_pbs->parsed()) {
            syncleft::run_pbs_stage(cfg, out);
        } else {
            syncleft::RunOptions options;
            options.out_dir = out;
            options.with_pbs = true;
            options.write_plot_data = cmd_all->parsed();
            options.max_window_states = args.max_window_states;
            syncleft::run_scenario(cfg, options);
        }
    } catch (const syncleft::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
