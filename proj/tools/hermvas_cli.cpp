// Command-line front end: simulate, estimate, constants and the Monte Carlo experiments.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hermvas/hermvas.hpp"

namespace {

using namespace hermvas;

constexpr int exit_usage = 1;
constexpr int exit_failure = 2;

struct ExperimentArgs {
    std::string config_file;
    std::string manifest_file;
    std::string out_dir;
    std::size_t workers = 0;
    // flag overrides, applied in this order after the config file
    std::map<std::string, std::string> overrides;
};

void add_override(CLI::App* cmd, ExperimentArgs& args, const std::string& flag, const std::string& key,
                  const std::string& help)
{
    cmd->add_option_function<std::string>(
        flag, [&args, key](const std::string& v) { args.overrides[key] = v; }, help);
}

CLI::App* add_experiment(CLI::App& app, const std::string& name, const std::string& help, ExperimentArgs& args)
{
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--config", args.config_file, "flat key = value config file");
    cmd->add_option("--manifest", args.manifest_file, "rerun the configuration stored in a manifest.json");
    cmd->add_option("--out", args.out_dir, "output directory (default $HERMVAS_OUTPUT_DIR/<experiment>-<seed>)");
    cmd->add_option("--workers", args.workers, "worker threads (0 = hardware concurrency)");
    add_override(cmd, args, "--q", "q", "Hermite order");
    add_override(cmd, args, "--H", "H", "Hurst index");
    add_override(cmd, args, "--a", "a", "mean-reversion rate");
    add_override(cmd, args, "--b", "b", "long-run mean");
    add_override(cmd, args, "--horizons", "horizons", "comma-separated horizons T");
    add_override(cmd, args, "--dt", "dt", "observation step");
    add_override(cmd, args, "--replications", "replications", "replications per horizon");
    add_override(cmd, args, "--seed", "master_seed", "master seed");
    add_override(cmd, args, "--refinement", "refinement", "internal fGn points per step (q >= 2)");
    add_override(cmd, args, "--noise-scale", "noise_scale", "driver multiplier");
    add_override(cmd, args, "--require-ks", "require_ks", "fail when the a-limit has no CDF target");
    return cmd;
}

MCConfig resolve_config(const ExperimentArgs& args, Experiment experiment)
{
    MCConfig cfg;
    if (experiment == Experiment::distribution) {
        cfg.replications = 500;
        cfg.horizons = {1600.0};
    }
    if (experiment == Experiment::gt_converge) {
        cfg.spec = HermiteSpec(2, 0.7);
        cfg.horizons = {5.0, 10.0, 20.0, 40.0};
        cfg.replications = 1000;
    }
    if (!args.manifest_file.empty()) cfg = io::read_manifest(args.manifest_file).config;
    if (!args.config_file.empty()) cfg = io::parse_config_text(io::read_file(args.config_file), cfg, args.config_file);
    for (const auto& key : {"q", "H", "a", "b", "horizons", "dt", "replications", "master_seed", "refinement",
                            "noise_scale", "require_ks"}) {
        if (auto it = args.overrides.find(key); it != args.overrides.end()) {
            io::apply_setting(cfg, key, it->second, std::string("--") + key);
        }
    }
    cfg.experiment = experiment;
    cfg.validate();
    return cfg;
}

int run_experiment_command(const ExperimentArgs& args, Experiment experiment)
{
    const MCConfig cfg = resolve_config(args, experiment);
    io::RunManifest manifest;
    manifest.config = cfg;
    manifest.started = io::utc_timestamp();
    const auto result = run_experiment(cfg, {args.workers});
    manifest.finished = io::utc_timestamp();
    manifest.warnings = result.warnings;

    const std::filesystem::path dir =
        args.out_dir.empty()
            ? io::default_output_dir() / (std::string(to_string(experiment)) + "-" + std::to_string(cfg.master_seed))
            : std::filesystem::path(args.out_dir);
    io::write_experiment(dir, result, manifest);

    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    if (experiment == Experiment::gt_converge) {
        std::cout << io::gt_summary_to_csv(result.gt_rows);
    } else {
        std::cout << io::summary_to_csv(result.rows);
        if (result.rate_fit) std::cout << io::rate_fit_to_json(*result.rate_fit).dump(2) << '\n';
    }
    std::cerr << "wrote " << dir.string() << " in " << result.wall_seconds << " s\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hermite-driven Vasicek model: simulation, estimation and Monte Carlo experiments"};
    app.require_subcommand(1);

    int q = 1;
    double H = 0.7;
    double a = 1.0;

    auto* simulate = app.add_subcommand("simulate", "simulate a Hermite process path to CSV");
    double T = 1.0;
    std::size_t n = 1000;
    std::uint64_t seed = 0;
    std::size_t refinement = 32;
    std::string out;
    simulate->add_option("--q", q, "Hermite order")->check(CLI::PositiveNumber);
    simulate->add_option("--H", H, "Hurst index");
    simulate->add_option("--T", T, "horizon");
    simulate->add_option("--n", n, "number of steps");
    simulate->add_option("--seed", seed, "seed");
    simulate->add_option("--refinement", refinement, "internal fGn points per step (q >= 2)");
    simulate->add_option("--out", out, "output CSV (default stdout)");

    auto* est = app.add_subcommand("estimate", "estimate (a, b) from an observed path CSV");
    std::string in;
    est->add_option("--in", in, "input CSV with header t,value")->required();
    est->add_option("--q", q, "Hermite order");
    est->add_option("--H", H, "Hurst index");

    auto* constants = app.add_subcommand("constants", "print model constants and the fluctuation law as JSON");
    constants->add_option("--q", q, "Hermite order");
    constants->add_option("--H", H, "Hurst index");
    constants->add_option("--a", a, "mean-reversion rate");

    ExperimentArgs consistency_args;
    ExperimentArgs rate_args;
    ExperimentArgs dist_args;
    ExperimentArgs gt_args;
    auto* consistency = add_experiment(app, "mc-consistency", "mean absolute errors across horizons", consistency_args);
    auto* rate = add_experiment(app, "mc-rate", "log-log rate regression", rate_args);
    auto* dist = add_experiment(app, "mc-dist", "limit-law check of standardized errors", dist_args);
    auto* gt = add_experiment(app, "gt-converge", "variance stabilization of G_T", gt_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_usage;
    }

    try {
        if (*simulate) {
            const auto path = simulate_hermite(HermiteSpec(q, H), GridSpec(T, n), seed, {refinement});
            for (const auto& w : path.warnings) std::cerr << "warning: " << w << '\n';
            if (out.empty()) {
                std::cout << io::path_to_csv(path);
            } else {
                io::write_path_csv(path, out);
            }
            return 0;
        }
        if (*est) {
            const auto result = estimate(io::read_path_csv(in), HermiteSpec(q, H));
            std::cout << io::estimate_to_json(result).dump(2) << '\n';
            return result.degenerate() ? exit_failure : 0;
        }
        if (*constants) {
            std::cout << io::constants_to_json(HermiteSpec(q, H), a).dump(2) << '\n';
            return 0;
        }
        if (*consistency) return run_experiment_command(consistency_args, Experiment::consistency);
        if (*rate) return run_experiment_command(rate_args, Experiment::rate);
        if (*dist) return run_experiment_command(dist_args, Experiment::distribution);
        if (*gt) return run_experiment_command(gt_args, Experiment::gt_converge);
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_failure;
    }
    return exit_usage;
}
