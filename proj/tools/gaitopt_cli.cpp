#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <gaitopt/plot_data.hpp>
#include <gaitopt/scenario.hpp>
#include <gaitopt/self_check.hpp>

namespace {

int cmd_run(const std::string& file, gaitopt::RunOptions opts)
{
    auto scenario = gaitopt::load_scenario(file);
    if (!opts.threads)
        opts.threads = gaitopt::threads_from_env();
    scenario = gaitopt::apply_overrides(std::move(scenario), opts);

    const auto summary = gaitopt::run_scenario(scenario, opts);
    size_t ok = 0;
    for (const auto& r : summary.runs)
        ok += r.success ? 1 : 0;
    std::printf("%s: %zu/%zu runs feasible (success rate %.3f), wall time median %.2f s [IQR %.2f, %.2f]\n", scenario.name.c_str(), ok, summary.runs.size(),
        summary.success_rate, summary.wall_time_median, summary.wall_time_q1, summary.wall_time_q3);
    if (!opts.out_dir.empty())
        std::printf("results written to %s\n", opts.out_dir.c_str());
    return 0;
}

int cmd_plot(const std::string& dir, const std::string& out)
{
    const auto files = gaitopt::emit_plot_data(dir, out);
    for (const auto& f : files.curves)
        std::printf("%s\n", f.c_str());
    std::printf("%s\n", files.wall_time.c_str());
    return 0;
}

int cmd_check(std::uint64_t seed)
{
    bool all = true;
    for (const auto& c : gaitopt::run_self_check(seed)) {
        all = all && c.passed;
        std::printf("%-4s %-44s value=%-12.4g threshold=%-10.3g %s\n", c.passed ? "ok" : "FAIL", c.name.c_str(), c.value, c.threshold, c.detail.c_str());
    }
    std::printf("%s\n", all ? "all checks passed" : "some checks FAILED");
    return all ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Gait sequence discovery: CEM-MD over phase schedules with SRBD trajectory optimization"};
    app.require_subcommand(1);

    gaitopt::RunOptions opts;
    opts.out_dir = "results";
    std::string scenario_file, results_dir, plot_out;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    std::optional<double> max_wall;
    std::optional<std::string> objective;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "Run a scenario file");
    run->add_option("scenario", scenario_file, "Scenario JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "Replace the scenario's seed list with a single seed");
    run->add_option("--threads", threads, "Evaluation workers (default: GAITOPT_THREADS, then the scenario)")->check(CLI::PositiveNumber);
    run->add_option("--out-dir", opts.out_dir, "Output directory")->capture_default_str();
    run->add_option("--max-wall-time", max_wall, "Wall-time budget per trajectory solve [s]")->check(CLI::PositiveNumber);
    run->add_option("--objective", objective, "Upper-level objective")->check(CLI::IsMember({"feasibility", "min_steps", "min_force"}));
    run->add_flag("--no-heuristic", opts.no_heuristic, "Disable band-restricted stance-count sampling");
    run->add_flag("--quiet", quiet, "No per-run progress");

    auto* plot = app.add_subcommand("plot", "Emit plot tables from a results directory");
    plot->add_option("results", results_dir, "Results directory")->required();
    plot->add_option("--out-dir", plot_out, "Output directory (default: <results>/plots)");

    auto* check = app.add_subcommand("check", "Jacobian and invariant self-tests");
    std::uint64_t check_seed = 0;
    check->add_option("--seed", check_seed, "Random seed")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            opts.threads = threads;
            opts.seed = seed;
            opts.max_wall_time = max_wall;
            if (objective)
                opts.objective = gaitopt::parse_objective(*objective);
            opts.quiet = quiet;
            return cmd_run(scenario_file, opts);
        }
        if (*plot)
            return cmd_plot(results_dir, plot_out);
        if (*check)
            return cmd_check(check_seed);
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
