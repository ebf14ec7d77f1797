// Command-line frontend for the grid resilience investment planner.
//
// Exit codes: 0 success, 2 configuration error, 3 infeasible, 4 runtime
// failure.

#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gridres/commands.hpp"

namespace {

gridres::RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
    gridres::RunConfig cfg = gridres::load_run_config(path);
    if (seed) {
        cfg.master_seed = *seed;
        cfg.ga.master_seed = *seed;
        cfg.canonical["master_seed"] = *seed;
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grid resilience capital-investment planning under extreme-weather "
                 "uncertainty"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    int jobs = gridres::default_jobs();
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "Run configuration JSON")->required();
    app.add_option("--out", out_dir, "Output directory (created if missing)");
    app.add_option("--jobs", jobs, "Worker thread cap");
    app.add_option("--seed", seed, "Override the configured master seed");

    auto* sim = app.add_subcommand("simulate", "Monte Carlo KPI evaluation");
    std::string sim_portfolio;
    sim->add_option("--portfolio", sim_portfolio, "Portfolio JSON to apply before simulating");

    auto* optimize = app.add_subcommand("optimize", "Build an investment portfolio");
    std::string method;
    optimize->add_option("--method", method, "npv or nsga2")->required();

    auto* schedule = app.add_subcommand("schedule", "Crew schedule for a portfolio file");
    std::string sched_portfolio, sched_method = "ilp";
    schedule->add_option("--portfolio", sched_portfolio, "Portfolio JSON")->required();
    schedule->add_option("--method", sched_method, "ilp (default) or fifo");

    auto* compare = app.add_subcommand("compare", "Side-by-side evaluation of two portfolios");
    std::string portfolio_a, portfolio_b;
    compare->add_option("--a", portfolio_a, "First portfolio JSON")->required();
    compare->add_option("--b", portfolio_b, "Second portfolio JSON")->required();

    auto* candidates = app.add_subcommand("candidates", "Dump the candidate investment list");

    CLI11_PARSE(app, argc, argv);

    try {
        gridres::RunConfig cfg = load_config(config_path, seed);
        gridres::CommandOptions opt;
        opt.out_dir = out_dir;
        opt.jobs = jobs < 1 ? 1 : jobs;
        if (sim->parsed()) {
            std::optional<std::string> portfolio;
            if (!sim_portfolio.empty()) {
                portfolio = sim_portfolio;
            }
            return gridres::run_simulate(cfg, portfolio, opt);
        }
        if (optimize->parsed()) {
            return gridres::run_optimize(cfg, method, opt);
        }
        if (schedule->parsed()) {
            return gridres::run_schedule(cfg, sched_portfolio, sched_method, opt);
        }
        if (compare->parsed()) {
            return gridres::run_compare(cfg, portfolio_a, portfolio_b, opt);
        }
        if (candidates->parsed()) {
            return gridres::run_candidates(cfg, opt);
        }
    } catch (const gridres::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const gridres::InfeasibleError& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
    return 0;
}
