#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "gridres/ilp.hpp"
#include "gridres/parallel.hpp"
#include "gridres/reports.hpp"
#include "gridres/run_config.hpp"

namespace gridres {

struct CommandOptions {
    std::string out_dir = ".";
    int jobs = 1;
};

namespace detail {

struct Inputs {
    Network network;
    Catalog catalog;
    TimeSeries timeseries;
    CandidateSet candidates;
};

inline Inputs load_inputs(const RunConfig& cfg) {
    Inputs in;
    in.catalog = load_catalog(cfg.catalog_path);
    in.network = network_from_json(read_json_file(cfg.network_path), in.catalog,
                                   cfg.network_path);
    in.timeseries = load_timeseries(cfg.timeseries_path, in.network);
    in.candidates = enumerate_candidates(in.network, in.catalog, cfg.candidate_filter,
                                         cfg.budget, cfg.horizon_days, cfg.technician_pool);
    return in;
}

inline std::string out_path(const CommandOptions& opt, const std::string& file) {
    return (std::filesystem::path(opt.out_dir) / file).string();
}

/// Runs the Monte Carlo scenario set on an (optionally invested) network and
/// reduces each scenario to its KPI report. Scenario i always uses seed
/// seeds[i], so two portfolios evaluated with the same seed vector see
/// identical weather (common random numbers).
inline std::vector<KpiReport> evaluate_scenarios(const Network& net, const TimeSeries& ts,
                                                 const RunConfig& cfg,
                                                 const std::vector<std::uint64_t>& seeds,
                                                 double portfolio_cost, int jobs) {
    std::vector<KpiReport> reports(seeds.size());
    SimSpan span = cfg.span();
    parallel_for(seeds.size(), jobs, [&](size_t i) {
        SimulationResult res = run_scenario(net, ts, cfg.weather, seeds[i], span);
        reports[i] = compute_kpis(res, net, cfg.econ, portfolio_cost);
    });
    return reports;
}

inline std::vector<std::uint64_t> scenario_seeds(const RunConfig& cfg, const char* stream,
                                                 int count) {
    std::vector<std::uint64_t> seeds(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        seeds[static_cast<size_t>(i)] = derive_seed(cfg.master_seed, fnv1a64(stream), i);
    }
    return seeds;
}

inline void warn_invalid_scenarios(const std::vector<KpiReport>& reports) {
    size_t invalid = 0;
    for (const auto& r : reports) {
        if (!r.scenario_valid) {
            ++invalid;
        }
    }
    if (invalid > 0) {
        std::fprintf(stderr,
                     "warning: %zu of %zu scenarios exceeded the convergence-failure budget\n",
                     invalid, reports.size());
    }
}

inline int fifo_days_estimate(const CandidateSet& candidates, const std::vector<int>& order,
                              int pool) {
    if (order.empty()) {
        return 0;
    }
    return fifo_schedule(investments_of(candidates, order), pool).makespan_days;
}

} // namespace detail

/// `simulate`: Monte Carlo evaluation of the base grid or a portfolio file.
/// Writes kpis.json, kpis.csv, kpis_by_subnet.csv and manifest.json.
inline int run_simulate(const RunConfig& cfg, const std::optional<std::string>& portfolio_path,
                        const CommandOptions& opt) {
    detail::Inputs in = detail::load_inputs(cfg);

    Network net = in.network;
    double portfolio_cost = 0.0;
    int n_investments = 0;
    int days = 0;
    json args = json::object();
    if (portfolio_path) {
        PortfolioFile pf = read_portfolio(*portfolio_path, in.candidates);
        net = apply_investments(in.network, investments_of(in.candidates, pf.order));
        portfolio_cost = pf.portfolio.total_cost;
        n_investments = static_cast<int>(pf.order.size());
        days = pf.days_to_complete
                   ? *pf.days_to_complete
                   : detail::fifo_days_estimate(in.candidates, pf.order, cfg.technician_pool);
        args["portfolio"] = *portfolio_path;
    }

    auto seeds = detail::scenario_seeds(cfg, "simulate", cfg.scenarios);
    auto reports = detail::evaluate_scenarios(net, in.timeseries, cfg, seeds, portfolio_cost,
                                              opt.jobs);
    detail::warn_invalid_scenarios(reports);

    auto varying = aggregate(reports);
    auto by_subnet = deaverage_by_subnet(reports);
    FixedKpis fixed = fixed_kpis_from_reports(reports, portfolio_cost, n_investments, days);

    write_text_file(detail::out_path(opt, "kpis.csv"), kpis_csv(varying, fixed));
    write_json_file(detail::out_path(opt, "kpis.json"), kpis_json(varying, fixed, by_subnet));
    write_text_file(detail::out_path(opt, "kpis_by_subnet.csv"), subnet_csv(by_subnet));
    write_json_file(detail::out_path(opt, "manifest.json"),
                    make_manifest("simulate", cfg.canonical, cfg.master_seed, args));
    return 0;
}

/// `optimize --method npv`: model-free NPV ranking, greedy selection under
/// the budget and FIFO scheduling.
inline int run_optimize_npv(const RunConfig& cfg, const CommandOptions& opt) {
    detail::Inputs in = detail::load_inputs(cfg);
    NpvAssessor assessor(in.network, in.timeseries, cfg.econ, cfg.npv_outage, cfg.span());

    std::vector<NpvAssessment> assessments(in.candidates.investments.size());
    parallel_for(in.candidates.investments.size(), opt.jobs, [&](size_t i) {
        assessments[i] = assessor.assess(in.candidates.investments[i]);
    });

    RankResult ranked = rank_and_select(std::move(assessments), in.candidates, cfg.budget);
    CrewSchedule sched =
        fifo_schedule(investments_of(in.candidates, ranked.ranked_ids), cfg.technician_pool);

    write_text_file(detail::out_path(opt, "assessments.csv"),
                    assessments_csv(ranked.assessments, in.candidates));
    write_json_file(detail::out_path(opt, "portfolio.json"),
                    portfolio_to_json(ranked.portfolio, in.candidates, "npv", ranked.ranked_ids,
                                      sched.makespan_days));
    write_text_file(detail::out_path(opt, "schedule.csv"), schedule_csv(sched, in.candidates));
    write_json_file(detail::out_path(opt, "manifest.json"),
                    make_manifest("optimize", cfg.canonical, cfg.master_seed,
                                  json{{"method", "npv"}}));
    return 0;
}

/// `optimize --method nsga2`: grid-aware NSGA-II portfolio search with
/// twin-backed Monte Carlo evaluation, compromise selection and exact ILP
/// scheduling weighted by leave-one-out marginal benefits.
inline int run_optimize_nsga2(const RunConfig& cfg, const CommandOptions& opt) {
    detail::Inputs in = detail::load_inputs(cfg);
    TwinEvaluator evaluator(in.network, in.timeseries, in.candidates, cfg.weather, cfg.span(),
                            cfg.ga.mc_runs, cfg.master_seed, 1);
    GaResult ga = run_nsga2(cfg.ga, in.candidates.investments.size(),
                            [&](const Genome& g) { return evaluator.evaluate(g); }, opt.jobs);

    write_json_file(detail::out_path(opt, "pareto.json"), pareto_json(ga));
    write_text_file(detail::out_path(opt, "generations.csv"), generations_csv(ga));
    json manifest = make_manifest("optimize", cfg.canonical, cfg.master_seed,
                                  json{{"method", "nsga2"}});

    if (ga.archive.empty()) {
        Portfolio empty;
        write_json_file(detail::out_path(opt, "portfolio.json"),
                        portfolio_to_json(empty, in.candidates, "nsga2", {}, 0));
        write_text_file(detail::out_path(opt, "schedule.csv"),
                        schedule_csv(CrewSchedule{}, in.candidates));
        write_json_file(detail::out_path(opt, "manifest.json"), manifest);
        std::fprintf(stderr, "no feasible portfolio found; wrote an empty portfolio\n");
        return 3;
    }

    const GaEntry& choice = select_compromise(ga.archive);
    Portfolio portfolio = portfolio_from_genome(choice.genome, in.candidates, choice.eval);

    std::vector<double> weights =
        marginal_benefits(portfolio, in.candidates, in.network, in.timeseries, cfg.weather,
                          cfg.span(), cfg.econ, cfg.ga.mc_runs, cfg.master_seed, opt.jobs);
    CrewSchedule sched;
    int days = 0;
    try {
        IlpSchedule ilp = solve_schedule(make_schedule_model(portfolio, in.candidates, weights));
        sched = ilp.schedule;
        days = sched.makespan_days;
    } catch (const Error& e) {
        std::fprintf(stderr, "exact scheduler unavailable (%s); falling back to FIFO\n",
                     e.what());
        sched = fifo_schedule(investments_of(in.candidates, portfolio.investment_ids),
                              cfg.technician_pool);
        days = sched.makespan_days;
    }

    write_json_file(detail::out_path(opt, "portfolio.json"),
                    portfolio_to_json(portfolio, in.candidates, "nsga2",
                                      portfolio.investment_ids, days));
    write_text_file(detail::out_path(opt, "schedule.csv"), schedule_csv(sched, in.candidates));
    write_json_file(detail::out_path(opt, "manifest.json"), manifest);
    return 0;
}

inline int run_optimize(const RunConfig& cfg, const std::string& method,
                        const CommandOptions& opt) {
    if (method == "npv") {
        return run_optimize_npv(cfg, opt);
    }
    if (method == "nsga2") {
        return run_optimize_nsga2(cfg, opt);
    }
    throw ConfigError("optimize: method must be 'npv' or 'nsga2'");
}

/// `schedule`: crew plan for an existing portfolio file. The exact method
/// weights projects by their Monte Carlo marginal benefits; fifo keeps the
/// file order.
inline int run_schedule(const RunConfig& cfg, const std::string& portfolio_path,
                        const std::string& method, const CommandOptions& opt) {
    detail::Inputs in = detail::load_inputs(cfg);
    PortfolioFile pf = read_portfolio(portfolio_path, in.candidates);

    CrewSchedule sched;
    if (method == "fifo") {
        sched = fifo_schedule(investments_of(in.candidates, pf.order), cfg.technician_pool);
    } else if (method == "ilp") {
        std::vector<double> weights =
            marginal_benefits(pf.portfolio, in.candidates, in.network, in.timeseries,
                              cfg.weather, cfg.span(), cfg.econ, cfg.ga.mc_runs,
                              cfg.master_seed, opt.jobs);
        IlpSchedule ilp = solve_schedule(make_schedule_model(pf.portfolio, in.candidates,
                                                             weights));
        sched = ilp.schedule;
    } else {
        throw ConfigError("schedule: method must be 'fifo' or 'ilp'");
    }

    write_text_file(detail::out_path(opt, "schedule.csv"), schedule_csv(sched, in.candidates));
    write_json_file(detail::out_path(opt, "manifest.json"),
                    make_manifest("schedule", cfg.canonical, cfg.master_seed,
                                  json{{"portfolio", portfolio_path}, {"method", method}}));
    return 0;
}

/// `compare`: side-by-side Monte Carlo evaluation of two portfolio files
/// under identical scenario seeds, with a per-subnet breakdown.
inline int run_compare(const RunConfig& cfg, const std::string& path_a,
                       const std::string& path_b, const CommandOptions& opt) {
    detail::Inputs in = detail::load_inputs(cfg);
    PortfolioFile pa = read_portfolio(path_a, in.candidates);
    PortfolioFile pb = read_portfolio(path_b, in.candidates);

    auto seeds = detail::scenario_seeds(cfg, "compare", cfg.scenarios);
    auto evaluate = [&](const PortfolioFile& pf) {
        Network net = apply_investments(in.network, investments_of(in.candidates, pf.order));
        return detail::evaluate_scenarios(net, in.timeseries, cfg, seeds,
                                          pf.portfolio.total_cost, opt.jobs);
    };
    auto reports_a = evaluate(pa);
    auto reports_b = evaluate(pb);
    detail::warn_invalid_scenarios(reports_a);
    detail::warn_invalid_scenarios(reports_b);

    auto fixed = [&](const PortfolioFile& pf, const std::vector<KpiReport>& reports) {
        int days = pf.days_to_complete ? *pf.days_to_complete
                                       : detail::fifo_days_estimate(in.candidates, pf.order,
                                                                    cfg.technician_pool);
        return fixed_kpis_from_reports(reports, pf.portfolio.total_cost,
                                       static_cast<int>(pf.order.size()), days);
    };

    write_text_file(detail::out_path(opt, "comparison.csv"),
                    comparison_csv(aggregate(reports_a), fixed(pa, reports_a),
                                   aggregate(reports_b), fixed(pb, reports_b), "a", "b"));
    write_text_file(detail::out_path(opt, "comparison_by_subnet.csv"),
                    comparison_subnet_csv(deaverage_by_subnet(reports_a),
                                          deaverage_by_subnet(reports_b), "a", "b"));
    write_json_file(detail::out_path(opt, "manifest.json"),
                    make_manifest("compare", cfg.canonical, cfg.master_seed,
                                  json{{"portfolio_a", path_a}, {"portfolio_b", path_b}}));
    return 0;
}

/// `candidates`: dump the enumerated candidate set for inspection.
inline int run_candidates(const RunConfig& cfg, const CommandOptions& opt) {
    detail::Inputs in = detail::load_inputs(cfg);
    write_text_file(detail::out_path(opt, "candidates.csv"), candidates_csv(in.candidates));
    write_json_file(detail::out_path(opt, "manifest.json"),
                    make_manifest("candidates", cfg.canonical, cfg.master_seed,
                                  json::object()));
    return 0;
}

} // namespace gridres
