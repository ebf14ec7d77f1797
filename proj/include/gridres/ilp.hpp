#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "gridres/investments.hpp"
#include "gridres/metrics.hpp"
#include "gridres/nsga2.hpp"
#include "gridres/parallel.hpp"
#include "gridres/twin.hpp"

namespace gridres {

struct ProjectSpec {
    int investment_id = 0;
    int duration_days = 1;
    int technicians = 1;
};

/// Crew-scheduling model: minimize the weighted sum of completion days
/// subject to (1) every project receiving its full duration, (2, 4) the
/// per-day technician pool with fixed crew sizes, and (3) the completion day
/// being the last day of work. Technician identities are aggregated into
/// per-project activity indicators; since crews are interchangeable, any
/// feasible aggregate extends to a per-technician assignment (see
/// reconstruct_assignments). The planning horizon is the serial sum of
/// durations. Weights are the projects' marginal benefits in dollars.
struct ScheduleModel {
    std::vector<ProjectSpec> projects;
    int technician_pool = 0;
    std::vector<double> weights;

    int horizon_days() const {
        int h = 0;
        for (const auto& p : projects) {
            h += p.duration_days;
        }
        return h;
    }

    void validate() const {
        if (projects.size() != weights.size()) {
            throw Error("schedule model: one weight per project required");
        }
        for (const auto& p : projects) {
            if (p.duration_days < 1 || p.technicians < 1) {
                throw Error("schedule model: durations and crew sizes must be >= 1");
            }
            if (p.technicians > technician_pool) {
                throw InfeasibleError(
                    strf("project for investment %d needs %d technicians but the pool has %d",
                         p.investment_id, p.technicians, technician_pool));
            }
        }
        for (double w : weights) {
            if (w < 0.0) {
                throw Error("schedule model: weights must be >= 0");
            }
        }
    }
};

struct IlpOptions {
    bool contiguous = false;        // forbid preemption when true
    std::uint64_t node_cap = 50'000'000;
};

struct IlpSchedule {
    CrewSchedule schedule;
    double objective = 0.0; // sum of weight * completion day
    bool optimal = false;   // search closed the optimality gap
    std::uint64_t nodes = 0;
};

namespace detail {

struct BnbState {
    const ScheduleModel* model = nullptr;
    const IlpOptions* opt = nullptr;
    int n = 0;
    int pool = 0;
    std::vector<int> remaining;
    std::vector<std::vector<int>> active_days; // per project
    std::vector<int> completion;
    double best_obj = 0.0;
    std::vector<std::vector<int>> best_active;
    std::vector<int> best_completion;
    bool found = false;
    std::uint64_t nodes = 0;
    bool capped = false;
};

/// Lower bound from the current partial schedule: accumulated cost plus the
/// max of a per-project earliest-finish bound and the preemption-relaxed
/// weighted-completion bound (WSPT over technician-day content on the
/// aggregate pool capacity).
inline double bnb_lower_bound(const BnbState& st, int day, double acc) {
    double lb1 = acc;
    for (int i = 0; i < st.n; ++i) {
        if (st.remaining[i] > 0) {
            lb1 += st.model->weights[i] * (day + st.remaining[i] - 1);
        }
    }
    std::vector<int> open;
    for (int i = 0; i < st.n; ++i) {
        if (st.remaining[i] > 0) {
            open.push_back(i);
        }
    }
    std::sort(open.begin(), open.end(), [&](int a, int b) {
        double qa = static_cast<double>(st.model->projects[a].technicians) * st.remaining[a];
        double qb = static_cast<double>(st.model->projects[b].technicians) * st.remaining[b];
        // WSPT: by weight per unit of work content, descending
        return st.model->weights[a] * qb > st.model->weights[b] * qa;
    });
    double lb2 = acc;
    double cum = 0.0;
    for (int i : open) {
        cum += static_cast<double>(st.model->projects[i].technicians) * st.remaining[i];
        lb2 += st.model->weights[i] * (day - 1.0 + cum / st.pool);
    }
    return std::max(lb1, lb2);
}

/// Enumerates maximal feasible work sets over the open projects. Working on
/// more projects never delays any completion, so only maximal sets need to be
/// branched on.
inline std::vector<std::uint32_t> maximal_work_sets(const BnbState& st,
                                                    const std::vector<int>& open,
                                                    std::uint32_t must_include) {
    std::vector<std::uint32_t> sets;
    const auto k = static_cast<std::uint32_t>(open.size());
    for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
        if ((mask & must_include) != must_include) {
            continue;
        }
        int crew = 0;
        for (std::uint32_t b = 0; b < k; ++b) {
            if (mask & (1u << b)) {
                crew += st.model->projects[open[b]].technicians;
            }
        }
        if (crew > st.pool) {
            continue;
        }
        bool maximal = true;
        for (std::uint32_t b = 0; b < k; ++b) {
            if (!(mask & (1u << b)) &&
                crew + st.model->projects[open[b]].technicians <= st.pool) {
                maximal = false;
                break;
            }
        }
        if (maximal) {
            sets.push_back(mask);
        }
    }
    // Prefer sets covering more weighted work; deterministic tie-break.
    std::sort(sets.begin(), sets.end(), [&](std::uint32_t a, std::uint32_t b) {
        double wa = 0.0, wb = 0.0;
        for (std::uint32_t bit = 0; bit < k; ++bit) {
            if (a & (1u << bit)) {
                wa += st.model->weights[open[bit]];
            }
            if (b & (1u << bit)) {
                wb += st.model->weights[open[bit]];
            }
        }
        if (wa != wb) {
            return wa > wb;
        }
        return a < b;
    });
    return sets;
}

inline void bnb_search(BnbState& st, int day, double acc) {
    if (st.capped) {
        return;
    }
    std::vector<int> open;
    for (int i = 0; i < st.n; ++i) {
        if (st.remaining[i] > 0) {
            open.push_back(i);
        }
    }
    if (open.empty()) {
        if (!st.found || acc < st.best_obj) {
            st.best_obj = acc;
            st.best_active = st.active_days;
            st.best_completion = st.completion;
            st.found = true;
        }
        return;
    }
    if (++st.nodes > st.opt->node_cap) {
        st.capped = true;
        return;
    }
    if (st.found && bnb_lower_bound(st, day, acc) >= st.best_obj) {
        return;
    }

    std::uint32_t must_include = 0;
    if (st.opt->contiguous) {
        for (size_t b = 0; b < open.size(); ++b) {
            int i = open[b];
            if (st.remaining[i] < st.model->projects[i].duration_days) {
                must_include |= (1u << b); // started projects must continue
            }
        }
    }
    for (std::uint32_t mask : maximal_work_sets(st, open, must_include)) {
        double added = 0.0;
        for (size_t b = 0; b < open.size(); ++b) {
            if (!(mask & (1u << b))) {
                continue;
            }
            int i = open[b];
            st.active_days[i].push_back(day);
            if (--st.remaining[i] == 0) {
                st.completion[i] = day;
                added += st.model->weights[i] * day;
            }
        }
        bnb_search(st, day + 1, acc + added);
        for (size_t b = 0; b < open.size(); ++b) {
            if (!(mask & (1u << b))) {
                continue;
            }
            int i = open[b];
            st.active_days[i].pop_back();
            if (st.remaining[i]++ == 0) {
                st.completion[i] = 0;
            }
        }
        if (st.capped) {
            return;
        }
    }
}

} // namespace detail

/// Exact weighted-completion-time crew schedule by day-indexed branch and
/// bound. Preemption is allowed, matching the aggregated constraint set; pass
/// contiguous=true to forbid it. Instances beyond desk scale (12 projects or
/// a 120-day horizon) are refused; the node cap turns off the optimality flag
/// instead of running unbounded.
inline IlpSchedule solve_schedule(const ScheduleModel& model, const IlpOptions& opt = {}) {
    model.validate();
    IlpSchedule out;
    if (model.projects.empty()) {
        out.optimal = true;
        return out;
    }
    if (model.projects.size() > 12) {
        throw Error(strf("schedule has %zu projects; the exact solver is limited to 12 — "
                         "split the portfolio or use the FIFO scheduler",
                         model.projects.size()));
    }
    if (model.horizon_days() > 120) {
        throw Error(strf("schedule horizon is %d days; the exact solver is limited to 120 — "
                         "split the portfolio or use the FIFO scheduler",
                         model.horizon_days()));
    }

    detail::BnbState st;
    st.model = &model;
    st.opt = &opt;
    st.n = static_cast<int>(model.projects.size());
    st.pool = model.technician_pool;
    st.remaining.resize(st.n);
    for (int i = 0; i < st.n; ++i) {
        st.remaining[i] = model.projects[i].duration_days;
    }
    st.active_days.assign(st.n, {});
    st.completion.assign(st.n, 0);
    detail::bnb_search(st, 1, 0.0);

    if (!st.found) {
        throw Error("schedule search found no feasible plan"); // cannot happen with a valid model
    }
    out.objective = st.best_obj;
    out.optimal = !st.capped;
    out.nodes = st.nodes;
    for (int i = 0; i < st.n; ++i) {
        ScheduledProject p;
        p.investment_id = model.projects[i].investment_id;
        p.technicians = model.projects[i].technicians;
        p.active_days = st.best_active[i];
        p.start_day = p.active_days.front();
        p.completion_day = st.best_completion[i];
        out.schedule.projects.push_back(std::move(p));
        out.schedule.makespan_days = std::max(out.schedule.makespan_days, st.best_completion[i]);
    }
    return out;
}

/// Checks the four scheduling constraints on a returned plan (aggregated
/// forms): full duration met, pool respected with fixed crew sizes, and
/// completion equal to the last active day. Throws on violation.
inline void validate_schedule(const ScheduleModel& model, const CrewSchedule& sched) {
    if (sched.projects.size() != model.projects.size()) {
        throw Error("schedule validation: project count mismatch");
    }
    std::vector<int> usage(static_cast<size_t>(model.horizon_days()) + 2, 0);
    for (size_t i = 0; i < sched.projects.size(); ++i) {
        const auto& p = sched.projects[i];
        const auto& spec = model.projects[i];
        if (static_cast<int>(p.active_days.size()) != spec.duration_days) {
            throw Error(strf("project %zu: %zu active days != duration %d", i,
                             p.active_days.size(), spec.duration_days));
        }
        int last = 0;
        for (int d : p.active_days) {
            if (d < 1 || d > model.horizon_days()) {
                throw Error(strf("project %zu active on day %d outside the horizon", i, d));
            }
            usage[static_cast<size_t>(d)] += spec.technicians;
            last = std::max(last, d);
            if (p.completion_day < d) {
                throw Error(strf("project %zu: completion day %d before active day %d", i,
                                 p.completion_day, d));
            }
        }
        if (p.completion_day != last) {
            throw Error(strf("project %zu: completion day %d is not the last active day %d", i,
                             p.completion_day, last));
        }
    }
    for (size_t d = 0; d < usage.size(); ++d) {
        if (usage[d] > model.technician_pool) {
            throw Error(strf("day %zu uses %d technicians, pool is %d", d, usage[d],
                             model.technician_pool));
        }
    }
}

/// Expands the aggregate schedule into per-technician assignments
/// x[day][technician] = project, proving constraints (2) and (4) in their
/// per-identity form. Technicians are interchangeable, so a greedy packing
/// always succeeds when the aggregate plan is valid.
inline std::vector<std::vector<int>> reconstruct_assignments(const ScheduleModel& model,
                                                             const CrewSchedule& sched) {
    int horizon = 0;
    for (const auto& p : sched.projects) {
        horizon = std::max(horizon, p.completion_day);
    }
    std::vector<std::vector<int>> x(static_cast<size_t>(horizon) + 1,
                                    std::vector<int>(model.technician_pool, -1));
    for (size_t i = 0; i < sched.projects.size(); ++i) {
        for (int d : sched.projects[i].active_days) {
            int needed = model.projects[i].technicians;
            for (int j = 0; j < model.technician_pool && needed > 0; ++j) {
                if (x[static_cast<size_t>(d)][j] == -1) {
                    x[static_cast<size_t>(d)][j] = static_cast<int>(i);
                    --needed;
                }
            }
            if (needed > 0) {
                throw Error("cannot staff the schedule within the technician pool");
            }
        }
    }
    return x;
}

/// Leave-one-out marginal benefit of each project in a portfolio: the mean
/// paired-seed difference in monetized unserved energy and resistive losses
/// between the portfolio without the project and the full portfolio.
/// Negative estimates clamp to zero. Identical seeds across the full and
/// leave-one-out runs (common random numbers) keep the comparison noise down.
inline std::vector<double> marginal_benefits(const Portfolio& portfolio,
                                             const CandidateSet& candidates, const Network& net,
                                             const TimeSeries& ts, const WeatherConfig& weather,
                                             const SimSpan& span, const EconParams& econ,
                                             int mc_runs, std::uint64_t master_seed,
                                             int jobs = 1) {
    if (portfolio.investment_ids.empty()) {
        return {};
    }
    const size_t np = portfolio.investment_ids.size();
    std::vector<std::uint64_t> seeds(static_cast<size_t>(mc_runs));
    for (int r = 0; r < mc_runs; ++r) {
        seeds[r] = derive_seed(master_seed, fnv1a64("marginal"), r);
    }

    // Variant 0 is the full portfolio; variant i+1 drops project i.
    std::vector<std::vector<Investment>> variants;
    variants.push_back(investments_of(candidates, portfolio.investment_ids));
    for (size_t drop = 0; drop < np; ++drop) {
        std::vector<int> ids = portfolio.investment_ids;
        ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(drop));
        variants.push_back(investments_of(candidates, ids));
    }

    // One slot per (variant, run); reduced sequentially so the result does
    // not depend on thread scheduling.
    std::vector<double> usd(variants.size() * seeds.size(), 0.0);
    parallel_for(variants.size() * seeds.size(), jobs, [&](size_t flat) {
        size_t v = flat / seeds.size();
        size_t r = flat % seeds.size();
        Network invested = apply_investments(net, variants[v]);
        SimulationResult res = run_scenario(invested, ts, weather, seeds[r], span);
        usd[flat] = res.total_unserved_mwh() * 1000.0 * econ.value_of_lost_load +
                    res.total_losses_mwh() * 1000.0 * econ.cost_per_kwh;
    });
    std::vector<double> cost(variants.size(), 0.0); // mean monetized objective
    for (size_t v = 0; v < variants.size(); ++v) {
        for (size_t r = 0; r < seeds.size(); ++r) {
            cost[v] += usd[v * seeds.size() + r] / static_cast<double>(mc_runs);
        }
    }

    std::vector<double> w(np, 0.0);
    for (size_t i = 0; i < np; ++i) {
        w[i] = std::max(0.0, cost[i + 1] - cost[0]);
    }
    return w;
}

/// Convenience: model for a portfolio with the given weights.
inline ScheduleModel make_schedule_model(const Portfolio& portfolio,
                                         const CandidateSet& candidates,
                                         const std::vector<double>& weights) {
    ScheduleModel model;
    model.technician_pool = candidates.technician_pool;
    model.weights = weights;
    for (int id : portfolio.investment_ids) {
        const Investment& inv = candidates.by_id(id);
        model.projects.push_back({inv.id, inv.work_days, inv.technicians_required});
    }
    return model;
}

} // namespace gridres
