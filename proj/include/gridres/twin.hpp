#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "gridres/powerflow.hpp"
#include "gridres/weather.hpp"

namespace gridres {

struct OutageRecord {
    int line_id = 0;
    TimePoint start = 0;
    TimePoint restored = 0;
    int event_id = -1; // -1 for forced outages
};

struct InterruptionEpisode {
    int load_id = 0;
    TimePoint start = 0;
    TimePoint end = 0;
};

/// Raw per-scenario simulation output at 15-minute resolution. Per-line and
/// per-bus series are stored flat, step-major. Voltages are NaN for
/// de-energized buses; loadings are zero for lines carrying no current.
struct SimulationResult {
    size_t n_steps = 0;
    size_t n_lines = 0;
    size_t n_buses = 0;
    size_t n_loads = 0;
    TimePoint start = 0;

    std::vector<float> losses_mwh;      // [step]
    std::vector<float> line_loading;    // [step * n_lines + line]
    std::vector<float> bus_vm_pu;       // [step * n_buses + bus]
    std::vector<float> unserved_mwh;    // [step * n_loads + load]

    std::vector<OutageRecord> outages;
    std::vector<InterruptionEpisode> episodes;
    std::vector<WeatherEvent> events;

    int convergence_failures = 0;
    bool valid = true;
    double max_power_imbalance_mw = 0.0;

    float loading_at(size_t step, size_t line) const {
        return line_loading[step * n_lines + line];
    }
    float vm_at(size_t step, size_t bus) const { return bus_vm_pu[step * n_buses + bus]; }
    float unserved_at(size_t step, size_t load) const {
        return unserved_mwh[step * n_loads + load];
    }

    double total_losses_mwh() const {
        double s = 0.0;
        for (float v : losses_mwh) {
            s += v;
        }
        return s;
    }
    double total_unserved_mwh() const {
        double s = 0.0;
        for (float v : unserved_mwh) {
            s += v;
        }
        return s;
    }
    double unserved_of_load_mwh(size_t load) const {
        double s = 0.0;
        for (size_t t = 0; t < n_steps; ++t) {
            s += unserved_at(t, load);
        }
        return s;
    }
};

/// Maximal connected components over the given active lines plus all
/// transformer branches. Component 0-based ids per bus; exactly one component
/// may contain the slack connection.
struct Partition {
    std::vector<int> component_of_bus;
    int n_components = 0;
    int slack_component = -1;
};

inline Partition energized_partition(const Network& net, const std::vector<char>& line_active) {
    const size_t nb = net.buses.size();
    Partition part;
    part.component_of_bus.assign(nb, -1);
    std::vector<std::vector<int>> adj(nb);
    for (size_t i = 0; i < net.lines.size(); ++i) {
        if (!line_active[i]) {
            continue;
        }
        int a = net.bus_index(net.lines[i].from_bus);
        int b = net.bus_index(net.lines[i].to_bus);
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (const auto& tr : net.transformers) {
        int a = net.bus_index(tr.from_bus);
        int b = net.bus_index(tr.to_bus);
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<int> stack;
    for (size_t seed = 0; seed < nb; ++seed) {
        if (part.component_of_bus[seed] >= 0) {
            continue;
        }
        int comp = part.n_components++;
        part.component_of_bus[seed] = comp;
        stack.assign(1, static_cast<int>(seed));
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v : adj[u]) {
                if (part.component_of_bus[v] < 0) {
                    part.component_of_bus[v] = comp;
                    stack.push_back(v);
                }
            }
        }
    }
    part.slack_component = part.component_of_bus[net.slack_bus_index()];
    return part;
}

struct SimSpan {
    TimePoint start = 0;
    size_t n_steps = 0;

    TimePoint end() const { return start + static_cast<TimePoint>(n_steps) * kStepSeconds; }
};

/// Inclusive date range -> span of whole days at 96 steps/day.
inline SimSpan span_from_dates(TimePoint start_date, TimePoint end_date) {
    if (end_date < start_date) {
        throw ConfigError("simulation end date precedes start date");
    }
    std::int64_t days = (end_date - start_date) / kSecondsPerDay + 1;
    return SimSpan{start_date, static_cast<size_t>(days) * kStepsPerDay};
}

/// A deterministic line outage injected independently of weather, used by the
/// NPV benefit calculation.
struct ForcedOutage {
    int line_id = 0;
    TimePoint start = 0;
    double duration_h = 0.0;
};

struct ScenarioOptions {
    // Scenarios whose convergence-failure fraction exceeds this are invalid.
    double max_failure_fraction = 0.001;
    PowerFlowOptions powerflow;
};

/// Runs one Monte Carlo scenario: advances the weather state machine step by
/// step, partitions the grid into energized islands, solves the AC power flow
/// on the slack-connected component and books unserved energy for every load
/// in a dead island at its full demanded power. Pure given
/// (network, timeseries, seed), so scenarios can run concurrently.
inline SimulationResult run_scenario(const Network& net, const TimeSeries& ts,
                                     const WeatherConfig& weather, std::uint64_t seed,
                                     const SimSpan& span,
                                     const std::vector<ForcedOutage>& forced = {},
                                     const ScenarioOptions& opt = {}) {
    weather.validate();
    const size_t nb = net.buses.size();
    const size_t nl = net.lines.size();
    const size_t nload = net.loads.size();
    const size_t ts_offset = ts.step_of(span.start);
    if (ts_offset + span.n_steps > ts.n_steps()) {
        throw ConfigError("simulation span extends past the end of the time series");
    }

    SimulationResult res;
    res.n_steps = span.n_steps;
    res.n_lines = nl;
    res.n_buses = nb;
    res.n_loads = nload;
    res.start = span.start;
    res.losses_mwh.assign(span.n_steps, 0.0f);
    res.line_loading.assign(span.n_steps * nl, 0.0f);
    res.bus_vm_pu.assign(span.n_steps * nb, std::numeric_limits<float>::quiet_NaN());
    res.unserved_mwh.assign(span.n_steps * nload, 0.0f);

    // Resolve profile references once.
    std::vector<int> load_profile(nload), load_bus(nload);
    for (size_t l = 0; l < nload; ++l) {
        load_profile[l] = ts.profile_index(net.loads[l].profile_id);
        if (load_profile[l] < 0) {
            throw Error("load profile missing: " + net.loads[l].profile_id);
        }
        load_bus[l] = net.bus_index(net.loads[l].bus);
    }
    std::vector<int> gen_profile(net.generators.size(), -1), gen_bus(net.generators.size());
    for (size_t g = 0; g < net.generators.size(); ++g) {
        gen_bus[g] = net.bus_index(net.generators[g].bus);
        if (!net.generators[g].is_slack_connection && !net.generators[g].profile_id.empty()) {
            gen_profile[g] = ts.profile_index(net.generators[g].profile_id);
            if (gen_profile[g] < 0) {
                throw Error("generator profile missing: " + net.generators[g].profile_id);
            }
        }
    }

    Rng rng(seed);
    std::vector<char> active(nl, 0);
    for (size_t i = 0; i < nl; ++i) {
        active[i] = net.lines[i].in_service ? 1 : 0;
    }
    // repair_at[i] > 0 means line i is out until that time.
    std::vector<TimePoint> repair_at(nl, 0);

    // Forced outages, sorted by start for deterministic application.
    std::vector<ForcedOutage> pending_forced = forced;
    std::sort(pending_forced.begin(), pending_forced.end(),
              [](const ForcedOutage& a, const ForcedOutage& b) {
                  return a.start != b.start ? a.start < b.start : a.line_id < b.line_id;
              });
    size_t next_forced = 0;

    AdmittanceMatrix adm = build_admittance(net, active);
    bool adm_dirty = false;

    std::vector<double> p_inj(nb), q_inj(nb);
    float prev_losses_mwh = 0.0f;
    std::vector<float> prev_loading(nl, 0.0f);
    std::vector<float> prev_vm(nb, std::numeric_limits<float>::quiet_NaN());
    std::vector<char> load_was_unserved(nload, 0);
    std::vector<TimePoint> episode_start(nload, 0);

    const double step_hours = kStepSeconds / 3600.0;

    for (size_t stp = 0; stp < span.n_steps; ++stp) {
        const TimePoint now = span.start + static_cast<TimePoint>(stp) * kStepSeconds;
        const size_t tsi = ts_offset + stp;

        // 1. Repairs completing at or before this step restore lines.
        for (size_t i = 0; i < nl; ++i) {
            if (!active[i] && repair_at[i] > 0 && repair_at[i] <= now) {
                active[i] = net.lines[i].in_service ? 1 : 0;
                repair_at[i] = 0;
                adm_dirty = true;
            }
        }

        // 2. New weather event. Any Poisson count >= 1 spawns exactly one.
        if (event_count(rng, now, weather, step_hours) >= 1) {
            WeatherEvent ev = sample_event(rng, weather, net.bounds, now);
            ev.id = static_cast<int>(res.events.size());
            std::vector<int> candidates;
            for (int idx : lines_in_impact_area(net, ev)) {
                if (active[idx]) {
                    candidates.push_back(idx);
                }
            }
            ev.outages = sample_line_outages(rng, candidates, net, weather, ev);
            for (const auto& o : ev.outages) {
                int idx = net.line_index(o.line_id);
                active[idx] = 0;
                repair_at[idx] = o.repair_complete;
                res.outages.push_back({o.line_id, now, o.repair_complete, ev.id});
                adm_dirty = true;
            }
            res.events.push_back(std::move(ev));
        }

        // 3. Forced outages starting at this step.
        while (next_forced < pending_forced.size() && pending_forced[next_forced].start <= now) {
            const ForcedOutage& f = pending_forced[next_forced];
            int idx = net.line_index(f.line_id);
            if (active[idx]) {
                TimePoint restored =
                    f.start + static_cast<TimePoint>(std::llround(f.duration_h * 3600.0));
                active[idx] = 0;
                repair_at[idx] = restored;
                res.outages.push_back({f.line_id, now, restored, -1});
                adm_dirty = true;
            }
            ++next_forced;
        }

        if (adm_dirty) {
            adm = build_admittance(net, active);
            adm_dirty = false;
        }

        // 4. Injections on the slack component; dead-island loads are unserved.
        std::fill(p_inj.begin(), p_inj.end(), 0.0);
        std::fill(q_inj.begin(), q_inj.end(), 0.0);
        double served_load_p = 0.0;
        double gen_p = 0.0;
        std::vector<char> unserved_now(nload, 0);
        for (size_t l = 0; l < nload; ++l) {
            double p = ts.p_mw[load_profile[l]][tsi];
            double q = ts.q_mvar[load_profile[l]][tsi];
            if (adm.pos_of_bus[load_bus[l]] >= 0) {
                p_inj[load_bus[l]] -= p;
                q_inj[load_bus[l]] -= q;
                served_load_p += p;
            } else {
                unserved_now[l] = 1;
                res.unserved_mwh[stp * nload + l] = static_cast<float>(p * step_hours);
            }
        }
        for (size_t g = 0; g < net.generators.size(); ++g) {
            if (gen_profile[g] < 0 || adm.pos_of_bus[gen_bus[g]] < 0) {
                continue;
            }
            double p = ts.p_mw[gen_profile[g]][tsi];
            double q = ts.q_mvar[gen_profile[g]][tsi];
            p_inj[gen_bus[g]] += p;
            q_inj[gen_bus[g]] += q;
            gen_p += p;
        }

        // 5. Solve and record.
        PowerFlowSolution sol = solve_power_flow(net, adm, p_inj, q_inj, opt.powerflow);
        if (sol.converged) {
            res.losses_mwh[stp] = static_cast<float>(sol.losses_mw * step_hours);
            for (size_t i = 0; i < nl; ++i) {
                res.line_loading[stp * nl + i] = static_cast<float>(sol.line_loading[i]);
            }
            for (size_t b = 0; b < nb; ++b) {
                res.bus_vm_pu[stp * nb + b] = static_cast<float>(sol.vm_pu[b]);
            }
            double imbalance = sol.power_balance_mw(gen_p, served_load_p);
            res.max_power_imbalance_mw = std::max(res.max_power_imbalance_mw, imbalance);
            prev_losses_mwh = res.losses_mwh[stp];
            std::copy(res.line_loading.begin() + stp * nl,
                      res.line_loading.begin() + (stp + 1) * nl, prev_loading.begin());
            std::copy(res.bus_vm_pu.begin() + stp * nb, res.bus_vm_pu.begin() + (stp + 1) * nb,
                      prev_vm.begin());
        } else {
            // Loss/loading series carry the previous step so the KPI series
            // have no holes; the affected component's load counts as unserved.
            ++res.convergence_failures;
            res.losses_mwh[stp] = prev_losses_mwh;
            std::copy(prev_loading.begin(), prev_loading.end(),
                      res.line_loading.begin() + stp * nl);
            std::copy(prev_vm.begin(), prev_vm.end(), res.bus_vm_pu.begin() + stp * nb);
            for (size_t l = 0; l < nload; ++l) {
                if (adm.pos_of_bus[load_bus[l]] >= 0) {
                    double p = ts.p_mw[load_profile[l]][tsi];
                    unserved_now[l] = 1;
                    res.unserved_mwh[stp * nload + l] = static_cast<float>(p * step_hours);
                }
            }
        }

        // 6. Interruption episode bookkeeping.
        for (size_t l = 0; l < nload; ++l) {
            if (unserved_now[l] && !load_was_unserved[l]) {
                episode_start[l] = now;
            } else if (!unserved_now[l] && load_was_unserved[l]) {
                res.episodes.push_back({net.loads[l].id, episode_start[l], now});
            }
            load_was_unserved[l] = unserved_now[l];
        }
    }
    // Close episodes still open at the end of the span.
    for (size_t l = 0; l < nload; ++l) {
        if (load_was_unserved[l]) {
            res.episodes.push_back({net.loads[l].id, episode_start[l], span.end()});
        }
    }

    res.valid = res.convergence_failures <=
                static_cast<int>(opt.max_failure_fraction * static_cast<double>(span.n_steps));
    return res;
}

} // namespace gridres
