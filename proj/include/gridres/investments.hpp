#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "gridres/grid_model.hpp"

namespace gridres {

enum class InvestmentKind { Bury, Upgrade };

inline const char* to_string(InvestmentKind k) {
    return k == InvestmentKind::Bury ? "bury" : "upgrade";
}

/// One candidate capital project: burying an overhead line or re-conductoring
/// an underground one. Cost and crew needs scale with line length; work days
/// round up to whole days because scheduling is day-granular.
struct Investment {
    int id = 0; // dense 0..N-1, genome position
    InvestmentKind kind = InvestmentKind::Bury;
    int line_id = 0;
    ConductorType new_conductor;
    double capital_cost = 0.0;
    int work_days = 1;
    int technicians_required = 0;
};

struct CandidateSet {
    std::vector<Investment> investments;
    double budget = 0.0;
    int horizon_days = 0;
    int technician_pool = 0;

    const Investment& by_id(int id) const {
        if (id < 0 || id >= static_cast<int>(investments.size())) {
            throw Error(strf("unknown investment id %d", id));
        }
        return investments[id];
    }

    double cost_of(const std::vector<int>& ids) const {
        double c = 0.0;
        for (int id : ids) {
            c += by_id(id).capital_cost;
        }
        return c;
    }
};

/// A selected set of candidate investments.
struct Portfolio {
    std::vector<int> investment_ids; // ascending
    double total_cost = 0.0;
    // Evaluated objectives, when known (means over Monte Carlo scenarios).
    double mean_unserved_mwh = 0.0;
    double mean_losses_mwh = 0.0;
    bool evaluated = false;
};

/// Day-granular crew plan shared by the FIFO and ILP schedulers. Days are
/// 1-indexed; a project occupies `technicians` crew members on each of its
/// active days.
struct ScheduledProject {
    int investment_id = 0;
    int start_day = 1;
    int completion_day = 1;
    int technicians = 0;
    std::vector<int> active_days; // ascending
};

struct CrewSchedule {
    std::vector<ScheduledProject> projects;
    int makespan_days = 0;

    /// Crew in use per day (1-indexed day -> headcount).
    std::vector<int> crew_usage() const {
        std::vector<int> usage(static_cast<size_t>(makespan_days) + 1, 0);
        for (const auto& p : projects) {
            for (int d : p.active_days) {
                usage[static_cast<size_t>(d)] += p.technicians;
            }
        }
        return usage;
    }
};

enum class CandidateFilter { All, SourceAdjacent };

namespace detail {

/// Bury product: the cheapest catalog cable offered for undergrounding.
inline const ConductorType* bury_target(const Catalog& catalog) {
    const ConductorType* best = nullptr;
    for (const auto& c : catalog) {
        if (c.overhead || c.underground_cost_per_km <= 0.0) {
            continue;
        }
        if (best == nullptr || c.underground_cost_per_km < best->underground_cost_per_km ||
            (c.underground_cost_per_km == best->underground_cost_per_km && c.name < best->name)) {
            best = &c;
        }
    }
    return best;
}

/// Upgrade product for a line: the next-larger offered underground conductor
/// by current rating, or null when the line is already at the top.
inline const ConductorType* upgrade_target(const Catalog& catalog, const ConductorType& cur) {
    const ConductorType* best = nullptr;
    for (const auto& c : catalog) {
        if (c.overhead || c.upgrade_cost_per_km <= 0.0 || c.max_current <= cur.max_current) {
            continue;
        }
        if (best == nullptr || c.max_current < best->max_current ||
            (c.max_current == best->max_current && c.name < best->name)) {
            best = &c;
        }
    }
    return best;
}

inline int ceil_days(double days) {
    int d = static_cast<int>(std::ceil(days - 1e-9));
    return d < 1 ? 1 : d;
}

} // namespace detail

/// Enumerates the candidate set: one bury candidate per overhead line and one
/// upgrade candidate per underground line that has a strictly higher-rated
/// conductor on offer. Candidates are ordered by line id, so genome positions
/// are stable for a given network+catalog. The source-adjacent filter keeps
/// only lines touching the external-grid bus or a generator of at least 1 MW.
inline CandidateSet enumerate_candidates(const Network& net, const Catalog& catalog,
                                         CandidateFilter filter = CandidateFilter::All,
                                         double budget = 0.0, int horizon_days = 0,
                                         int technician_pool = 0) {
    std::vector<char> source_bus(net.buses.size(), 0);
    if (filter == CandidateFilter::SourceAdjacent) {
        for (const auto& g : net.generators) {
            if (g.is_slack_connection || g.rated_mw >= 1.0) {
                source_bus[net.bus_index(g.bus)] = 1;
            }
        }
        // The external grid feeds through station transformers; the busbars
        // on their far side are where the feeder lines actually connect.
        for (bool grew = true; grew;) {
            grew = false;
            for (const auto& tr : net.transformers) {
                int a = net.bus_index(tr.from_bus);
                int b = net.bus_index(tr.to_bus);
                if (source_bus[a] != source_bus[b]) {
                    source_bus[a] = source_bus[b] = 1;
                    grew = true;
                }
            }
        }
    }

    CandidateSet set;
    set.budget = budget;
    set.horizon_days = horizon_days;
    set.technician_pool = technician_pool;
    const ConductorType* bury_product = detail::bury_target(catalog);

    std::vector<const Line*> ordered;
    for (const auto& ln : net.lines) {
        ordered.push_back(&ln);
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const Line* a, const Line* b) { return a->id < b->id; });

    for (const Line* ln : ordered) {
        if (filter == CandidateFilter::SourceAdjacent) {
            bool adjacent = source_bus[net.bus_index(ln->from_bus)] ||
                            source_bus[net.bus_index(ln->to_bus)];
            if (!adjacent) {
                continue;
            }
        }
        Investment inv;
        inv.line_id = ln->id;
        if (ln->conductor.overhead) {
            if (bury_product == nullptr) {
                continue;
            }
            inv.kind = InvestmentKind::Bury;
            inv.new_conductor = *bury_product;
            inv.capital_cost = bury_product->underground_cost_per_km * ln->length_km;
            inv.work_days = detail::ceil_days(bury_product->bury_work_days_per_km * ln->length_km);
            inv.technicians_required = bury_product->bury_technicians_required;
        } else {
            const ConductorType* up = detail::upgrade_target(catalog, ln->conductor);
            if (up == nullptr) {
                continue; // already on the largest available conductor
            }
            inv.kind = InvestmentKind::Upgrade;
            inv.new_conductor = *up;
            inv.capital_cost = up->upgrade_cost_per_km * ln->length_km;
            inv.work_days = detail::ceil_days(up->work_days_per_km * ln->length_km);
            inv.technicians_required = up->technicians_required;
        }
        inv.id = static_cast<int>(set.investments.size());
        set.investments.push_back(std::move(inv));
    }
    return set;
}

/// Returns a copy of the network with the selected investments applied. The
/// source network is untouched. Burying an already-buried line or upgrading
/// to a not-strictly-higher rating is rejected, so applying the same bury
/// twice can never double-count.
inline Network apply_investments(const Network& net, std::span<const Investment> selected) {
    Network out = net;
    for (const auto& inv : selected) {
        int idx = out.line_index(inv.line_id); // throws for missing lines
        Line& ln = out.lines[idx];
        if (inv.kind == InvestmentKind::Bury) {
            if (!ln.conductor.overhead) {
                throw Error(strf("investment %d: line %d is already underground", inv.id,
                                 inv.line_id));
            }
            ln.conductor = inv.new_conductor;
        } else {
            if (ln.conductor.overhead) {
                throw Error(strf("investment %d: line %d is overhead; bury it before upgrading",
                                 inv.id, inv.line_id));
            }
            if (inv.new_conductor.max_current <= ln.conductor.max_current) {
                throw Error(strf("investment %d: upgrade must strictly raise the current rating "
                                 "of line %d",
                                 inv.id, inv.line_id));
            }
            ln.conductor = inv.new_conductor;
        }
    }
    return out;
}

inline std::vector<Investment> investments_of(const CandidateSet& candidates,
                                              const std::vector<int>& ids) {
    std::vector<Investment> out;
    out.reserve(ids.size());
    for (int id : ids) {
        out.push_back(candidates.by_id(id));
    }
    return out;
}

} // namespace gridres
