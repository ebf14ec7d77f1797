#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "gridres/twin.hpp"

namespace gridres {

struct EconParams {
    double cost_per_kwh = 0.0;        // $/kWh of losses
    double value_of_lost_load = 0.0;  // $/kWh unserved
    double discount_rate = 0.0;       // fraction/yr
    int npv_horizon_years = 1;        // T
    double om_fraction = 0.10;        // O&M as fraction of capex per year
    double asset_lifetime_years = 40; // straight-line depreciation

    void validate() const {
        if (discount_rate < 0.0) {
            throw ConfigError("econ.discount_rate must be >= 0");
        }
        if (npv_horizon_years < 1) {
            throw ConfigError("econ.npv_horizon_years must be >= 1");
        }
        if (om_fraction < 0.0 || om_fraction > 1.0) {
            throw ConfigError("econ.om_fraction must be in [0, 1]");
        }
        if (asset_lifetime_years <= 0.0) {
            throw ConfigError("econ.asset_lifetime_years must be > 0");
        }
    }
};

/// One scenario's KPI set, per the resilience / growth / reliability /
/// affordability metric categories.
struct KpiReport {
    double unserved_mwh = 0.0;
    double losses_mwh = 0.0;
    double cost_unserved = 0.0;          // $
    std::optional<double> saidi_med_min; // minutes per customer
    std::optional<double> saifi_med;     // interruptions per customer
    std::optional<double> caidi_med_min; // minutes per interruption
    double cost_resistive_losses = 0.0;  // $
    double plant_value_growth = 0.0;     // $
    double avg_capacity_headroom = 0.0;  // %
    double pct_time_over_capacity = 0.0; // % of line-steps above 80% loading
    double pct_time_voltage_deviation = 0.0; // % of energized bus-steps |V-1| > 0.05
    double portfolio_cost = 0.0;
    std::map<std::string, double> unserved_cost_by_subnet;
    bool scenario_valid = true;
};

/// Depreciation basis of the network's line assets at replacement cost.
inline double plant_replacement_value(const Network& net) {
    double total = 0.0;
    for (const auto& ln : net.lines) {
        total += ln.conductor.replacement_cost_per_km * ln.length_km;
    }
    return total;
}

/// Reduces one scenario's raw series to the KPI set. `net` must be the
/// network the scenario actually ran on (post-investment) so the plant value
/// and subnet mapping line up.
inline KpiReport compute_kpis(const SimulationResult& res, const Network& net,
                              const EconParams& econ, double portfolio_cost) {
    KpiReport k;
    k.scenario_valid = res.valid;
    k.portfolio_cost = portfolio_cost;
    k.unserved_mwh = res.total_unserved_mwh();
    k.losses_mwh = res.total_losses_mwh();
    k.cost_unserved = k.unserved_mwh * 1000.0 * econ.value_of_lost_load;
    k.cost_resistive_losses = k.losses_mwh * 1000.0 * econ.cost_per_kwh;

    const size_t customers = net.loads.size();
    if (customers > 0) {
        double interruption_minutes = 0.0;
        for (const auto& ep : res.episodes) {
            interruption_minutes += static_cast<double>(ep.end - ep.start) / 60.0;
        }
        double saidi = interruption_minutes / static_cast<double>(customers);
        double saifi = static_cast<double>(res.episodes.size()) / static_cast<double>(customers);
        k.saidi_med_min = saidi;
        k.saifi_med = saifi;
        if (saifi > 0.0) {
            k.caidi_med_min = saidi / saifi;
        }
    }

    // Straight-line depreciation over the simulated span; capex is booked as
    // added plant value.
    double span_years = static_cast<double>(res.n_steps) * 0.25 / kHoursPerYear;
    double depreciation =
        plant_replacement_value(net) / econ.asset_lifetime_years * span_years;
    k.plant_value_growth = portfolio_cost - depreciation;

    size_t line_steps = 0, over_cap = 0;
    double headroom_sum = 0.0;
    for (float loading : res.line_loading) {
        headroom_sum += 1.0 - static_cast<double>(loading);
        if (loading > 0.8f) {
            ++over_cap;
        }
        ++line_steps;
    }
    if (line_steps > 0) {
        k.avg_capacity_headroom = headroom_sum / static_cast<double>(line_steps) * 100.0;
        k.pct_time_over_capacity =
            static_cast<double>(over_cap) / static_cast<double>(line_steps) * 100.0;
    }

    size_t bus_steps = 0, deviating = 0;
    for (float vm : res.bus_vm_pu) {
        if (std::isnan(vm)) {
            continue; // de-energized: no voltage to deviate
        }
        ++bus_steps;
        if (std::abs(static_cast<double>(vm) - 1.0) > 0.05) {
            ++deviating;
        }
    }
    if (bus_steps > 0) {
        k.pct_time_voltage_deviation =
            static_cast<double>(deviating) / static_cast<double>(bus_steps) * 100.0;
    }

    for (size_t l = 0; l < res.n_loads; ++l) {
        const std::string& subnet = net.buses[net.bus_index(net.loads[l].bus)].subnet;
        k.unserved_cost_by_subnet[subnet] +=
            res.unserved_of_load_mwh(l) * 1000.0 * econ.value_of_lost_load;
    }
    for (const auto& b : net.buses) {
        k.unserved_cost_by_subnet.emplace(b.subnet, 0.0); // subnets with no unserved load
    }
    return k;
}

// ---------------------------------------------------------------------------
// Scenario aggregation
// ---------------------------------------------------------------------------

struct SummaryStats {
    double median = 0.0;
    double iqr = 0.0;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    size_t n = 0;
};

/// Linear-interpolation quantile (type 7) on a sorted sample.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) {
        return 0.0;
    }
    if (sorted.size() == 1) {
        return sorted[0];
    }
    double h = q * static_cast<double>(sorted.size() - 1);
    size_t lo = static_cast<size_t>(std::floor(h));
    size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double t_quantile(double dof, double p) {
    boost::math::students_t dist(dof);
    return boost::math::quantile(dist, p);
}

inline double z_quantile(double p) {
    boost::math::normal dist;
    return boost::math::quantile(dist, p);
}

/// Median, IQR, mean and a mean-based confidence interval. Per the Monte
/// Carlo protocol the interval uses the t distribution below 30 samples and
/// the normal distribution from 30 up.
inline SummaryStats summarize(std::vector<double> samples, double confidence = 0.95) {
    if (samples.size() < 2) {
        throw Error("summary statistics require at least 2 samples");
    }
    SummaryStats st;
    st.n = samples.size();
    std::sort(samples.begin(), samples.end());
    st.median = quantile_sorted(samples, 0.5);
    st.iqr = quantile_sorted(samples, 0.75) - quantile_sorted(samples, 0.25);
    double sum = 0.0;
    for (double v : samples) {
        sum += v;
    }
    st.mean = sum / static_cast<double>(st.n);
    double ss = 0.0;
    for (double v : samples) {
        ss += (v - st.mean) * (v - st.mean);
    }
    double sd = std::sqrt(ss / static_cast<double>(st.n - 1));
    double tail = 1.0 - (1.0 - confidence) / 2.0;
    double q = st.n < 30 ? t_quantile(static_cast<double>(st.n - 1), tail) : z_quantile(tail);
    double half = q * sd / std::sqrt(static_cast<double>(st.n));
    st.ci_low = st.mean - half;
    st.ci_high = st.mean + half;
    return st;
}

/// The four KPIs that vary with the weather draw, in report order.
inline const std::vector<std::string>& varying_kpi_names() {
    static const std::vector<std::string> names = {"cost_unserved_usd", "saidi_med_min",
                                                   "saifi_med", "caidi_med_min"};
    return names;
}

inline std::optional<double> varying_kpi_value(const KpiReport& k, const std::string& name) {
    if (name == "cost_unserved_usd") {
        return k.cost_unserved;
    }
    if (name == "saidi_med_min") {
        return k.saidi_med_min;
    }
    if (name == "saifi_med") {
        return k.saifi_med;
    }
    if (name == "caidi_med_min") {
        return k.caidi_med_min;
    }
    throw Error("unknown KPI: " + name);
}

/// Aggregates the weather-varying KPIs across scenario reports. KPIs that are
/// undefined in some scenarios (CAIDI with zero interruptions) aggregate over
/// the scenarios where they are defined and are absent if fewer than two.
inline std::map<std::string, SummaryStats> aggregate(const std::vector<KpiReport>& reports,
                                                     double confidence = 0.95) {
    if (reports.size() < 2) {
        throw Error("aggregation requires at least 2 scenario reports");
    }
    std::map<std::string, SummaryStats> out;
    for (const auto& name : varying_kpi_names()) {
        std::vector<double> samples;
        for (const auto& r : reports) {
            if (auto v = varying_kpi_value(r, name)) {
                samples.push_back(*v);
            }
        }
        if (samples.size() >= 2) {
            out[name] = summarize(std::move(samples), confidence);
        }
    }
    return out;
}

/// Per-subnet aggregation of the unserved-energy cost across scenarios.
inline std::map<std::string, SummaryStats>
deaverage_by_subnet(const std::vector<KpiReport>& reports, double confidence = 0.95) {
    if (reports.size() < 2) {
        throw Error("aggregation requires at least 2 scenario reports");
    }
    std::map<std::string, std::vector<double>> series;
    for (const auto& r : reports) {
        for (const auto& [subnet, cost] : r.unserved_cost_by_subnet) {
            series[subnet].push_back(cost);
        }
    }
    std::map<std::string, SummaryStats> out;
    for (auto& [subnet, samples] : series) {
        out[subnet] = summarize(std::move(samples), confidence);
    }
    return out;
}

} // namespace gridres
