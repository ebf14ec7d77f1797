#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "gridres/grid_model.hpp"
#include "gridres/investments.hpp"
#include "gridres/metrics.hpp"
#include "gridres/npv.hpp"
#include "gridres/nsga2.hpp"
#include "gridres/twin.hpp"
#include "gridres/weather.hpp"

namespace gridres {

/// One JSON document drives a whole run; its sections mirror the test-case
/// parameter tables. Relative paths resolve against the config file's
/// directory.
struct RunConfig {
    std::string name;
    std::string network_path;
    std::string catalog_path;
    std::string timeseries_path;

    TimePoint span_start = 0;
    TimePoint span_end = 0; // inclusive date
    double budget = 0.0;
    int horizon_days = 0;
    int technician_pool = 0;
    std::uint64_t master_seed = 0;
    int scenarios = 0; // Monte Carlo scenario count for evaluation
    CandidateFilter candidate_filter = CandidateFilter::All;

    EconParams econ;
    OutageAssumption npv_outage;
    WeatherConfig weather;
    GaConfig ga;

    json canonical; // resolved document, for the manifest and hashing

    SimSpan span() const { return span_from_dates(span_start, span_end); }

    std::uint64_t hash() const { return fnv1a64(canonical.dump()); }
};

namespace detail {

template <typename T>
T cfg_field(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) {
        throw ConfigError("config: missing field '" + path + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: field '" + path + "': " + e.what());
    }
}

template <typename T>
T cfg_field_or(const json& j, const std::string& key, const std::string& path, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    return cfg_field<T>(j, key, path);
}

inline std::string resolve_path(const std::string& base_dir, const std::string& p) {
    std::filesystem::path fp(p);
    if (fp.is_absolute()) {
        return fp.lexically_normal().string();
    }
    return (std::filesystem::path(base_dir) / fp).lexically_normal().string();
}

} // namespace detail

inline RunConfig run_config_from_json(const json& j, const std::string& base_dir) {
    using detail::cfg_field;
    using detail::cfg_field_or;
    RunConfig cfg;
    cfg.name = cfg_field_or<std::string>(j, "name", "name", "");

    const json& paths = cfg_field<json>(j, "paths", "paths");
    cfg.network_path =
        detail::resolve_path(base_dir, cfg_field<std::string>(paths, "network", "paths.network"));
    cfg.catalog_path =
        detail::resolve_path(base_dir, cfg_field<std::string>(paths, "catalog", "paths.catalog"));
    cfg.timeseries_path = detail::resolve_path(
        base_dir, cfg_field<std::string>(paths, "timeseries", "paths.timeseries"));

    const json& span = cfg_field<json>(j, "span", "span");
    try {
        cfg.span_start = parse_time(cfg_field<std::string>(span, "start", "span.start"));
        cfg.span_end = parse_time(cfg_field<std::string>(span, "end", "span.end"));
    } catch (const ParseError& e) {
        throw ConfigError(std::string("config: span: ") + e.what());
    }
    if (cfg.span_end < cfg.span_start) {
        throw ConfigError("config: span.end precedes span.start");
    }

    cfg.budget = cfg_field<double>(j, "budget", "budget");
    cfg.horizon_days = cfg_field<int>(j, "horizon_days", "horizon_days");
    cfg.technician_pool = cfg_field<int>(j, "technicians", "technicians");
    cfg.master_seed = cfg_field<std::uint64_t>(j, "master_seed", "master_seed");
    cfg.scenarios = cfg_field<int>(j, "scenarios", "scenarios");
    if (cfg.scenarios < 2) {
        throw ConfigError("config: scenarios must be >= 2 (confidence intervals are undefined "
                          "for a single scenario)");
    }
    if (cfg.budget < 0.0 || cfg.horizon_days < 0 || cfg.technician_pool < 0) {
        throw ConfigError("config: budget, horizon_days and technicians must be >= 0");
    }

    std::string filter = cfg_field_or<std::string>(j, "candidate_filter", "candidate_filter",
                                                   "all");
    if (filter == "all") {
        cfg.candidate_filter = CandidateFilter::All;
    } else if (filter == "source_adjacent") {
        cfg.candidate_filter = CandidateFilter::SourceAdjacent;
    } else {
        throw ConfigError("config: candidate_filter must be 'all' or 'source_adjacent'");
    }

    const json& econ = cfg_field<json>(j, "econ", "econ");
    cfg.econ.cost_per_kwh = cfg_field<double>(econ, "cost_per_kwh", "econ.cost_per_kwh");
    cfg.econ.value_of_lost_load =
        cfg_field<double>(econ, "value_of_lost_load_per_kwh", "econ.value_of_lost_load_per_kwh");
    cfg.econ.discount_rate = cfg_field<double>(econ, "discount_rate", "econ.discount_rate");
    cfg.econ.npv_horizon_years =
        cfg_field<int>(econ, "npv_horizon_years", "econ.npv_horizon_years");
    cfg.econ.om_fraction = cfg_field_or<double>(econ, "om_fraction", "econ.om_fraction", 0.10);
    cfg.econ.asset_lifetime_years =
        cfg_field_or<double>(econ, "asset_lifetime_years", "econ.asset_lifetime_years", 40.0);
    cfg.econ.validate();

    const json& outage = cfg_field<json>(j, "npv_outage", "npv_outage");
    try {
        cfg.npv_outage.date = parse_time(cfg_field<std::string>(outage, "date", "npv_outage.date"));
    } catch (const ParseError& e) {
        throw ConfigError(std::string("config: npv_outage.date: ") + e.what());
    }
    cfg.npv_outage.duration_h =
        cfg_field<double>(outage, "duration_hours", "npv_outage.duration_hours");

    const json& w = cfg_field<json>(j, "weather", "weather");
    cfg.weather.base_rate_per_hour =
        cfg_field<double>(w, "base_rate_per_hour", "weather.base_rate_per_hour");
    const json& seasonal = cfg_field<json>(w, "seasonal", "weather.seasonal");
    cfg.weather.seasonal[0] = cfg_field<double>(seasonal, "winter", "weather.seasonal.winter");
    cfg.weather.seasonal[1] = cfg_field<double>(seasonal, "spring", "weather.seasonal.spring");
    cfg.weather.seasonal[2] = cfg_field<double>(seasonal, "summer", "weather.seasonal.summer");
    cfg.weather.seasonal[3] = cfg_field<double>(seasonal, "fall", "weather.seasonal.fall");
    const json& hourly = cfg_field<json>(w, "hourly", "weather.hourly");
    cfg.weather.hourly[0] = cfg_field<double>(hourly, "night", "weather.hourly.night");
    cfg.weather.hourly[1] = cfg_field<double>(hourly, "morning", "weather.hourly.morning");
    cfg.weather.hourly[2] = cfg_field<double>(hourly, "afternoon", "weather.hourly.afternoon");
    cfg.weather.hourly[3] = cfg_field<double>(hourly, "evening", "weather.hourly.evening");
    auto radius = cfg_field<std::vector<double>>(w, "radius_km", "weather.radius_km");
    auto duration = cfg_field<std::vector<double>>(w, "duration_hours", "weather.duration_hours");
    if (radius.size() != 2 || duration.size() != 2) {
        throw ConfigError("config: weather.radius_km and weather.duration_hours must be "
                          "[min, max] pairs");
    }
    cfg.weather.radius_min_km = radius[0];
    cfg.weather.radius_max_km = radius[1];
    cfg.weather.duration_min_h = duration[0];
    cfg.weather.duration_max_h = duration[1];
    const json& op = cfg_field<json>(w, "outage_probability", "weather.outage_probability");
    cfg.weather.outage_prob_overhead =
        cfg_field<double>(op, "overhead", "weather.outage_probability.overhead");
    cfg.weather.outage_prob_underground =
        cfg_field<double>(op, "underground", "weather.outage_probability.underground");
    const json& rep = cfg_field<json>(w, "repair_days_per_km", "weather.repair_days_per_km");
    cfg.weather.repair_days_per_km_overhead =
        cfg_field<double>(rep, "overhead", "weather.repair_days_per_km.overhead");
    cfg.weather.repair_days_per_km_underground =
        cfg_field<double>(rep, "underground", "weather.repair_days_per_km.underground");
    try {
        cfg.weather.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("config: weather: ") + e.what());
    }

    const json& ga = cfg_field<json>(j, "ga", "ga");
    cfg.ga.population_size = cfg_field<int>(ga, "population_size", "ga.population_size");
    cfg.ga.generations = cfg_field<int>(ga, "generations", "ga.generations");
    cfg.ga.mc_runs = cfg_field<int>(ga, "mc_runs", "ga.mc_runs");
    cfg.ga.crossover_prob =
        cfg_field_or<double>(ga, "crossover_prob", "ga.crossover_prob", 0.9);
    cfg.ga.mutation_prob = cfg_field_or<double>(ga, "mutation_prob", "ga.mutation_prob", -1.0);
    cfg.ga.master_seed = cfg.master_seed;
    try {
        cfg.ga.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    // Canonical resolved document: what the manifest embeds.
    json canon = j;
    canon["paths"]["network"] = cfg.network_path;
    canon["paths"]["catalog"] = cfg.catalog_path;
    canon["paths"]["timeseries"] = cfg.timeseries_path;
    cfg.canonical = std::move(canon);
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    json j = [&] {
        try {
            return detail::read_json_file(path);
        } catch (const ParseError& e) {
            throw ConfigError(e.what());
        }
    }();
    std::string base_dir = std::filesystem::path(path).parent_path().string();
    if (base_dir.empty()) {
        base_dir = ".";
    }
    RunConfig cfg = run_config_from_json(j, base_dir);
    for (const auto& p : {cfg.network_path, cfg.catalog_path, cfg.timeseries_path}) {
        if (!std::filesystem::exists(p)) {
            throw ConfigError("config: referenced file does not exist: " + p);
        }
    }
    return cfg;
}

} // namespace gridres
