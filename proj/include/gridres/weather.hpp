#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "gridres/grid_model.hpp"
#include "gridres/random.hpp"
#include "gridres/time_util.hpp"

namespace gridres {

enum class Season { Winter, Spring, Summer, Fall };
enum class DayPart { Night, Morning, Afternoon, Evening };

/// Dec-Feb winter, Mar-May spring, Jun-Aug summer, Sep-Nov fall.
constexpr Season season_of_month(int month) {
    if (month == 12 || month <= 2) {
        return Season::Winter;
    }
    if (month <= 5) {
        return Season::Spring;
    }
    if (month <= 8) {
        return Season::Summer;
    }
    return Season::Fall;
}

/// Night 00-06, morning 06-12, afternoon 12-18, evening 18-24.
constexpr DayPart day_part_of_hour(int hour) {
    if (hour < 6) {
        return DayPart::Night;
    }
    if (hour < 12) {
        return DayPart::Morning;
    }
    if (hour < 18) {
        return DayPart::Afternoon;
    }
    return DayPart::Evening;
}

struct WeatherConfig {
    double base_rate_per_hour = 0.0;
    double seasonal[4] = {1.0, 1.0, 1.0, 1.0}; // winter, spring, summer, fall
    double hourly[4] = {1.0, 1.0, 1.0, 1.0};   // night, morning, afternoon, evening
    double radius_min_km = 0.0;
    double radius_max_km = 0.0;
    double duration_min_h = 0.0;
    double duration_max_h = 0.0;
    double outage_prob_overhead = 0.0;
    double outage_prob_underground = 0.0;
    double repair_days_per_km_overhead = 0.0;
    double repair_days_per_km_underground = 0.0;

    double seasonal_multiplier(Season s) const { return seasonal[static_cast<int>(s)]; }
    double hourly_multiplier(DayPart p) const { return hourly[static_cast<int>(p)]; }

    void validate() const {
        auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!in01(base_rate_per_hour) || !in01(outage_prob_overhead) ||
            !in01(outage_prob_underground)) {
            throw ConfigError("weather rates and outage probabilities must be in [0, 1]");
        }
        for (double mult : seasonal) {
            if (mult <= 0.0) {
                throw ConfigError("weather seasonal multipliers must be > 0");
            }
        }
        for (double mult : hourly) {
            if (mult <= 0.0) {
                throw ConfigError("weather hourly multipliers must be > 0");
            }
        }
        if (base_rate_per_hour > 0.0) {
            if (!(radius_min_km < radius_max_km)) {
                throw ConfigError("weather radius range must satisfy r_min < r_max");
            }
            if (!(duration_min_h < duration_max_h)) {
                throw ConfigError("weather duration range must satisfy d_min < d_max");
            }
        }
        if (repair_days_per_km_overhead < 0.0 || repair_days_per_km_underground < 0.0) {
            throw ConfigError("repair days per km must be >= 0");
        }
    }
};

struct LineOutage {
    int line_id = 0;
    TimePoint repair_complete = 0;
};

struct WeatherEvent {
    int id = 0;
    double center_x_km = 0.0;
    double center_y_km = 0.0;
    double radius_km = 0.0;
    TimePoint start = 0;
    double duration_h = 0.0;
    std::vector<LineOutage> outages;

    TimePoint end() const {
        return start + static_cast<TimePoint>(std::llround(duration_h * 3600.0));
    }
};

/// Event intensity for the step at t: base rate scaled by season and time of
/// day, times the step length in hours.
inline double event_rate(const WeatherConfig& cfg, TimePoint t, double interval_hours) {
    CivilDateTime c = to_civil(t);
    return cfg.base_rate_per_hour * cfg.seasonal_multiplier(season_of_month(c.month)) *
           cfg.hourly_multiplier(day_part_of_hour(c.hour)) * interval_hours;
}

/// Poisson event count for one step. Any count >= 1 triggers exactly one
/// event at this step.
inline int event_count(Rng& rng, TimePoint t, const WeatherConfig& cfg,
                       double interval_hours = 0.25) {
    return rng.poisson(event_rate(cfg, t, interval_hours));
}

/// Samples event geometry: center uniform over the network bounds, radius and
/// duration uniform over their configured ranges. The outage list starts
/// empty and is filled by sample_line_outages.
inline WeatherEvent sample_event(Rng& rng, const WeatherConfig& cfg, const GeoBounds& bounds,
                                 TimePoint t) {
    WeatherEvent ev;
    ev.center_x_km = rng.uniform(bounds.x_min, bounds.x_max);
    ev.center_y_km = rng.uniform(bounds.y_min, bounds.y_max);
    ev.radius_km = rng.uniform(cfg.radius_min_km, cfg.radius_max_km);
    ev.duration_h = rng.uniform(cfg.duration_min_h, cfg.duration_max_h);
    ev.start = t;
    return ev;
}

/// Minimum distance from point (px,py) to segment (ax,ay)-(bx,by).
inline double point_segment_distance(double px, double py, double ax, double ay, double bx,
                                     double by) {
    double dx = bx - ax, dy = by - ay;
    double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) {
        t = std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0);
    }
    double cx = ax + t * dx - px;
    double cy = ay + t * dy - py;
    return std::sqrt(cx * cx + cy * cy);
}

/// Line indices (network positions) whose straight from-to segment comes
/// within the event radius of the center. Purely geometric; callers restrict
/// to in-service lines before sampling outages.
inline std::vector<int> lines_in_impact_area(const Network& net, const WeatherEvent& ev) {
    std::vector<int> hit;
    for (size_t i = 0; i < net.lines.size(); ++i) {
        const Line& ln = net.lines[i];
        const Bus& a = net.buses[net.bus_index(ln.from_bus)];
        const Bus& b = net.buses[net.bus_index(ln.to_bus)];
        double d = point_segment_distance(ev.center_x_km, ev.center_y_km, a.x_km, a.y_km,
                                          b.x_km, b.y_km);
        if (d <= ev.radius_km) {
            hit.push_back(static_cast<int>(i));
        }
    }
    return hit;
}

/// Repair time after the event ends, linear in line length with a per-type
/// rate.
inline double repair_time_hours(const Line& line, const WeatherConfig& cfg) {
    double days_per_km = line.conductor.overhead ? cfg.repair_days_per_km_overhead
                                                 : cfg.repair_days_per_km_underground;
    return line.length_km * days_per_km * 24.0;
}

/// Independently fails each candidate line with its type's outage
/// probability. A failed line stays out until the event is over and its
/// repair time has elapsed. Candidates must be given in a deterministic
/// order; one uniform draw is consumed per candidate.
inline std::vector<LineOutage> sample_line_outages(Rng& rng,
                                                   const std::vector<int>& candidate_lines,
                                                   const Network& net, const WeatherConfig& cfg,
                                                   const WeatherEvent& ev) {
    std::vector<LineOutage> out;
    for (int idx : candidate_lines) {
        const Line& ln = net.lines[idx];
        double p = ln.conductor.overhead ? cfg.outage_prob_overhead : cfg.outage_prob_underground;
        if (rng.bernoulli(p)) {
            LineOutage o;
            o.line_id = ln.id;
            o.repair_complete =
                ev.end() +
                static_cast<TimePoint>(std::llround(repair_time_hours(ln, cfg) * 3600.0));
            out.push_back(o);
        }
    }
    return out;
}

} // namespace gridres
