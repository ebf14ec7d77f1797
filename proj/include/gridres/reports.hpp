#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridres/investments.hpp"
#include "gridres/metrics.hpp"
#include "gridres/npv.hpp"
#include "gridres/nsga2.hpp"

namespace gridres {

constexpr const char* kVersion = "0.1.0";

/// Deterministic number formatting for report files.
inline std::string fmt_g(double v) { return strf("%.10g", v); }

inline void write_text_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write file: " + path);
    }
    out << content;
}

inline void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// KPI tables
// ---------------------------------------------------------------------------

struct KpiRowSpec {
    const char* name;
    const char* label;
    const char* unit;
};

/// The four weather-varying metrics followed by the eight metrics fixed
/// across scenarios, with the units used in the report tables.
inline const std::vector<KpiRowSpec>& kpi_row_specs() {
    static const std::vector<KpiRowSpec> rows = {
        {"cost_unserved_usd", "Cost of total unserved energy", "$"},
        {"saidi_med_min", "SAIDI-MED", "min"},
        {"saifi_med", "SAIFI-MED", ""},
        {"caidi_med_min", "CAIDI-MED", "min"},
        {"portfolio_cost_usd", "Total investment portfolio cost", "$"},
        {"n_investments", "Total number of investments", "count"},
        {"days_to_complete", "Total days to complete work", "days"},
        {"cost_resistive_losses_usd", "Cost of total resistive losses", "$"},
        {"plant_value_growth_usd", "Growth in plant value", "$"},
        {"avg_capacity_headroom_pct", "Average capacity headroom", "%"},
        {"pct_time_over_capacity", "Duration above capacity limit", "%"},
        {"pct_time_voltage_deviation", "Duration of voltage deviation", "%"},
    };
    return rows;
}

/// Metrics that do not vary with the weather draw. The simulation-derived
/// ones (losses cost, headroom, deviation shares) are reported as scenario
/// means, matching the single-number presentation of the result tables.
struct FixedKpis {
    double portfolio_cost = 0.0;
    int n_investments = 0;
    int days_to_complete = 0;
    double cost_resistive_losses = 0.0;
    double plant_value_growth = 0.0;
    double avg_capacity_headroom = 0.0;
    double pct_time_over_capacity = 0.0;
    double pct_time_voltage_deviation = 0.0;
};

inline FixedKpis fixed_kpis_from_reports(const std::vector<KpiReport>& reports,
                                         double portfolio_cost, int n_investments,
                                         int days_to_complete) {
    FixedKpis f;
    f.portfolio_cost = portfolio_cost;
    f.n_investments = n_investments;
    f.days_to_complete = days_to_complete;
    const double n = static_cast<double>(reports.size());
    for (const auto& r : reports) {
        f.cost_resistive_losses += r.cost_resistive_losses / n;
        f.plant_value_growth += r.plant_value_growth / n;
        f.avg_capacity_headroom += r.avg_capacity_headroom / n;
        f.pct_time_over_capacity += r.pct_time_over_capacity / n;
        f.pct_time_voltage_deviation += r.pct_time_voltage_deviation / n;
    }
    return f;
}

inline std::string fixed_kpi_value(const FixedKpis& f, const std::string& name) {
    if (name == "portfolio_cost_usd") {
        return fmt_g(f.portfolio_cost);
    }
    if (name == "n_investments") {
        return strf("%d", f.n_investments);
    }
    if (name == "days_to_complete") {
        return strf("%d", f.days_to_complete);
    }
    if (name == "cost_resistive_losses_usd") {
        return fmt_g(f.cost_resistive_losses);
    }
    if (name == "plant_value_growth_usd") {
        return fmt_g(f.plant_value_growth);
    }
    if (name == "avg_capacity_headroom_pct") {
        return fmt_g(f.avg_capacity_headroom);
    }
    if (name == "pct_time_over_capacity") {
        return fmt_g(f.pct_time_over_capacity);
    }
    if (name == "pct_time_voltage_deviation") {
        return fmt_g(f.pct_time_voltage_deviation);
    }
    throw Error("unknown fixed KPI: " + name);
}

inline std::string summary_csv_cells(const SummaryStats* st) {
    if (st == nullptr) {
        return ",,,,,";
    }
    return fmt_g(st->median) + "," + fmt_g(st->iqr) + "," + fmt_g(st->mean) + "," +
           fmt_g(st->ci_low) + "," + fmt_g(st->ci_high) + "," + strf("%zu", st->n);
}

inline std::string kpis_csv(const std::map<std::string, SummaryStats>& varying,
                            const FixedKpis& fixed) {
    std::string csv = "metric,label,unit,kind,median,iqr,mean,ci_low,ci_high,n,value\n";
    for (const auto& row : kpi_row_specs()) {
        std::string name = row.name;
        bool is_varying = name == "cost_unserved_usd" || name == "saidi_med_min" ||
                          name == "saifi_med" || name == "caidi_med_min";
        csv += name;
        csv += ",\"";
        csv += row.label;
        csv += "\",";
        csv += row.unit;
        if (is_varying) {
            auto it = varying.find(name);
            csv += ",varying,";
            csv += summary_csv_cells(it == varying.end() ? nullptr : &it->second);
            csv += ",";
        } else {
            csv += ",fixed,,,,,,,";
            csv += fixed_kpi_value(fixed, name);
        }
        csv += "\n";
    }
    return csv;
}

inline json summary_to_json(const SummaryStats& st) {
    return json{{"median", st.median}, {"iqr", st.iqr},         {"mean", st.mean},
                {"ci_low", st.ci_low}, {"ci_high", st.ci_high}, {"n", st.n}};
}

inline json kpis_json(const std::map<std::string, SummaryStats>& varying,
                      const FixedKpis& fixed,
                      const std::map<std::string, SummaryStats>& by_subnet) {
    json j;
    j["varying"] = json::object();
    for (const auto& [name, st] : varying) {
        j["varying"][name] = summary_to_json(st);
    }
    j["fixed"] = {{"portfolio_cost_usd", fixed.portfolio_cost},
                  {"n_investments", fixed.n_investments},
                  {"days_to_complete", fixed.days_to_complete},
                  {"cost_resistive_losses_usd", fixed.cost_resistive_losses},
                  {"plant_value_growth_usd", fixed.plant_value_growth},
                  {"avg_capacity_headroom_pct", fixed.avg_capacity_headroom},
                  {"pct_time_over_capacity", fixed.pct_time_over_capacity},
                  {"pct_time_voltage_deviation", fixed.pct_time_voltage_deviation}};
    j["unserved_cost_by_subnet"] = json::object();
    for (const auto& [subnet, st] : by_subnet) {
        j["unserved_cost_by_subnet"][subnet] = summary_to_json(st);
    }
    return j;
}

inline std::string subnet_csv(const std::map<std::string, SummaryStats>& by_subnet) {
    std::string csv = "subnet,metric,median,iqr,mean,ci_low,ci_high,n\n";
    for (const auto& [subnet, st] : by_subnet) {
        csv += subnet + ",cost_unserved_usd," + summary_csv_cells(&st) + "\n";
    }
    return csv;
}

// ---------------------------------------------------------------------------
// Portfolio and schedule files
// ---------------------------------------------------------------------------

/// Fingerprint of the candidate enumeration; lets `compare` detect portfolio
/// files produced against a different network or catalog.
inline std::string candidates_fingerprint(const CandidateSet& set) {
    std::string blob;
    for (const auto& inv : set.investments) {
        blob += strf("%d|%s|%d|%s|%.6f|%d|%d;", inv.id, to_string(inv.kind), inv.line_id,
                     inv.new_conductor.name.c_str(), inv.capital_cost, inv.work_days,
                     inv.technicians_required);
    }
    return strf("%016llx", static_cast<unsigned long long>(fnv1a64(blob)));
}

inline json portfolio_to_json(const Portfolio& portfolio, const CandidateSet& candidates,
                              const std::string& method, const std::vector<int>& order,
                              int days_to_complete) {
    json j;
    j["method"] = method;
    j["total_cost"] = portfolio.total_cost;
    j["days_to_complete"] = days_to_complete;
    j["candidates_fingerprint"] = candidates_fingerprint(candidates);
    j["investments"] = json::array();
    for (int id : order) {
        const Investment& inv = candidates.by_id(id);
        j["investments"].push_back({{"id", inv.id},
                                    {"kind", to_string(inv.kind)},
                                    {"line_id", inv.line_id},
                                    {"conductor", inv.new_conductor.name},
                                    {"cost", inv.capital_cost},
                                    {"work_days", inv.work_days},
                                    {"technicians", inv.technicians_required}});
    }
    if (portfolio.evaluated) {
        j["objectives"] = {{"mean_unserved_mwh", portfolio.mean_unserved_mwh},
                           {"mean_losses_mwh", portfolio.mean_losses_mwh}};
    }
    return j;
}

struct PortfolioFile {
    Portfolio portfolio;
    std::vector<int> order; // investments in file order (ranking/schedule order)
    std::string method;
    std::optional<int> days_to_complete;
};

inline PortfolioFile read_portfolio(const std::string& path, const CandidateSet& candidates) {
    json j = detail::read_json_file(path);
    PortfolioFile pf;
    pf.method = detail::get_field_or<std::string>(j, "method", "unknown");
    if (j.contains("days_to_complete")) {
        pf.days_to_complete = j.at("days_to_complete").get<int>();
    }
    if (j.contains("candidates_fingerprint")) {
        std::string fp = j.at("candidates_fingerprint").get<std::string>();
        if (fp != candidates_fingerprint(candidates)) {
            throw ConfigError(path + ": portfolio was built against a different candidate set "
                                     "(network, catalog or filter changed)");
        }
    }
    for (const auto& ji : detail::get_field<json>(j, "investments", path)) {
        int id = detail::get_field<int>(ji, "id", path);
        const Investment& inv = candidates.by_id(id); // validates the id
        if (ji.contains("line_id") && ji.at("line_id").get<int>() != inv.line_id) {
            throw ConfigError(strf("%s: investment %d targets line %d here but line %d in the "
                                   "candidate set",
                                   path.c_str(), id, ji.at("line_id").get<int>(), inv.line_id));
        }
        pf.order.push_back(id);
    }
    pf.portfolio.investment_ids = pf.order;
    std::sort(pf.portfolio.investment_ids.begin(), pf.portfolio.investment_ids.end());
    pf.portfolio.total_cost = candidates.cost_of(pf.order);
    return pf;
}

/// Gantt-style schedule export: one row per project per active day.
inline std::string schedule_csv(const CrewSchedule& sched, const CandidateSet& candidates) {
    std::string csv = "investment_id,line_id,kind,day,technicians\n";
    for (const auto& p : sched.projects) {
        const Investment& inv = candidates.by_id(p.investment_id);
        for (int d : p.active_days) {
            csv += strf("%d,%d,%s,%d,%d\n", inv.id, inv.line_id, to_string(inv.kind), d,
                        p.technicians);
        }
    }
    return csv;
}

inline std::string assessments_csv(const std::vector<NpvAssessment>& assessments,
                                   const CandidateSet& candidates) {
    std::string csv = "investment_id,line_id,kind,annual_benefit_usd,annual_om_cost_usd,npv_usd,"
                      "included,reason\n";
    for (const auto& a : assessments) {
        const Investment& inv = candidates.by_id(a.investment_id);
        csv += strf("%d,%d,%s,%s,%s,%s,%s,\"%s\"\n", inv.id, inv.line_id, to_string(inv.kind),
                    fmt_g(a.annual_benefit).c_str(), fmt_g(a.annual_om_cost).c_str(),
                    fmt_g(a.npv).c_str(), a.included ? "true" : "false",
                    a.exclusion_reason.c_str());
    }
    return csv;
}

inline std::string candidates_csv(const CandidateSet& set) {
    std::string csv = "id,line_id,kind,conductor,cost_usd,work_days,technicians\n";
    for (const auto& inv : set.investments) {
        csv += strf("%d,%d,%s,\"%s\",%s,%d,%d\n", inv.id, inv.line_id, to_string(inv.kind),
                    inv.new_conductor.name.c_str(), fmt_g(inv.capital_cost).c_str(),
                    inv.work_days, inv.technicians_required);
    }
    return csv;
}

inline json pareto_json(const GaResult& ga) {
    json j;
    j["archive"] = json::array();
    for (const auto& e : ga.archive) {
        j["archive"].push_back({{"genome", genome_key(e.genome)},
                                {"unserved_mwh", e.eval.unserved_mwh},
                                {"losses_mwh", e.eval.losses_mwh},
                                {"cost", e.eval.portfolio_cost},
                                {"penalty", e.eval.penalty}});
    }
    return j;
}

inline std::string generations_csv(const GaResult& ga) {
    std::string csv =
        "generation,genome,unserved_mwh,losses_mwh,penalty,feasible,cost,archive_hypervolume\n";
    for (const auto& st : ga.history) {
        for (const auto& e : st.front) {
            csv += strf("%d,%s,%s,%s,%s,%s,%s,%s\n", st.generation,
                        genome_key(e.genome).c_str(), fmt_g(e.eval.unserved_mwh).c_str(),
                        fmt_g(e.eval.losses_mwh).c_str(), fmt_g(e.eval.penalty).c_str(),
                        e.eval.feasible ? "true" : "false", fmt_g(e.eval.portfolio_cost).c_str(),
                        fmt_g(st.archive_hypervolume).c_str());
        }
    }
    return csv;
}

// ---------------------------------------------------------------------------
// Comparison report
// ---------------------------------------------------------------------------

inline std::string comparison_csv(const std::map<std::string, SummaryStats>& varying_a,
                                  const FixedKpis& fixed_a,
                                  const std::map<std::string, SummaryStats>& varying_b,
                                  const FixedKpis& fixed_b, const std::string& label_a,
                                  const std::string& label_b) {
    std::string csv = "metric,label,unit,kind";
    for (const std::string& side : {label_a, label_b}) {
        csv += "," + side + "_median," + side + "_iqr," + side + "_mean," + side + "_ci_low," +
               side + "_ci_high," + side + "_n," + side + "_value";
    }
    csv += "\n";
    for (const auto& row : kpi_row_specs()) {
        std::string name = row.name;
        bool is_varying = name == "cost_unserved_usd" || name == "saidi_med_min" ||
                          name == "saifi_med" || name == "caidi_med_min";
        csv += name + ",\"" + row.label + "\"," + row.unit + "," +
               (is_varying ? "varying" : "fixed");
        auto emit_side = [&](const std::map<std::string, SummaryStats>& varying,
                             const FixedKpis& fixed) {
            if (is_varying) {
                auto it = varying.find(name);
                csv += "," + summary_csv_cells(it == varying.end() ? nullptr : &it->second) + ",";
            } else {
                csv += ",,,,,,," + fixed_kpi_value(fixed, name);
            }
        };
        emit_side(varying_a, fixed_a);
        emit_side(varying_b, fixed_b);
        csv += "\n";
    }
    return csv;
}

inline std::string comparison_subnet_csv(const std::map<std::string, SummaryStats>& a,
                                         const std::map<std::string, SummaryStats>& b,
                                         const std::string& label_a,
                                         const std::string& label_b) {
    std::string csv = "subnet,portfolio,metric,median,iqr,mean,ci_low,ci_high,n\n";
    for (const auto& [subnet, st] : a) {
        csv += subnet + "," + label_a + ",cost_unserved_usd," + summary_csv_cells(&st) + "\n";
    }
    for (const auto& [subnet, st] : b) {
        csv += subnet + "," + label_b + ",cost_unserved_usd," + summary_csv_cells(&st) + "\n";
    }
    return csv;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

/// Every command writes a manifest capturing the resolved configuration, the
/// seed and the command line equivalents. Re-running the command in the
/// manifest reproduces every output byte for byte; nothing time- or
/// host-dependent is recorded.
inline json make_manifest(const std::string& command, const json& canonical_config,
                          std::uint64_t seed, const json& args) {
    json j;
    j["version"] = kVersion;
    j["command"] = command;
    j["seed"] = seed;
    j["config_hash"] = strf("%016llx", static_cast<unsigned long long>(
                                           fnv1a64(canonical_config.dump())));
    j["config"] = canonical_config;
    j["args"] = args;
    return j;
}

} // namespace gridres
