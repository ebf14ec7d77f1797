#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "gridres/common.hpp"
#include "gridres/time_util.hpp"

namespace gridres {

using json = nlohmann::json;

/// A conductor or cable product from the catalog. The per-operation install
/// costs double as availability markers: a zero upgrade (underground) cost
/// means the product is not offered for re-conductoring (burying).
/// work_days_per_km / technicians_required describe the upgrade operation;
/// the bury_* fields override them for undergrounding jobs, since trenching
/// the same cable needs a different crew than pulling it through a duct.
struct ConductorType {
    std::string name;
    double r_per_km = 0.0;  // ohm/km
    double x_per_km = 0.0;  // ohm/km
    double max_current = 0.0; // kA
    bool overhead = false;
    double upgrade_cost_per_km = 0.0;     // $/km, 0 = not offered as upgrade
    double underground_cost_per_km = 0.0; // $/km, 0 = not offered for burying
    double replacement_cost_per_km = 0.0; // $/km, depreciation basis
    double work_days_per_km = 0.0;
    int technicians_required = 0;
    double bury_work_days_per_km = 0.0;  // defaults to work_days_per_km
    int bury_technicians_required = 0;   // defaults to technicians_required
};

using Catalog = std::vector<ConductorType>;

struct Bus {
    int id = 0;
    double nominal_kv = 0.0;
    double x_km = 0.0;
    double y_km = 0.0;
    std::string subnet;
};

struct Line {
    int id = 0;
    int from_bus = 0;
    int to_bus = 0;
    double length_km = 0.0;
    ConductorType conductor;
    bool in_service = true;
};

/// Two-winding transformer as a branch with per-unit impedance on the
/// system base and a fixed (untapped) ratio.
struct TransformerBranch {
    int id = 0;
    int from_bus = 0; // HV side
    int to_bus = 0;   // LV side
    double r_pu = 0.0;
    double x_pu = 0.0;
    double ratio = 1.0;
};

struct Load {
    int id = 0;
    int bus = 0;
    std::string profile_id;
};

struct Generator {
    int id = 0;
    int bus = 0;
    std::string profile_id;        // empty for the external-grid connection
    bool is_slack_connection = false;
    double rated_mw = 0.0;
};

struct GeoBounds {
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;

    bool contains(double x, double y) const {
        return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
    }
};

/// Immutable network model. Mutation (investments) returns new values, so a
/// Network is safe to share across concurrently running scenarios.
struct Network {
    std::string name;
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<TransformerBranch> transformers;
    std::vector<Load> loads;
    std::vector<Generator> generators;
    GeoBounds bounds;

    // --- derived indices, rebuilt by finalize() ---
    std::unordered_map<int, int> bus_pos;
    std::unordered_map<int, int> line_pos;
    int slack_generator_index = -1;

    int bus_index(int bus_id) const {
        auto it = bus_pos.find(bus_id);
        if (it == bus_pos.end()) {
            throw Error(strf("unknown bus id %d", bus_id));
        }
        return it->second;
    }

    int line_index(int line_id) const {
        auto it = line_pos.find(line_id);
        if (it == line_pos.end()) {
            throw Error(strf("unknown line id %d", line_id));
        }
        return it->second;
    }

    int slack_bus_index() const { return bus_index(generators[slack_generator_index].bus); }

    std::set<std::string> subnet_labels() const {
        std::set<std::string> labels;
        for (const auto& b : buses) {
            labels.insert(b.subnet);
        }
        return labels;
    }

    /// Rebuilds the id maps and checks the structural invariants. Throws
    /// ParseError describing the first violation found.
    void finalize() {
        bus_pos.clear();
        line_pos.clear();
        for (size_t i = 0; i < buses.size(); ++i) {
            if (!bus_pos.emplace(buses[i].id, static_cast<int>(i)).second) {
                throw ParseError(strf("duplicate bus id %d", buses[i].id));
            }
            if (buses[i].nominal_kv <= 0.0) {
                throw ParseError(strf("bus %d: nominal voltage must be > 0", buses[i].id));
            }
        }
        for (size_t i = 0; i < lines.size(); ++i) {
            const Line& ln = lines[i];
            if (!line_pos.emplace(ln.id, static_cast<int>(i)).second) {
                throw ParseError(strf("duplicate line id %d", ln.id));
            }
            if (ln.from_bus == ln.to_bus) {
                throw ParseError(strf("line %d: from_bus equals to_bus", ln.id));
            }
            if (ln.length_km <= 0.0) {
                throw ParseError(strf("line %d: length must be > 0", ln.id));
            }
            bus_index(ln.from_bus);
            bus_index(ln.to_bus);
        }
        std::set<int> trafo_ids;
        for (const auto& tr : transformers) {
            if (!trafo_ids.insert(tr.id).second) {
                throw ParseError(strf("duplicate transformer id %d", tr.id));
            }
            bus_index(tr.from_bus);
            bus_index(tr.to_bus);
        }
        std::set<int> load_ids;
        for (const auto& ld : loads) {
            if (!load_ids.insert(ld.id).second) {
                throw ParseError(strf("duplicate load id %d", ld.id));
            }
            bus_index(ld.bus);
        }
        slack_generator_index = -1;
        std::set<int> gen_ids;
        for (size_t i = 0; i < generators.size(); ++i) {
            if (!gen_ids.insert(generators[i].id).second) {
                throw ParseError(strf("duplicate generator id %d", generators[i].id));
            }
            bus_index(generators[i].bus);
            if (generators[i].is_slack_connection) {
                if (slack_generator_index >= 0) {
                    throw ParseError("more than one external-grid slack connection");
                }
                slack_generator_index = static_cast<int>(i);
            }
        }
        if (slack_generator_index < 0) {
            throw ParseError("no external-grid slack connection flagged");
        }
        for (const auto& b : buses) {
            if (!bounds.contains(b.x_km, b.y_km)) {
                throw ParseError(
                    strf("bus %d at (%.4f, %.4f) lies outside the geographic bounds", b.id,
                         b.x_km, b.y_km));
            }
        }
        check_connected();
    }

  private:
    void check_connected() const {
        if (buses.empty()) {
            throw ParseError("network has no buses");
        }
        std::vector<char> seen(buses.size(), 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        std::vector<std::vector<int>> adj(buses.size());
        for (const auto& ln : lines) {
            if (!ln.in_service) {
                continue;
            }
            int a = bus_index(ln.from_bus);
            int b = bus_index(ln.to_bus);
            adj[a].push_back(b);
            adj[b].push_back(a);
        }
        for (const auto& tr : transformers) {
            int a = bus_index(tr.from_bus);
            int b = bus_index(tr.to_bus);
            adj[a].push_back(b);
            adj[b].push_back(a);
        }
        size_t count = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v : adj[u]) {
                if (!seen[v]) {
                    seen[v] = 1;
                    ++count;
                    stack.push_back(v);
                }
            }
        }
        if (count != buses.size()) {
            throw ParseError(strf("network graph is disconnected (%zu of %zu buses reachable)",
                                  count, buses.size()));
        }
    }
};

// ---------------------------------------------------------------------------
// Catalog and network file I/O
// ---------------------------------------------------------------------------

namespace detail {

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open file: " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return j;
}

template <typename T>
T get_field(const json& j, const std::string& key, const std::string& context) {
    if (!j.contains(key)) {
        throw ParseError(context + ": missing field '" + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(context + ": field '" + key + "': " + e.what());
    }
}

template <typename T>
T get_field_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    return j.at(key).get<T>();
}

} // namespace detail

inline ConductorType conductor_from_json(const json& j, const std::string& context) {
    ConductorType c;
    c.name = detail::get_field<std::string>(j, "name", context);
    c.r_per_km = detail::get_field<double>(j, "r_ohm_per_km", context);
    c.x_per_km = detail::get_field<double>(j, "x_ohm_per_km", context);
    c.max_current = detail::get_field<double>(j, "max_i_ka", context);
    c.overhead = detail::get_field<bool>(j, "overhead", context);
    c.upgrade_cost_per_km = detail::get_field_or<double>(j, "upgrade_cost_per_km", 0.0);
    c.underground_cost_per_km = detail::get_field_or<double>(j, "underground_cost_per_km", 0.0);
    c.replacement_cost_per_km = detail::get_field_or<double>(j, "replacement_cost_per_km", 0.0);
    c.work_days_per_km = detail::get_field_or<double>(j, "work_days_per_km", 0.0);
    c.technicians_required = detail::get_field_or<int>(j, "technicians_required", 0);
    c.bury_work_days_per_km =
        detail::get_field_or<double>(j, "bury_work_days_per_km", c.work_days_per_km);
    c.bury_technicians_required =
        detail::get_field_or<int>(j, "bury_technicians_required", c.technicians_required);
    if (c.r_per_km <= 0.0) {
        throw ParseError(context + ": r_ohm_per_km must be > 0 for '" + c.name + "'");
    }
    if (c.max_current <= 0.0) {
        throw ParseError(context + ": max_i_ka must be > 0 for '" + c.name + "'");
    }
    if (c.upgrade_cost_per_km < 0.0 || c.underground_cost_per_km < 0.0 ||
        c.replacement_cost_per_km < 0.0) {
        throw ParseError(context + ": costs must be >= 0 for '" + c.name + "'");
    }
    return c;
}

inline json conductor_to_json(const ConductorType& c) {
    json j;
    j["name"] = c.name;
    j["r_ohm_per_km"] = c.r_per_km;
    j["x_ohm_per_km"] = c.x_per_km;
    j["max_i_ka"] = c.max_current;
    j["overhead"] = c.overhead;
    j["upgrade_cost_per_km"] = c.upgrade_cost_per_km;
    j["underground_cost_per_km"] = c.underground_cost_per_km;
    j["replacement_cost_per_km"] = c.replacement_cost_per_km;
    j["work_days_per_km"] = c.work_days_per_km;
    j["technicians_required"] = c.technicians_required;
    j["bury_work_days_per_km"] = c.bury_work_days_per_km;
    j["bury_technicians_required"] = c.bury_technicians_required;
    return j;
}

inline Catalog load_catalog(const std::string& path) {
    json j = detail::read_json_file(path);
    if (!j.is_array()) {
        throw ParseError(path + ": catalog must be a JSON array of conductor records");
    }
    Catalog cat;
    std::set<std::string> names;
    for (size_t i = 0; i < j.size(); ++i) {
        ConductorType c = conductor_from_json(j[i], strf("%s: conductor[%zu]", path.c_str(), i));
        if (!names.insert(c.name).second) {
            throw ParseError(path + ": duplicate conductor name '" + c.name + "'");
        }
        cat.push_back(std::move(c));
    }
    return cat;
}

inline const ConductorType* find_conductor(const Catalog& catalog, const std::string& name) {
    for (const auto& c : catalog) {
        if (c.name == name) {
            return &c;
        }
    }
    return nullptr;
}

inline Network network_from_json(const json& j, const Catalog& catalog,
                                 const std::string& context) {
    Network net;
    net.name = detail::get_field_or<std::string>(j, "name", "");
    for (const auto& jb : detail::get_field<json>(j, "buses", context)) {
        Bus b;
        std::string ctx = context + ": bus";
        b.id = detail::get_field<int>(jb, "id", ctx);
        b.nominal_kv = detail::get_field<double>(jb, "vn_kv", ctx);
        b.x_km = detail::get_field<double>(jb, "x_km", ctx);
        b.y_km = detail::get_field<double>(jb, "y_km", ctx);
        b.subnet = detail::get_field_or<std::string>(jb, "subnet", "default");
        net.buses.push_back(std::move(b));
    }
    for (const auto& jl : detail::get_field<json>(j, "lines", context)) {
        Line ln;
        std::string ctx = context + ": line";
        ln.id = detail::get_field<int>(jl, "id", ctx);
        ln.from_bus = detail::get_field<int>(jl, "from_bus", ctx);
        ln.to_bus = detail::get_field<int>(jl, "to_bus", ctx);
        ln.length_km = detail::get_field<double>(jl, "length_km", ctx);
        std::string cname = detail::get_field<std::string>(jl, "conductor", ctx);
        const ConductorType* c = find_conductor(catalog, cname);
        if (c == nullptr) {
            throw ParseError(strf("%s: line %d references unknown conductor '%s'",
                                  context.c_str(), ln.id, cname.c_str()));
        }
        ln.conductor = *c;
        ln.in_service = detail::get_field_or<bool>(jl, "in_service", true);
        net.lines.push_back(std::move(ln));
    }
    for (const auto& jt : detail::get_field_or<json>(j, "transformers", json::array())) {
        TransformerBranch tr;
        std::string ctx = context + ": transformer";
        tr.id = detail::get_field<int>(jt, "id", ctx);
        tr.from_bus = detail::get_field<int>(jt, "from_bus", ctx);
        tr.to_bus = detail::get_field<int>(jt, "to_bus", ctx);
        tr.r_pu = detail::get_field<double>(jt, "r_pu", ctx);
        tr.x_pu = detail::get_field<double>(jt, "x_pu", ctx);
        tr.ratio = detail::get_field_or<double>(jt, "ratio", 1.0);
        net.transformers.push_back(tr);
    }
    for (const auto& jl : detail::get_field_or<json>(j, "loads", json::array())) {
        Load ld;
        std::string ctx = context + ": load";
        ld.id = detail::get_field<int>(jl, "id", ctx);
        ld.bus = detail::get_field<int>(jl, "bus", ctx);
        ld.profile_id = detail::get_field<std::string>(jl, "profile", ctx);
        net.loads.push_back(std::move(ld));
    }
    for (const auto& jg : detail::get_field_or<json>(j, "generators", json::array())) {
        Generator g;
        std::string ctx = context + ": generator";
        g.id = detail::get_field<int>(jg, "id", ctx);
        g.bus = detail::get_field<int>(jg, "bus", ctx);
        g.profile_id = detail::get_field_or<std::string>(jg, "profile", "");
        g.is_slack_connection = detail::get_field_or<bool>(jg, "slack", false);
        g.rated_mw = detail::get_field_or<double>(jg, "rated_mw", 0.0);
        net.generators.push_back(std::move(g));
    }
    if (j.contains("bounds")) {
        const json& jb = j.at("bounds");
        std::string ctx = context + ": bounds";
        net.bounds.x_min = detail::get_field<double>(jb, "x_min", ctx);
        net.bounds.x_max = detail::get_field<double>(jb, "x_max", ctx);
        net.bounds.y_min = detail::get_field<double>(jb, "y_min", ctx);
        net.bounds.y_max = detail::get_field<double>(jb, "y_max", ctx);
    } else {
        // Tight bounding box of the bus coordinates.
        if (!net.buses.empty()) {
            net.bounds = {net.buses[0].x_km, net.buses[0].x_km, net.buses[0].y_km,
                          net.buses[0].y_km};
            for (const auto& b : net.buses) {
                net.bounds.x_min = std::min(net.bounds.x_min, b.x_km);
                net.bounds.x_max = std::max(net.bounds.x_max, b.x_km);
                net.bounds.y_min = std::min(net.bounds.y_min, b.y_km);
                net.bounds.y_max = std::max(net.bounds.y_max, b.y_km);
            }
        }
    }
    net.finalize();
    return net;
}

inline Network load_network(const std::string& network_file, const std::string& catalog_file) {
    Catalog catalog = load_catalog(catalog_file);
    json j = detail::read_json_file(network_file);
    return network_from_json(j, catalog, network_file);
}

inline json network_to_json(const Network& net) {
    json j;
    if (!net.name.empty()) {
        j["name"] = net.name;
    }
    j["buses"] = json::array();
    for (const auto& b : net.buses) {
        j["buses"].push_back({{"id", b.id},
                              {"vn_kv", b.nominal_kv},
                              {"x_km", b.x_km},
                              {"y_km", b.y_km},
                              {"subnet", b.subnet}});
    }
    j["lines"] = json::array();
    for (const auto& ln : net.lines) {
        j["lines"].push_back({{"id", ln.id},
                              {"from_bus", ln.from_bus},
                              {"to_bus", ln.to_bus},
                              {"length_km", ln.length_km},
                              {"conductor", ln.conductor.name},
                              {"in_service", ln.in_service}});
    }
    j["transformers"] = json::array();
    for (const auto& tr : net.transformers) {
        j["transformers"].push_back({{"id", tr.id},
                                     {"from_bus", tr.from_bus},
                                     {"to_bus", tr.to_bus},
                                     {"r_pu", tr.r_pu},
                                     {"x_pu", tr.x_pu},
                                     {"ratio", tr.ratio}});
    }
    j["loads"] = json::array();
    for (const auto& ld : net.loads) {
        j["loads"].push_back({{"id", ld.id}, {"bus", ld.bus}, {"profile", ld.profile_id}});
    }
    j["generators"] = json::array();
    for (const auto& g : net.generators) {
        json jg = {{"id", g.id}, {"bus", g.bus}};
        if (!g.profile_id.empty()) {
            jg["profile"] = g.profile_id;
        }
        if (g.is_slack_connection) {
            jg["slack"] = true;
        }
        if (g.rated_mw != 0.0) {
            jg["rated_mw"] = g.rated_mw;
        }
        j["generators"].push_back(std::move(jg));
    }
    j["bounds"] = {{"x_min", net.bounds.x_min},
                   {"x_max", net.bounds.x_max},
                   {"y_min", net.bounds.y_min},
                   {"y_max", net.bounds.y_max}};
    return j;
}

// ---------------------------------------------------------------------------
// Time series
// ---------------------------------------------------------------------------

/// Aligned 15-minute P/Q profiles. Loads and generators reference profiles by
/// id; several elements may share one profile.
struct TimeSeries {
    TimePoint start = 0;
    int step_seconds = static_cast<int>(kStepSeconds);
    std::vector<std::string> profile_names;
    std::unordered_map<std::string, int> profile_pos;
    std::vector<std::vector<float>> p_mw;   // [profile][step]
    std::vector<std::vector<float>> q_mvar; // [profile][step]

    size_t n_steps() const { return p_mw.empty() ? 0 : p_mw[0].size(); }

    int profile_index(const std::string& id) const {
        auto it = profile_pos.find(id);
        return it == profile_pos.end() ? -1 : it->second;
    }

    /// Step index for a timestamp; throws if t is not on the grid or outside it.
    size_t step_of(TimePoint t) const {
        std::int64_t off = t - start;
        if (off < 0 || off % step_seconds != 0 ||
            static_cast<size_t>(off / step_seconds) >= n_steps()) {
            throw Error("timestamp " + format_time(t) + " outside the loaded time series");
        }
        return static_cast<size_t>(off / step_seconds);
    }
};

namespace detail {

inline std::vector<std::string> split_csv_row(const std::string& row) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : row) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

inline TimeSeries load_timeseries(const std::string& path, const Network& network) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open file: " + path);
    }
    std::string header;
    if (!std::getline(in, header)) {
        throw ParseError(path + ": empty file");
    }
    auto cols = detail::split_csv_row(header);
    if (cols.empty() || cols[0] != "timestamp") {
        throw ParseError(path + ": first column must be 'timestamp'");
    }

    TimeSeries ts;
    // column index -> (profile index, is_q)
    std::vector<std::pair<int, bool>> col_map(cols.size(), {-1, false});
    for (size_t c = 1; c < cols.size(); ++c) {
        const std::string& col = cols[c];
        bool is_q = false;
        std::string profile;
        if (col.size() > 5 && col.compare(col.size() - 5, 5, "_p_mw") == 0) {
            profile = col.substr(0, col.size() - 5);
        } else if (col.size() > 7 && col.compare(col.size() - 7, 7, "_q_mvar") == 0) {
            profile = col.substr(0, col.size() - 7);
            is_q = true;
        } else {
            throw ParseError(path + ": column '" + col + "' must end in _p_mw or _q_mvar");
        }
        auto it = ts.profile_pos.find(profile);
        int idx;
        if (it == ts.profile_pos.end()) {
            idx = static_cast<int>(ts.profile_names.size());
            ts.profile_pos.emplace(profile, idx);
            ts.profile_names.push_back(profile);
            ts.p_mw.emplace_back();
            ts.q_mvar.emplace_back();
        } else {
            idx = it->second;
        }
        col_map[c] = {idx, is_q};
    }

    std::string row;
    size_t line_no = 1;
    TimePoint prev = 0;
    bool first = true;
    while (std::getline(in, row)) {
        ++line_no;
        if (row.empty()) {
            continue;
        }
        auto fields = detail::split_csv_row(row);
        if (fields.size() != cols.size()) {
            throw ParseError(strf("%s:%zu: expected %zu fields, found %zu", path.c_str(),
                                  line_no, cols.size(), fields.size()));
        }
        TimePoint t;
        try {
            t = parse_time(fields[0]);
        } catch (const ParseError& e) {
            throw ParseError(strf("%s:%zu: %s", path.c_str(), line_no, e.what()));
        }
        if (first) {
            ts.start = t;
            first = false;
        } else if (t - prev != kStepSeconds) {
            throw ParseError(strf("%s:%zu: step from %s to %s is not 15 minutes", path.c_str(),
                                  line_no, format_time(prev).c_str(), format_time(t).c_str()));
        }
        prev = t;
        for (size_t c = 1; c < fields.size(); ++c) {
            char* end = nullptr;
            double v = std::strtod(fields[c].c_str(), &end);
            if (end == fields[c].c_str()) {
                throw ParseError(strf("%s:%zu: column '%s' is not numeric", path.c_str(),
                                      line_no, cols[c].c_str()));
            }
            auto [idx, is_q] = col_map[c];
            (is_q ? ts.q_mvar[idx] : ts.p_mw[idx]).push_back(static_cast<float>(v));
        }
    }
    if (first) {
        throw ParseError(path + ": no data rows");
    }
    for (size_t i = 0; i < ts.profile_names.size(); ++i) {
        if (ts.p_mw[i].size() != ts.n_steps() || ts.q_mvar[i].size() != ts.n_steps()) {
            throw ParseError(path + ": profile '" + ts.profile_names[i] +
                             "' is missing a _p_mw or _q_mvar column");
        }
    }
    auto require_profile = [&](const std::string& id, const std::string& what, int elem_id) {
        if (ts.profile_index(id) < 0) {
            throw ParseError(strf("%s: missing profile '%s' referenced by %s %d", path.c_str(),
                                  id.c_str(), what.c_str(), elem_id));
        }
    };
    for (const auto& ld : network.loads) {
        require_profile(ld.profile_id, "load", ld.id);
    }
    for (const auto& g : network.generators) {
        if (!g.is_slack_connection && !g.profile_id.empty()) {
            require_profile(g.profile_id, "generator", g.id);
        }
    }
    return ts;
}

} // namespace gridres
