#include <catch2/catch_amalgamated.hpp>

#include "gridres/twin.hpp"
#include "test_util.hpp"

using namespace gridres;

namespace {

TimeSeries rural_flat_series(const Network& net, int days) {
    std::vector<std::pair<std::string, double>> profiles = {
        {"res_a", 0.016}, {"res_b", 0.015}, {"res_small", 0.0015},
        {"farm", 0.008},  {"pv", 0.002},
    };
    (void)net;
    return testutil::flat_series(parse_time("2016-01-01"), days, profiles);
}

} // namespace

TEST_CASE("energized partition equals a brute-force component search", "[twin]") {
    Network net = testutil::load_rural13();

    SECTION("all lines active: one slack-connected island") {
        std::vector<char> active(net.lines.size(), 1);
        Partition part = energized_partition(net, active);
        CHECK(part.n_components == 1);
        CHECK(part.slack_component == 0);
    }
    SECTION("cutting the only line to a leaf makes a dead singleton") {
        std::vector<char> active(net.lines.size(), 1);
        active[net.line_index(1)] = 0; // line 1 is the sole path to bus 5
        Partition part = energized_partition(net, active);
        CHECK(part.n_components == 2);
        int leaf = net.bus_index(5);
        CHECK(part.component_of_bus[leaf] != part.slack_component);
        int dead_count = 0;
        for (int c : part.component_of_bus) {
            if (c != part.slack_component) {
                ++dead_count;
            }
        }
        CHECK(dead_count == 1);
    }
    SECTION("random removals match the BFS oracle") {
        Rng rng(555);
        for (int rep = 0; rep < 200; ++rep) {
            std::vector<char> active(net.lines.size(), 0);
            for (auto& a : active) {
                a = rng.bernoulli(0.7) ? 1 : 0;
            }
            Partition part = energized_partition(net, active);

            std::vector<std::pair<int, int>> edges;
            for (size_t i = 0; i < net.lines.size(); ++i) {
                if (active[i]) {
                    edges.push_back({net.bus_index(net.lines[i].from_bus),
                                     net.bus_index(net.lines[i].to_bus)});
                }
            }
            for (const auto& tr : net.transformers) {
                edges.push_back({net.bus_index(tr.from_bus), net.bus_index(tr.to_bus)});
            }
            auto oracle = testutil::bfs_components(static_cast<int>(net.buses.size()), edges);
            // same partition up to component relabeling
            for (size_t a = 0; a < net.buses.size(); ++a) {
                for (size_t b = 0; b < net.buses.size(); ++b) {
                    CHECK((part.component_of_bus[a] == part.component_of_bus[b]) ==
                          (oracle[a] == oracle[b]));
                }
            }
            int n_oracle = 1 + *std::max_element(oracle.begin(), oracle.end());
            CHECK(part.n_components == n_oracle);
        }
    }
}

TEST_CASE("weather disabled gives zero unserved energy and no outages", "[twin]") {
    Network net = testutil::load_rural13();
    TimeSeries ts = rural_flat_series(net, 3);
    WeatherConfig off{};
    SimSpan span{parse_time("2016-01-01"), 3 * kStepsPerDay};
    SimulationResult res = run_scenario(net, ts, off, 1, span);
    CHECK(res.outages.empty());
    CHECK(res.events.empty());
    CHECK(res.episodes.empty());
    CHECK(res.total_unserved_mwh() == 0.0);
    CHECK(res.total_losses_mwh() > 0.0);
    CHECK(res.convergence_failures == 0);
    CHECK(res.valid);
    CHECK(res.max_power_imbalance_mw < 1e-6);
}

TEST_CASE("forced outage of the feeder head books exactly the downstream demand",
          "[twin]") {
    Network net = testutil::load_rural13();
    TimeSeries ts = rural_flat_series(net, 2);
    WeatherConfig off{};
    SimSpan span{parse_time("2016-01-01"), 2 * kStepsPerDay};
    std::vector<ForcedOutage> forced{{7, parse_time("2016-01-01T06:00:00"), 6.0}};
    SimulationResult res = run_scenario(net, ts, off, 1, span, forced);

    // Reachability oracle: which buses leave the slack component without line 7?
    std::vector<std::pair<int, int>> edges;
    for (const auto& ln : net.lines) {
        if (ln.id != 7) {
            edges.push_back({net.bus_index(ln.from_bus), net.bus_index(ln.to_bus)});
        }
    }
    for (const auto& tr : net.transformers) {
        edges.push_back({net.bus_index(tr.from_bus), net.bus_index(tr.to_bus)});
    }
    auto comp = testutil::bfs_components(static_cast<int>(net.buses.size()), edges);
    int slack_comp = comp[net.slack_bus_index()];

    const size_t steps_out = 6 * 4; // 6 hours
    for (size_t l = 0; l < net.loads.size(); ++l) {
        bool downstream = comp[net.bus_index(net.loads[l].bus)] != slack_comp;
        double demanded_per_step =
            static_cast<double>(ts.p_mw[ts.profile_index(net.loads[l].profile_id)][0]) * 0.25;
        double expect = downstream ? demanded_per_step * static_cast<double>(steps_out) : 0.0;
        CHECK(res.unserved_of_load_mwh(l) == Catch::Approx(expect).margin(1e-9));
    }
    REQUIRE(res.outages.size() == 1);
    CHECK(res.outages[0].line_id == 7);
    CHECK(res.outages[0].event_id == -1);
    CHECK(res.outages[0].restored - res.outages[0].start == 6 * 3600);

    // one interruption episode per downstream load, spanning the outage window
    size_t downstream_loads = 0;
    for (size_t l = 0; l < net.loads.size(); ++l) {
        if (comp[net.bus_index(net.loads[l].bus)] != slack_comp) {
            ++downstream_loads;
        }
    }
    CHECK(res.episodes.size() == downstream_loads);
    for (const auto& ep : res.episodes) {
        CHECK(ep.end - ep.start == 6 * 3600);
    }
}

TEST_CASE("islands with generators but no slack are fully de-energized", "[twin]") {
    Network net = testutil::load_rural13();
    TimeSeries ts = rural_flat_series(net, 1);
    WeatherConfig off{};
    SimSpan span{parse_time("2016-01-01"), kStepsPerDay};
    // line 4 is the only path to bus 8, which hosts the PV generator and a load
    std::vector<ForcedOutage> forced{{4, parse_time("2016-01-01"), 3.0}};
    SimulationResult res = run_scenario(net, ts, off, 1, span, forced);
    size_t pv_load = 0;
    for (size_t l = 0; l < net.loads.size(); ++l) {
        if (net.loads[l].bus == 8) {
            pv_load = l;
        }
    }
    double demanded = static_cast<double>(ts.p_mw[ts.profile_index("farm")][0]) * 0.25;
    CHECK(res.unserved_of_load_mwh(pv_load) ==
          Catch::Approx(demanded * 12).margin(1e-9)); // 3 h = 12 steps
}

TEST_CASE("same seed reproduces the scenario bit for bit", "[twin]") {
    Network net = testutil::load_rural13();
    TimeSeries ts = rural_flat_series(net, 30);
    WeatherConfig w = testutil::tc1_weather();
    SimSpan span{parse_time("2016-01-01"), 30 * kStepsPerDay};
    SimulationResult a = run_scenario(net, ts, w, 777, span);
    SimulationResult b = run_scenario(net, ts, w, 777, span);
    CHECK(a.losses_mwh == b.losses_mwh);
    CHECK(a.line_loading == b.line_loading);
    CHECK(a.unserved_mwh == b.unserved_mwh);
    CHECK(a.outages.size() == b.outages.size());
    CHECK(a.events.size() == b.events.size());
    for (size_t i = 0; i < a.outages.size(); ++i) {
        CHECK(a.outages[i].line_id == b.outages[i].line_id);
        CHECK(a.outages[i].start == b.outages[i].start);
        CHECK(a.outages[i].restored == b.outages[i].restored);
    }
    SimulationResult c = run_scenario(net, ts, w, 778, span);
    bool identical = a.events.size() == c.events.size() && a.unserved_mwh == c.unserved_mwh;
    CHECK_FALSE(identical);
}

TEST_CASE("outage ledger durations equal event duration plus repair time", "[twin]") {
    Network net = testutil::load_rural13();
    TimeSeries ts = rural_flat_series(net, 60);
    WeatherConfig w = testutil::tc1_weather();
    w.base_rate_per_hour = 0.01; // storm-heavy so the ledger fills quickly
    SimSpan span{parse_time("2016-01-01"), 60 * kStepsPerDay};
    SimulationResult res = run_scenario(net, ts, w, 31415, span);
    REQUIRE(res.outages.size() > 5);
    for (const auto& rec : res.outages) {
        REQUIRE(rec.event_id >= 0);
        const WeatherEvent& ev = res.events[static_cast<size_t>(rec.event_id)];
        const Line& line = net.lines[net.line_index(rec.line_id)];
        TimePoint expect = ev.end() + static_cast<TimePoint>(std::llround(
                                          repair_time_hours(line, w) * 3600.0));
        CHECK(rec.restored == expect);
        CHECK(rec.start == ev.start);
        CHECK(rec.restored > rec.start);
    }
}

TEST_CASE("unserved energy equals demanded energy of dead islands", "[twin]") {
    // Storm-heavy run: cross-check every step's unserved booking against the
    // demanded power of loads outside the slack island, recomputed from the
    // outage ledger and an independent component search.
    Network net = testutil::load_rural13();
    TimeSeries ts = rural_flat_series(net, 40);
    WeatherConfig w = testutil::tc1_weather();
    w.base_rate_per_hour = 0.005;
    SimSpan span{parse_time("2016-01-01"), 40 * kStepsPerDay};
    SimulationResult res = run_scenario(net, ts, w, 999, span);
    REQUIRE(res.convergence_failures == 0);

    for (size_t stp = 0; stp < res.n_steps; stp += 7) {
        TimePoint now = span.start + static_cast<TimePoint>(stp) * kStepSeconds;
        std::vector<std::pair<int, int>> edges;
        for (const auto& ln : net.lines) {
            bool out = false;
            for (const auto& rec : res.outages) {
                if (rec.line_id == ln.id && rec.start <= now && now < rec.restored) {
                    out = true;
                }
            }
            if (!out) {
                edges.push_back({net.bus_index(ln.from_bus), net.bus_index(ln.to_bus)});
            }
        }
        for (const auto& tr : net.transformers) {
            edges.push_back({net.bus_index(tr.from_bus), net.bus_index(tr.to_bus)});
        }
        auto comp = testutil::bfs_components(static_cast<int>(net.buses.size()), edges);
        int slack_comp = comp[net.slack_bus_index()];
        for (size_t l = 0; l < net.loads.size(); ++l) {
            bool dead = comp[net.bus_index(net.loads[l].bus)] != slack_comp;
            double demanded =
                static_cast<double>(
                    ts.p_mw[ts.profile_index(net.loads[l].profile_id)][ts.step_of(now)]) *
                0.25;
            double booked = res.unserved_at(stp, l);
            CHECK(booked == Catch::Approx(dead ? demanded : 0.0).margin(1e-9));
        }
    }
}

TEST_CASE("energy conservation holds at every converged step", "[twin]") {
    Network net = testutil::load_rural13();
    TimeSeries ts = rural_flat_series(net, 20);
    WeatherConfig w = testutil::tc1_weather();
    w.base_rate_per_hour = 0.003;
    SimSpan span{parse_time("2016-01-01"), 20 * kStepsPerDay};
    SimulationResult res = run_scenario(net, ts, w, 4242, span);
    CHECK(res.max_power_imbalance_mw < 1e-6);
}

TEST_CASE("non-convergent steps are flagged, carried forward and counted unserved",
          "[twin]") {
    // A load far beyond the feeder's capability never converges.
    Network net;
    net.buses.push_back({0, 1.0, 0.0, 0.0, "s"});
    net.buses.push_back({1, 1.0, 1.0, 0.0, "s"});
    ConductorType c;
    c.name = "thin";
    c.r_per_km = 0.5;
    c.x_per_km = 1.0;
    c.max_current = 0.1;
    Line ln;
    ln.id = 1;
    ln.from_bus = 0;
    ln.to_bus = 1;
    ln.length_km = 1.0;
    ln.conductor = c;
    net.lines.push_back(ln);
    net.generators.push_back({1, 0, "", true, 1.0});
    net.loads.push_back({1, 1, "huge"});
    net.bounds = {0, 1, 0, 1};
    net.finalize();
    TimeSeries ts = testutil::flat_series(parse_time("2016-01-01"), 1, {{"huge", 40.0}});
    WeatherConfig off{};
    SimSpan span{parse_time("2016-01-01"), kStepsPerDay};
    SimulationResult res = run_scenario(net, ts, off, 1, span);
    CHECK(res.convergence_failures == static_cast<int>(span.n_steps));
    CHECK_FALSE(res.valid);
    CHECK(res.total_unserved_mwh() == Catch::Approx(40.0 * 24.0).epsilon(1e-6));
    CHECK(res.episodes.size() == 1);
}

TEST_CASE("spans outside the loaded series are rejected", "[twin]") {
    Network net = testutil::load_rural13();
    TimeSeries ts = rural_flat_series(net, 2);
    WeatherConfig off{};
    CHECK_THROWS(run_scenario(net, ts, off, 1,
                              SimSpan{parse_time("2016-03-01"), kStepsPerDay}));
    CHECK_THROWS(run_scenario(net, ts, off, 1,
                              SimSpan{parse_time("2016-01-01"), 5 * kStepsPerDay}));
}
