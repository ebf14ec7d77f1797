#include <catch2/catch_amalgamated.hpp>

#include "gridres/grid_model.hpp"
#include "gridres/investments.hpp"
#include "test_util.hpp"

using namespace gridres;

TEST_CASE("rural13 loads and validates", "[grid_model]") {
    Network net = testutil::load_rural13();
    CHECK(net.lines.size() == 13);
    CHECK(net.buses.size() == 14);
    CHECK(net.transformers.size() == 1);
    CHECK(net.generators[net.slack_generator_index].is_slack_connection);
    int overhead = 0;
    for (const auto& ln : net.lines) {
        if (ln.conductor.overhead) {
            ++overhead;
        }
    }
    CHECK(overhead == 4);
    CHECK(net.subnet_labels().size() == 1);
}

TEST_CASE("comm113 carries six subnets", "[grid_model]") {
    Network net = testutil::load_comm113();
    CHECK(net.lines.size() == 113);
    CHECK(net.buses.size() == 107);
    CHECK(net.transformers.size() == 2);
    CHECK(net.subnet_labels().size() == 6);
}

TEST_CASE("duplicate and inconsistent networks are rejected", "[grid_model]") {
    Catalog cat = testutil::load_lv_catalog();
    json base = network_to_json(testutil::load_rural13());

    SECTION("duplicate bus id") {
        json bad = base;
        bad["buses"][1]["id"] = bad["buses"][0]["id"];
        CHECK_THROWS_WITH(network_from_json(bad, cat, "net"),
                          Catch::Matchers::ContainsSubstring("duplicate bus id"));
    }
    SECTION("unknown conductor") {
        json bad = base;
        bad["lines"][0]["conductor"] = "unobtainium";
        CHECK_THROWS_WITH(network_from_json(bad, cat, "net"),
                          Catch::Matchers::ContainsSubstring("unknown conductor"));
    }
    SECTION("disconnected graph") {
        json bad = base;
        json lines = json::array();
        for (const auto& jl : bad["lines"]) {
            if (jl["id"].get<int>() != 4) { // line 4 is the only path to bus 8
                lines.push_back(jl);
            }
        }
        bad["lines"] = lines;
        CHECK_THROWS_WITH(network_from_json(bad, cat, "net"),
                          Catch::Matchers::ContainsSubstring("disconnected"));
    }
    SECTION("two slack connections") {
        json bad = base;
        bad["generators"][1]["slack"] = true;
        CHECK_THROWS_WITH(network_from_json(bad, cat, "net"),
                          Catch::Matchers::ContainsSubstring("more than one"));
    }
    SECTION("self-loop line") {
        json bad = base;
        bad["lines"][0]["to_bus"] = bad["lines"][0]["from_bus"];
        CHECK_THROWS(network_from_json(bad, cat, "net"));
    }
}

TEST_CASE("network serialization round trips", "[grid_model]") {
    Catalog cat = testutil::load_lv_catalog();
    Network net = testutil::load_rural13();
    Network again = network_from_json(network_to_json(net), cat, "roundtrip");
    REQUIRE(again.buses.size() == net.buses.size());
    REQUIRE(again.lines.size() == net.lines.size());
    for (size_t i = 0; i < net.lines.size(); ++i) {
        CHECK(again.lines[i].id == net.lines[i].id);
        CHECK(again.lines[i].length_km == net.lines[i].length_km);
        CHECK(again.lines[i].conductor.name == net.lines[i].conductor.name);
    }
    for (size_t i = 0; i < net.buses.size(); ++i) {
        CHECK(again.buses[i].id == net.buses[i].id);
        CHECK(again.buses[i].x_km == net.buses[i].x_km);
        CHECK(again.buses[i].subnet == net.buses[i].subnet);
    }
}

TEST_CASE("bounds always contain every bus", "[grid_model]") {
    Rng rng(7);
    for (int rep = 0; rep < 30; ++rep) {
        auto rc = testutil::random_radial_network(rng, 3 + static_cast<int>(rng.next_u64() % 10));
        for (const auto& b : rc.net.buses) {
            CHECK(rc.net.bounds.contains(b.x_km, b.y_km));
        }
    }
}

TEST_CASE("full-year 2016 series has 35136 steps per profile", "[grid_model]") {
    Network net = testutil::load_rural13();
    TimeSeries ts = load_timeseries(testutil::data_path("profiles_rural13_2016.csv"), net);
    CHECK(ts.n_steps() == 35136); // 366 days * 96 steps
    CHECK(ts.start == parse_time("2016-01-01"));
    CHECK(ts.profile_index("res_a") >= 0);
    CHECK(ts.step_of(parse_time("2016-01-02")) == 96);
}

TEST_CASE("90-day series has 8640 steps", "[grid_model]") {
    auto dir = testutil::scratch_dir("ts90");
    std::string path = dir + "/ts.csv";
    {
        std::ofstream out(path);
        out << "timestamp,p1_p_mw,p1_q_mvar\n";
        TimePoint t = parse_time("2016-01-01");
        for (int i = 0; i < 90 * kStepsPerDay; ++i) {
            out << format_time(t) << ",0.01,0.002\n";
            t += kStepSeconds;
        }
    }
    Network net;
    net.buses.push_back({0, 1.0, 0.0, 0.0, "s"});
    net.generators.push_back({1, 0, "", true, 1.0});
    net.loads.push_back({1, 0, "p1"});
    net.bounds = {0, 1, 0, 1};
    net.finalize();
    TimeSeries ts = load_timeseries(path, net);
    CHECK(ts.n_steps() == 8640);
    CHECK(format_date(ts.start + static_cast<TimePoint>(ts.n_steps() - 1) * kStepSeconds) ==
          "2016-03-30");
}

TEST_CASE("time series errors carry context", "[grid_model]") {
    auto dir = testutil::scratch_dir("ts_err");
    Network net;
    net.buses.push_back({0, 1.0, 0.0, 0.0, "s"});
    net.generators.push_back({1, 0, "", true, 1.0});
    net.loads.push_back({1, 0, "wanted"});
    net.bounds = {0, 1, 0, 1};
    net.finalize();

    SECTION("missing profile is named") {
        std::string path = dir + "/missing.csv";
        std::ofstream(path) << "timestamp,other_p_mw,other_q_mvar\n"
                               "2016-01-01T00:00:00,1,0\n2016-01-01T00:15:00,1,0\n";
        CHECK_THROWS_WITH(load_timeseries(path, net),
                          Catch::Matchers::ContainsSubstring("wanted"));
    }
    SECTION("non-15-minute step") {
        std::string path = dir + "/step.csv";
        std::ofstream(path) << "timestamp,wanted_p_mw,wanted_q_mvar\n"
                               "2016-01-01T00:00:00,1,0\n2016-01-01T00:30:00,1,0\n";
        CHECK_THROWS_WITH(load_timeseries(path, net),
                          Catch::Matchers::ContainsSubstring("not 15 minutes"));
    }
    SECTION("ragged row") {
        std::string path = dir + "/ragged.csv";
        std::ofstream(path) << "timestamp,wanted_p_mw,wanted_q_mvar\n"
                               "2016-01-01T00:00:00,1\n";
        CHECK_THROWS_WITH(load_timeseries(path, net),
                          Catch::Matchers::ContainsSubstring("expected 3 fields"));
    }
    SECTION("profile missing its q column") {
        std::string path = dir + "/noq.csv";
        std::ofstream(path) << "timestamp,wanted_p_mw\n2016-01-01T00:00:00,1\n";
        CHECK_THROWS(load_timeseries(path, net));
    }
}

TEST_CASE("apply_investments leaves the source untouched and validates targets",
          "[grid_model][investments]") {
    Network net = testutil::load_rural13();
    Catalog cat = testutil::load_lv_catalog();
    CandidateSet cands = enumerate_candidates(net, cat);

    SECTION("empty selection is the identity") {
        Network same = apply_investments(net, {});
        CHECK(network_to_json(same) == network_to_json(net));
    }
    SECTION("burying line 7 flips it underground onto the catalog cable") {
        const Investment* bury7 = nullptr;
        for (const auto& inv : cands.investments) {
            if (inv.line_id == 7 && inv.kind == InvestmentKind::Bury) {
                bury7 = &inv;
            }
        }
        REQUIRE(bury7 != nullptr);
        Network out = apply_investments(net, std::span(bury7, 1));
        const Line& ln = out.lines[out.line_index(7)];
        CHECK_FALSE(ln.conductor.overhead);
        CHECK(ln.conductor.name == "NAYY 4x240SE 0.6/1kV");
        // source unchanged
        CHECK(net.lines[net.line_index(7)].conductor.overhead);
        // applying the same bury twice is rejected, never double-counted
        std::vector<Investment> twice{*bury7, *bury7};
        CHECK_THROWS_WITH(apply_investments(net, twice),
                          Catch::Matchers::ContainsSubstring("already underground"));
    }
    SECTION("upgrades strictly raise the current rating") {
        for (const auto& inv : cands.investments) {
            if (inv.kind == InvestmentKind::Upgrade) {
                const Line& before = net.lines[net.line_index(inv.line_id)];
                Network out = apply_investments(net, std::span(&inv, 1));
                const Line& after = out.lines[out.line_index(inv.line_id)];
                CHECK(after.conductor.max_current > before.conductor.max_current);
            }
        }
    }
    SECTION("investment targeting a missing line fails") {
        Investment ghost = cands.investments[0];
        ghost.line_id = 999;
        CHECK_THROWS_WITH(apply_investments(net, std::span(&ghost, 1)),
                          Catch::Matchers::ContainsSubstring("unknown line id"));
    }
}
