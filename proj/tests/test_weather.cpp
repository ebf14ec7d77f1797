#include <catch2/catch_amalgamated.hpp>

#include "gridres/weather.hpp"
#include "test_util.hpp"

using namespace gridres;

TEST_CASE("season and day-part bucketing", "[weather]") {
    CHECK(season_of_month(12) == Season::Winter);
    CHECK(season_of_month(1) == Season::Winter);
    CHECK(season_of_month(2) == Season::Winter);
    CHECK(season_of_month(3) == Season::Spring);
    CHECK(season_of_month(5) == Season::Spring);
    CHECK(season_of_month(6) == Season::Summer);
    CHECK(season_of_month(8) == Season::Summer);
    CHECK(season_of_month(9) == Season::Fall);
    CHECK(season_of_month(11) == Season::Fall);
    CHECK(day_part_of_hour(0) == DayPart::Night);
    CHECK(day_part_of_hour(5) == DayPart::Night);
    CHECK(day_part_of_hour(6) == DayPart::Morning);
    CHECK(day_part_of_hour(11) == DayPart::Morning);
    CHECK(day_part_of_hour(12) == DayPart::Afternoon);
    CHECK(day_part_of_hour(17) == DayPart::Afternoon);
    CHECK(day_part_of_hour(18) == DayPart::Evening);
    CHECK(day_part_of_hour(23) == DayPart::Evening);
}

TEST_CASE("event rate is the product of base, season, hour and interval", "[weather]") {
    WeatherConfig w = testutil::tc1_weather();
    // summer afternoon at a 1-hour interval
    CHECK(event_rate(w, parse_time("2016-07-15T14:00:00"), 1.0) ==
          Catch::Approx(0.0005 * 1.5 * 1.5).epsilon(1e-12));
    // a 15-minute step scales by 0.25
    CHECK(event_rate(w, parse_time("2016-07-15T14:00:00"), 0.25) ==
          Catch::Approx(0.001125 * 0.25).epsilon(1e-12));
    // winter night (2.0 * 0.5) equals spring morning (1.0 * 1.0)
    CHECK(event_rate(w, parse_time("2016-01-15T03:00:00"), 1.0) ==
          Catch::Approx(event_rate(w, parse_time("2016-04-15T08:00:00"), 1.0)).epsilon(1e-12));
}

TEST_CASE("event_count sampling matches its rate", "[weather]") {
    WeatherConfig w = testutil::tc1_weather();

    SECTION("zero base rate never fires") {
        WeatherConfig off = w;
        off.base_rate_per_hour = 0.0;
        Rng rng(5);
        for (int i = 0; i < 1000; ++i) {
            CHECK(event_count(rng, parse_time("2016-07-15T14:00:00"), off, 1.0) == 0);
        }
    }
    SECTION("empirical mean within 3 sigma at the reference parameters") {
        const double lambda = 0.001125;
        const int n = 1'000'000;
        Rng rng(123);
        long long total = 0;
        TimePoint t = parse_time("2016-07-15T14:00:00"); // summer afternoon
        for (int i = 0; i < n; ++i) {
            total += event_count(rng, t, w, 1.0);
        }
        double mean = static_cast<double>(total) / n;
        CHECK(std::abs(mean - lambda) < 3.0 * std::sqrt(lambda / n));
    }
}

TEST_CASE("event geometry sampling", "[weather]") {
    WeatherConfig w = testutil::tc1_weather();

    SECTION("degenerate bounds pin the center") {
        GeoBounds b{2.0, 2.0, -1.0, 1.0};
        Rng rng(9);
        WeatherEvent ev = sample_event(rng, w, b, 0);
        CHECK(ev.center_x_km == 2.0);
        CHECK(ev.center_y_km >= -1.0);
        CHECK(ev.center_y_km < 1.0);
    }
    SECTION("radius, duration and center always in range") {
        GeoBounds b{0.0, 4.0, -2.0, 2.0};
        Rng rng(11);
        for (int i = 0; i < 10000; ++i) {
            WeatherEvent ev = sample_event(rng, w, b, i);
            CHECK(ev.radius_km >= 0.5);
            CHECK(ev.radius_km < 3.0);
            CHECK(ev.duration_h >= 2.0);
            CHECK(ev.duration_h < 8.0);
            CHECK(b.contains(ev.center_x_km, ev.center_y_km));
            CHECK(ev.end() > ev.start);
        }
    }
    SECTION("centers are uniform per axis (KS test)") {
        GeoBounds b{0.0, 1.0, 0.0, 1.0};
        Rng rng(77);
        const int n = 100000;
        std::vector<double> xs, ys;
        for (int i = 0; i < n; ++i) {
            WeatherEvent ev = sample_event(rng, w, b, 0);
            xs.push_back(ev.center_x_km);
            ys.push_back(ev.center_y_km);
        }
        auto ks_uniform = [](std::vector<double> v) {
            std::sort(v.begin(), v.end());
            double d = 0.0;
            const double n = static_cast<double>(v.size());
            for (size_t i = 0; i < v.size(); ++i) {
                double f = v[i]; // CDF of U[0,1)
                d = std::max(d, std::abs((i + 1) / n - f));
                d = std::max(d, std::abs(f - i / n));
            }
            return d * std::sqrt(n);
        };
        CHECK(ks_uniform(xs) < 1.95); // ~alpha = 0.001
        CHECK(ks_uniform(ys) < 1.95);
    }
}

TEST_CASE("segment distance agrees with dense point sampling", "[weather]") {
    Rng rng(31337);
    for (int rep = 0; rep < 1000; ++rep) {
        double ax = rng.uniform(-5, 5), ay = rng.uniform(-5, 5);
        double bx = rng.uniform(-5, 5), by = rng.uniform(-5, 5);
        double px = rng.uniform(-6, 6), py = rng.uniform(-6, 6);
        double exact = point_segment_distance(px, py, ax, ay, bx, by);
        const int k = 400;
        double sampled = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= k; ++i) {
            double t = static_cast<double>(i) / k;
            double x = ax + t * (bx - ax), y = ay + t * (by - ay);
            sampled = std::min(sampled, std::hypot(x - px, y - py));
        }
        double seg_len = std::hypot(bx - ax, by - ay);
        CHECK(exact <= sampled + 1e-12);
        CHECK(sampled <= exact + seg_len / k + 1e-12);
    }
}

TEST_CASE("impact area membership", "[weather]") {
    Network net = testutil::load_rural13();

    SECTION("radius zero with the center on an endpoint includes that line") {
        const Line& ln = net.lines[0];
        const Bus& from = net.buses[net.bus_index(ln.from_bus)];
        WeatherEvent ev;
        ev.center_x_km = from.x_km;
        ev.center_y_km = from.y_km;
        ev.radius_km = 0.0;
        auto hit = lines_in_impact_area(net, ev);
        CHECK(std::find(hit.begin(), hit.end(), 0) != hit.end());
    }
    SECTION("a far-away center touches nothing") {
        WeatherEvent ev;
        ev.center_x_km = 500.0;
        ev.center_y_km = 500.0;
        ev.radius_km = 3.0;
        CHECK(lines_in_impact_area(net, ev).empty());
    }
    SECTION("a giant radius covers every line") {
        WeatherEvent ev;
        ev.center_x_km = 0.5;
        ev.center_y_km = 0.2;
        ev.radius_km = 100.0;
        CHECK(lines_in_impact_area(net, ev).size() == net.lines.size());
    }
}

TEST_CASE("line outage sampling frequencies", "[weather]") {
    Network net = testutil::load_rural13();
    WeatherConfig w = testutil::tc1_weather();
    WeatherEvent ev;
    ev.radius_km = 1.0;
    ev.start = parse_time("2016-07-01T12:00:00");
    ev.duration_h = 4.0;

    int oh_idx = net.line_index(7);  // overhead
    int ug_idx = net.line_index(2);  // underground

    SECTION("zero outage probability yields no outages") {
        WeatherConfig safe = w;
        safe.outage_prob_overhead = 0.0;
        safe.outage_prob_underground = 0.0;
        Rng rng(3);
        for (int i = 0; i < 1000; ++i) {
            CHECK(sample_line_outages(rng, {oh_idx, ug_idx}, net, safe, ev).empty());
        }
    }
    SECTION("overhead lines fail at 0.4, underground at 0.05") {
        Rng rng(4);
        const int n = 100000;
        int oh_fail = 0, ug_fail = 0;
        for (int i = 0; i < n; ++i) {
            for (const auto& o : sample_line_outages(rng, {oh_idx, ug_idx}, net, w, ev)) {
                (o.line_id == 7 ? oh_fail : ug_fail) += 1;
            }
        }
        double oh_rate = static_cast<double>(oh_fail) / n;
        double ug_rate = static_cast<double>(ug_fail) / n;
        CHECK(std::abs(oh_rate - 0.4) < 3.0 * std::sqrt(0.4 * 0.6 / n));
        CHECK(std::abs(ug_rate - 0.05) < 3.0 * std::sqrt(0.05 * 0.95 / n));
        CHECK(oh_rate / ug_rate > 6.0); // roughly the 8x exposure gap
        CHECK(oh_rate / ug_rate < 10.0);
    }
    SECTION("repair completes at event end plus repair time") {
        Rng rng(6);
        WeatherConfig always = w;
        always.outage_prob_overhead = 1.0;
        auto outages = sample_line_outages(rng, {oh_idx}, net, always, ev);
        REQUIRE(outages.size() == 1);
        double repair_h = repair_time_hours(net.lines[oh_idx], w);
        CHECK(outages[0].repair_complete ==
              ev.end() + static_cast<TimePoint>(std::llround(repair_h * 3600.0)));
    }
}

TEST_CASE("repair time is linear in length with per-type rates", "[weather]") {
    WeatherConfig w = testutil::tc1_weather();
    ConductorType oh;
    oh.overhead = true;
    oh.r_per_km = 1.0;
    oh.max_current = 1.0;
    ConductorType ug = oh;
    ug.overhead = false;
    Line line;
    line.length_km = 1.0;

    line.conductor = oh;
    CHECK(repair_time_hours(line, w) == Catch::Approx(12.0)); // 0.5 days
    line.conductor = ug;
    CHECK(repair_time_hours(line, w) == Catch::Approx(120.0)); // 5.0 days
    line.conductor = oh;
    line.length_km = 2.0;
    CHECK(repair_time_hours(line, w) == Catch::Approx(24.0)); // linear scaling
}

TEST_CASE("identical seeds give identical event sequences", "[weather]") {
    WeatherConfig w = testutil::tc1_weather();
    GeoBounds b{0.0, 1.0, 0.0, 1.0};
    auto draw = [&](std::uint64_t seed) {
        Rng rng(seed);
        std::vector<WeatherEvent> events;
        TimePoint t = parse_time("2016-01-01");
        for (int step = 0; step < 50000; ++step, t += kStepSeconds) {
            if (event_count(rng, t, w, 0.25) >= 1) {
                events.push_back(sample_event(rng, w, b, t));
            }
        }
        return events;
    };
    auto a = draw(42), c = draw(42), d = draw(43);
    REQUIRE(a.size() == c.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].center_x_km == c[i].center_x_km);
        CHECK(a[i].center_y_km == c[i].center_y_km);
        CHECK(a[i].radius_km == c[i].radius_km);
        CHECK(a[i].duration_h == c[i].duration_h);
        CHECK(a[i].start == c[i].start);
    }
    CHECK(a.size() > 0);
    bool differs = d.size() != a.size();
    for (size_t i = 0; !differs && i < std::min(a.size(), d.size()); ++i) {
        differs = a[i].center_x_km != d[i].center_x_km || a[i].start != d[i].start;
    }
    CHECK(differs);
}

TEST_CASE("long-clock event rate matches the rate sum", "[weather]") {
    WeatherConfig w = testutil::tc1_weather();
    Rng rng(20161231);
    const int hours = 200000;
    TimePoint t = parse_time("2016-01-01");
    double lambda_sum = 0.0;
    long long events = 0;
    for (int h = 0; h < hours; ++h, t += 3600) {
        lambda_sum += event_rate(w, t, 1.0);
        events += rng.poisson(event_rate(w, t, 1.0));
    }
    CHECK(std::abs(static_cast<double>(events) - lambda_sum) < 3.0 * std::sqrt(lambda_sum));
}

TEST_CASE("weather config validation", "[weather]") {
    WeatherConfig w = testutil::tc1_weather();
    w.validate();
    SECTION("bad probability") {
        w.outage_prob_overhead = 1.5;
        CHECK_THROWS_AS(w.validate(), ConfigError);
    }
    SECTION("inverted radius range") {
        w.radius_min_km = 3.0;
        w.radius_max_km = 0.5;
        CHECK_THROWS_AS(w.validate(), ConfigError);
    }
    SECTION("zero multiplier") {
        w.seasonal[2] = 0.0;
        CHECK_THROWS_AS(w.validate(), ConfigError);
    }
}
