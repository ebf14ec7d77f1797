#include <complex>

#include <catch2/catch_amalgamated.hpp>

#include "gridres/powerflow.hpp"
#include "test_util.hpp"

using namespace gridres;

namespace {

/// Two buses at 1 kV nominal so ohms equal per-unit: slack feeding one load
/// over a single line of impedance z ohms.
Network two_bus_network(double r_ohm, double x_ohm) {
    Network net;
    net.buses.push_back({0, 1.0, 0.0, 0.0, "s"});
    net.buses.push_back({1, 1.0, 1.0, 0.0, "s"});
    ConductorType c;
    c.name = "test";
    c.r_per_km = r_ohm;
    c.x_per_km = x_ohm;
    c.max_current = 1.0;
    Line ln;
    ln.id = 1;
    ln.from_bus = 0;
    ln.to_bus = 1;
    ln.length_km = 1.0;
    ln.conductor = c;
    net.lines.push_back(ln);
    net.generators.push_back({1, 0, "", true, 1.0});
    net.bounds = {0, 1, 0, 1};
    net.finalize();
    return net;
}

PowerFlowSolution solve_radial(const testutil::RadialCase& rc,
                               const std::vector<char>* active = nullptr) {
    std::vector<char> all(rc.net.lines.size(), 1);
    AdmittanceMatrix adm = build_admittance(rc.net, active ? *active : all);
    std::vector<double> p(rc.net.buses.size(), 0.0), q(rc.net.buses.size(), 0.0);
    for (size_t l = 0; l < rc.net.loads.size(); ++l) {
        int b = rc.net.bus_index(rc.net.loads[l].bus);
        p[b] -= rc.load_mw[l];
        q[b] -= rc.load_mw[l] * 0.2;
    }
    return solve_power_flow(rc.net, adm, p, q);
}

} // namespace

TEST_CASE("admittance entries follow the textbook branch model", "[powerflow]") {
    SECTION("two-bus off-diagonal is -1/z") {
        Network net = two_bus_network(0.3, 0.4);
        AdmittanceMatrix adm = build_admittance(net, {1});
        REQUIRE(adm.size() == 2);
        std::complex<double> y = 1.0 / std::complex<double>(0.3, 0.4);
        int i = adm.pos_of_bus[0], j = adm.pos_of_bus[1];
        CHECK(std::abs(adm.at(i, j) + y) < 1e-12);
        CHECK(std::abs(adm.at(j, i) + y) < 1e-12);
        CHECK(std::abs(adm.at(i, i) - y) < 1e-12);
        CHECK(std::abs(adm.at(j, j) - y) < 1e-12);
    }
    SECTION("rural13 with all lines active spans all 14 buses") {
        Network net = testutil::load_rural13();
        std::vector<char> active(net.lines.size(), 1);
        AdmittanceMatrix adm = build_admittance(net, active);
        CHECK(adm.size() == 14);
    }
    SECTION("removing a ring line zeroes two off-diagonals and adjusts two diagonals") {
        Network net = testutil::load_rural13();
        std::vector<char> active(net.lines.size(), 1);
        AdmittanceMatrix full = build_admittance(net, active);
        int removed = net.line_index(13); // part of the ring: connectivity survives
        active[removed] = 0;
        AdmittanceMatrix cut = build_admittance(net, active);
        REQUIRE(cut.size() == full.size());
        int a = net.bus_index(net.lines[removed].from_bus);
        int b = net.bus_index(net.lines[removed].to_bus);
        int changed = 0;
        for (int i = 0; i < full.size(); ++i) {
            for (int j = 0; j < full.size(); ++j) {
                int bi = full.bus_idx[i], bj = full.bus_idx[j];
                std::complex<double> before = full.at(i, j);
                std::complex<double> after = cut.at(cut.pos_of_bus[bi], cut.pos_of_bus[bj]);
                if (std::abs(before - after) > 1e-12) {
                    ++changed;
                    bool on_branch = (bi == a || bi == b) && (bj == a || bj == b);
                    CHECK(on_branch);
                    if (bi != bj) {
                        CHECK(std::abs(after) < 1e-12);
                    }
                }
            }
        }
        CHECK(changed == 4);
    }
    SECTION("no active lines leaves the slack alone (no transformers)") {
        Network net = two_bus_network(0.1, 0.1);
        AdmittanceMatrix adm = build_admittance(net, {0});
        CHECK(adm.size() == 1);
        CHECK(adm.bus_idx[0] == net.slack_bus_index());
    }
}

TEST_CASE("zero injections give the flat no-load solution", "[powerflow]") {
    Network net = testutil::load_rural13();
    std::vector<char> active(net.lines.size(), 1);
    AdmittanceMatrix adm = build_admittance(net, active);
    std::vector<double> zeros(net.buses.size(), 0.0);
    PowerFlowSolution sol = solve_power_flow(net, adm, zeros, zeros);
    REQUIRE(sol.converged);
    CHECK(sol.iterations == 0);
    CHECK(sol.losses_mw == Catch::Approx(0.0).margin(1e-10));
    for (const auto& b : net.buses) {
        CHECK(sol.vm_pu[net.bus_index(b.id)] == Catch::Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("two-bus case matches the closed-form quadratic to 1e-8", "[powerflow]") {
    const double r = 0.05, x = 0.10; // ohms == per-unit at 1 kV, 1 MVA
    const double p_load = 0.3, q_load = 0.1;
    Network net = two_bus_network(r, x);
    AdmittanceMatrix adm = build_admittance(net, {1});
    std::vector<double> p{0.0, -p_load}, q{0.0, -q_load};
    PowerFlowSolution sol = solve_power_flow(net, adm, p, q);
    REQUIRE(sol.converged);

    // Independent closed form: V2 conj(V1 - V2) = S_load conj(z) with V1 = 1,
    // so Im part fixes b and a solves a quadratic; take the high-voltage root.
    std::complex<double> z(r, x);
    std::complex<double> rhs = std::complex<double>(p_load, q_load) * std::conj(z);
    double beta = rhs.imag();
    double alpha = rhs.real();
    double a = (1.0 + std::sqrt(1.0 - 4.0 * (alpha + beta * beta))) / 2.0;
    std::complex<double> v2(a, beta);

    CHECK(sol.vm_pu[1] == Catch::Approx(std::abs(v2)).margin(1e-8));
    CHECK(sol.va_rad[1] == Catch::Approx(std::arg(v2)).margin(1e-8));

    // and the slack covers load plus losses
    CHECK(sol.power_balance_mw(0.0, p_load) < 1e-6);
    double i2 = std::norm((std::complex<double>(1.0, 0.0) - v2) / z);
    CHECK(sol.losses_mw == Catch::Approx(i2 * r).margin(1e-8));
}

TEST_CASE("power balance holds on random radial networks", "[powerflow]") {
    Rng rng(314159);
    for (int rep = 0; rep < 50; ++rep) {
        auto rc = testutil::random_radial_network(rng, 10);
        PowerFlowSolution sol = solve_radial(rc);
        REQUIRE(sol.converged);
        double load = 0.0;
        for (double mw : rc.load_mw) {
            load += mw;
        }
        CHECK(sol.power_balance_mw(0.0, load) < 1e-6);
        CHECK(sol.losses_mw >= 0.0);
        CHECK(sol.slack_p_mw == Catch::Approx(load + sol.losses_mw).margin(1e-6));
    }
}

TEST_CASE("solution is invariant under bus reordering", "[powerflow]") {
    Rng rng(2718);
    auto rc = testutil::random_radial_network(rng, 8);
    PowerFlowSolution base = solve_radial(rc);
    REQUIRE(base.converged);

    // Same physical network, buses and lines listed in reverse order.
    testutil::RadialCase perm = rc;
    std::reverse(perm.net.buses.begin(), perm.net.buses.end());
    std::reverse(perm.net.lines.begin(), perm.net.lines.end());
    perm.net.finalize();
    PowerFlowSolution reordered = solve_radial(perm);
    REQUIRE(reordered.converged);
    for (const auto& b : rc.net.buses) {
        double v1 = base.vm_pu[rc.net.bus_index(b.id)];
        double v2 = reordered.vm_pu[perm.net.bus_index(b.id)];
        CHECK(v1 == Catch::Approx(v2).margin(1e-9));
    }
    CHECK(base.losses_mw == Catch::Approx(reordered.losses_mw).margin(1e-9));
}

TEST_CASE("lowering conductor resistance never raises losses", "[powerflow]") {
    Rng rng(1618);
    for (int rep = 0; rep < 10; ++rep) {
        auto rc = testutil::random_radial_network(rng, 8);
        PowerFlowSolution before = solve_radial(rc);
        testutil::RadialCase better = rc;
        for (auto& ln : better.net.lines) {
            ln.conductor.r_per_km *= 0.5;
        }
        PowerFlowSolution after = solve_radial(better);
        REQUIRE(before.converged);
        REQUIRE(after.converged);
        CHECK(after.losses_mw <= before.losses_mw + 1e-9);
    }
}

TEST_CASE("hopeless loading reports non-convergence instead of lying", "[powerflow]") {
    Network net = two_bus_network(0.5, 1.0);
    AdmittanceMatrix adm = build_admittance(net, {1});
    std::vector<double> p{0.0, -50.0}, q{0.0, -20.0}; // far beyond the feeder limit
    PowerFlowSolution sol = solve_power_flow(net, adm, p, q);
    CHECK_FALSE(sol.converged);
    CHECK(sol.mismatch > 0.0);
}

TEST_CASE("line loadings convert current to the conductor rating", "[powerflow]") {
    Network net = two_bus_network(0.05, 0.1);
    AdmittanceMatrix adm = build_admittance(net, {1});
    std::vector<double> p{0.0, -0.3}, q{0.0, -0.1};
    PowerFlowSolution sol = solve_power_flow(net, adm, p, q);
    REQUIRE(sol.converged);
    // |S| at the receiving end over |V| gives the current; base 1 MVA at 1 kV.
    double s_to = std::hypot(sol.line_p_to_mw[0], sol.line_q_to_mvar[0]);
    double i_pu = s_to / sol.vm_pu[1];
    double i_ka = i_pu * 1.0 / (std::sqrt(3.0) * 1.0);
    CHECK(sol.line_loading[0] == Catch::Approx(i_ka / 1.0).epsilon(1e-6));
}
