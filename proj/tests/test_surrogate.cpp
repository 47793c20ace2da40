#include <doctest.h>

#include <cmath>

#include "xfmr/rng.hpp"
#include "xfmr/surrogate.hpp"

using namespace xfmr;

TEST_SUITE_BEGIN("surrogate");

namespace {

TechnologyProfile test_tech() {
    TechnologyProfile t;
    t.name = "test";
    t.sigma = 2.8e7;
    t.t_metal = 3.0;
    t.h_gap = 1.7;
    t.k_max = 0.9;
    t.freq = 30.0;
    t.z_load = 50.0;
    return t;
}

}  // namespace

TEST_CASE("symmetric windings give equal inductance") {
    const auto y = geometry_to_circuit({80, 6, 6}, test_tech());
    CHECK(y.l_p == y.l_s);
    CHECK(y.q_p == y.q_s);
}

TEST_CASE("hand-evaluated inductance closed form") {
    // d_out=80, w=6: d_avg=74 um, rho=6/74,
    // L = 2.25 * mu0 * 74e-6 / (1 + 3.55 * 6/74) = 1.6247e-10 H
    const auto y = geometry_to_circuit({80, 6, 6}, test_tech());
    const double expect = 2.25 * kMu0 * 74e-6 / (1.0 + 3.55 * 6.0 / 74.0);
    CHECK(y.l_p == doctest::Approx(expect).epsilon(1e-12));
    CHECK(y.l_p == doctest::Approx(0.16247e-9).epsilon(1e-3));
}

TEST_CASE("larger outer diameter gives larger inductance") {
    const auto small = geometry_to_circuit({60, 6, 6}, test_tech());
    const auto large = geometry_to_circuit({110, 6, 6}, test_tech());
    CHECK(large.l_p > small.l_p);
}

TEST_CASE("invalid geometry rejected") {
    CHECK_THROWS_AS(geometry_to_circuit({20, 10, 10}, test_tech()), std::domain_error);
    CHECK_THROWS_AS(geometry_to_circuit({80, -1, 6}, test_tech()), std::domain_error);
    // boundary: d_out exactly 2*w is still invalid
    CHECK_THROWS_AS(geometry_to_circuit({20.0, 10.0, 8.0}, test_tech()), std::domain_error);
}

TEST_CASE("circuit params satisfy their invariants") {
    const auto tech = test_tech();
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const double d = rng.uniform(30, 150);
        const double wp = rng.uniform(1, d / 2.0 * 0.9);
        const double ws = rng.uniform(1, d / 2.0 * 0.9);
        const auto y = geometry_to_circuit({d, wp, ws}, tech);
        CHECK(y.l_p > 0);
        CHECK(y.l_s > 0);
        CHECK(y.k > 0);
        CHECK(y.k < 1);
        CHECK(y.q_p > 0);
        CHECK(y.q_s > 0);
    }
}

TEST_CASE("decoupled windings reduce to the primary branch") {
    const auto tech = test_tech();
    CircuitParams y{0.16e-9, 0.2e-9, 0.0, 15.0, 12.0};
    const auto z = input_impedance(y, {0, 0}, tech);
    const double omega = tech.omega();
    CHECK(z.re == doctest::Approx(omega * y.l_p / y.q_p).epsilon(1e-12));
    CHECK(z.im == doctest::Approx(omega * y.l_p).epsilon(1e-12));

    // independent of the load when k = 0
    TechnologyProfile other = tech;
    other.z_load = 120.0;
    const auto z2 = input_impedance(y, {0, 0}, other);
    CHECK(z.re == z2.re);
    CHECK(z.im == z2.im);
}

TEST_CASE("open-circuit capacitors drop out") {
    const auto tech = test_tech();
    CircuitParams y{0.16e-9, 0.16e-9, 0.6, 15.0, 15.0};
    const auto z = input_impedance(y, {0, 0}, tech);
    const double omega = tech.omega();
    const double m = y.k * std::sqrt(y.l_p * y.l_s);
    const double wm2 = omega * m * omega * m;
    const std::complex<double> z_sec(omega * y.l_s / y.q_s + tech.z_load, omega * y.l_s);
    const std::complex<double> expect =
        std::complex<double>(omega * y.l_p / y.q_p, omega * y.l_p) + wm2 / z_sec;
    CHECK(z.re == doctest::Approx(expect.real()).epsilon(1e-12));
    CHECK(z.im == doctest::Approx(expect.imag()).epsilon(1e-12));
}

TEST_CASE("representative mid-grid point is passive and finite") {
    const auto tech = test_tech();
    CircuitParams y{0.16e-9, 0.16e-9, 0.6, 15.0, 15.0};
    const auto z = input_impedance(y, {100, 100}, tech);
    CHECK(z.re > 0);
    CHECK(std::isfinite(z.re));
    CHECK(std::isfinite(z.im));
}

TEST_CASE("passivity and swap symmetry over random valid inputs") {
    auto tech = test_tech();
    Rng rng(42);
    for (int i = 0; i < 2000; ++i) {
        tech.freq = rng.uniform(10, 60);
        tech.h_gap = rng.uniform(0.5, 4.0);
        tech.k_max = rng.uniform(0.5, 0.98);
        const double d = rng.uniform(30, 150);
        const Geometry g{d, rng.uniform(1, d / 2.0 * 0.95), rng.uniform(1, d / 2.0 * 0.95)};
        const TuningCaps caps{rng.uniform(0, 300), rng.uniform(0, 300)};
        const auto y = geometry_to_circuit(g, tech);
        const auto z = input_impedance(y, caps, tech);
        REQUIRE(z.re > 0);

        // w_p <-> w_s swap: k unchanged, (l, q) pairs swapped, bit exact
        const Geometry swapped{g.d_out, g.w_s, g.w_p};
        const auto ys = geometry_to_circuit(swapped, tech);
        REQUIRE(ys.k == y.k);
        REQUIRE(ys.l_p == y.l_s);
        REQUIRE(ys.l_s == y.l_p);
        REQUIRE(ys.q_p == y.q_s);
        REQUIRE(ys.q_s == y.q_p);
    }
}

TEST_CASE("reactance grows linearly with frequency when decoupled") {
    auto tech = test_tech();
    CircuitParams y{0.2e-9, 0.2e-9, 0.0, 15.0, 15.0};
    tech.freq = 20;
    const auto z20 = input_impedance(y, {0, 0}, tech);
    tech.freq = 40;
    const auto z40 = input_impedance(y, {0, 0}, tech);
    CHECK(z40.im == doctest::Approx(2.0 * z20.im).epsilon(1e-12));
}

TEST_CASE("determinism") {
    const auto tech = test_tech();
    const Geometry g{83.7, 5.3, 9.1};
    const auto y1 = geometry_to_circuit(g, tech);
    const auto y2 = geometry_to_circuit(g, tech);
    CHECK(y1.l_p == y2.l_p);
    CHECK(y1.k == y2.k);
    const auto z1 = input_impedance(y1, {37.5, 81.25}, tech);
    const auto z2 = input_impedance(y2, {37.5, 81.25}, tech);
    CHECK(z1.re == z2.re);
    CHECK(z1.im == z2.im);
}

TEST_CASE("profile loading and lookup") {
    const Config cfg = Config::parse_string(R"(
[profile.alpha]
sigma = 2.8e7
t_metal = 3.0
h_gap = 1.7
k_max = 0.9
freq = 30
z_load = 50
)");
    const auto techs = load_technologies(cfg);
    REQUIRE(techs.count("alpha") == 1);
    CHECK(techs.at("alpha").freq == 30);
    CHECK_THROWS_WITH_AS(find_technology(cfg, "beta"), "unknown technology profile: beta",
                         ConfigError);
}

TEST_CASE("profile validation names the field") {
    const Config cfg = Config::parse_string(R"(
[profile.bad]
sigma = -1
t_metal = 3.0
h_gap = 1.7
k_max = 0.9
freq = 30
z_load = 50
)");
    CHECK_THROWS_WITH_AS(load_technologies(cfg), "technology profile 'bad': invalid sigma",
                         std::invalid_argument);
}

TEST_SUITE_END();
