#include <doctest.h>

#include "taylor/params.hpp"

#include <cmath>
#include <random>

using namespace taylor;

TEST_CASE("kappa for resting outer cylinder") {
    const auto p = params_from_ratios(0.9, 0.0);
    CHECK(p.kappa == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("alpha from the ratio pair (0.95, 0.9)") {
    const auto p = params_from_ratios(0.95, 0.9);
    CHECK(p.alpha == doctest::Approx(0.0025 / 0.0975).epsilon(1e-12));
}

TEST_CASE("taylor number from laboratory geometry") {
    CylinderGeometry g{1.0, 2.0, 10.0, 0.0, 1.0};
    const auto p = nondimensionalize(g);
    CHECK(p.eta == doctest::Approx(0.5));
    CHECK(p.mu == doctest::Approx(0.0));
    CHECK(p.taylor == doctest::Approx(4.0 * 16.0 * 100.0 * 0.0625 / 0.5625).epsilon(1e-13));
    CHECK(p.lambda == doctest::Approx(std::sqrt(p.taylor)));
}

TEST_CASE("degenerate rotation ratio rejected") {
    CylinderGeometry g{1.0, 2.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(nondimensionalize(g), ValidationError);
    CHECK_THROWS_AS(params_from_ratios(0.5, 1.0), ValidationError);
}

TEST_CASE("rayleigh-stable regime flagged but not rejected") {
    const auto p = params_from_ratios(0.9, 0.85);  // mu > eta^2 = 0.81
    CHECK(p.rayleigh_stable_regime);
    CHECK(rayleigh_stable(p));
}

TEST_CASE("couette coefficients and boundary identities") {
    CylinderGeometry g{1.0, 2.0, 1.0, 0.0, 1.0};
    const auto v = couette_profile(g);
    CHECK(v.a_coef == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));
    CHECK(v.b_coef == doctest::Approx(4.0 / 3.0).epsilon(1e-14));

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> radii(0.2, 3.0), omegas(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        CylinderGeometry gg;
        gg.r1 = radii(rng);
        gg.r2 = gg.r1 + radii(rng);
        gg.omega1 = omegas(rng);
        if (gg.omega1 == 0) gg.omega1 = 1.0;
        gg.omega2 = omegas(rng);
        gg.nu = 0.5 + radii(rng);
        const auto vv = couette_profile(gg);
        CHECK(vv(gg.r1) == doctest::Approx(gg.omega1 * gg.r1).epsilon(1e-12));
        CHECK(vv(gg.r2) == doctest::Approx(gg.omega2 * gg.r2).epsilon(1e-12));
    }
}

TEST_CASE("rayleigh criterion boundary goes to the unstable-candidate side") {
    CHECK(rayleigh_stable(params_from_ratios(0.9, 0.9)));   // 0.9 > 0.81
    CHECK_FALSE(rayleigh_stable(params_from_ratios(0.9, 0.0)));
    const auto boundary = params_from_ratios(0.9, 0.81);
    CHECK_FALSE(rayleigh_stable(boundary));
}

TEST_CASE("kappa identity holds for random valid ratios") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> etas(0.05, 0.99), mus(-1.5, 0.95);
    for (int trial = 0; trial < 200; ++trial) {
        const double eta = etas(rng);
        const double mu = mus(rng);
        if (std::abs(1.0 - mu) < 1e-3) continue;
        const auto p = params_from_ratios(eta, mu);
        const double lhs = p.kappa * (1.0 - mu) + mu / (eta * eta);
        CHECK(std::abs(lhs - 1.0) < 1e-14 * std::max(1.0, std::abs(mu / (eta * eta))));
    }
}

TEST_CASE("nondimensionalization is scale invariant") {
    CylinderGeometry g{0.9, 1.3, 2.0, 0.4, 0.7};
    const auto p = nondimensionalize(g);
    for (double c : {0.1, 3.0, 42.0}) {
        CylinderGeometry s{g.r1 * c, g.r2 * c, g.omega1, g.omega2, g.nu * c * c};
        const auto q = nondimensionalize(s);
        CHECK(q.eta == doctest::Approx(p.eta).epsilon(1e-13));
        CHECK(q.mu == doctest::Approx(p.mu).epsilon(1e-13));
        CHECK(q.taylor == doctest::Approx(p.taylor).epsilon(1e-12));
    }
}
