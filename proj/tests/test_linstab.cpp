#include <doctest.h>

#include "taylor/linstab.hpp"
#include "support/fd_oracle.hpp"

#include <cmath>

using namespace taylor;

TEST_CASE("gap-scaled symmetric system reproduces the classical anchor") {
    const auto kernel = make_narrowgap_kernel(1.0, NarrowGapVariant::Symmetric, 96);
    const auto cp = find_critical(kernel, 1.0, 8.0, 1e-5);
    CHECK(cp.a_c == doctest::Approx(3.117).epsilon(0.0018));
    CHECK(cp.lambda_c * cp.lambda_c == doctest::Approx(1707.762).epsilon(0.0003));
    CHECK(cp.T_c == doctest::Approx(cp.lambda_c * cp.lambda_c));

    // Independent dense finite-difference oracle.
    const auto orc = oracle::minimize_lambda2(600);
    CHECK(std::abs(cp.lambda_c * cp.lambda_c - orc.lambda2_c) < 1e-3 * orc.lambda2_c);
    CHECK(std::abs(cp.a_c - orc.a_c) < 5e-3);
}

TEST_CASE("marginal solve meets its residual and positivity contract") {
    const auto p = params_from_ratios(0.9, 0.0);
    const auto kernel = make_cylindrical_kernel(p, 64);
    const auto mode = solve_marginal(kernel, 31.0);
    CHECK(mode.lambda0 > 0);
    CHECK(mode.residual_h < 1e-8);
    CHECK(mode.residual_phi < 1e-8);
    CHECK(mode.interior_positive);
    CHECK(mode.h.maxCoeff() == doctest::Approx(1.0));
    CHECK_FALSE(mode.near_degenerate);
}

TEST_CASE("adjoint shares the marginal value and positivity") {
    for (auto [eta, mu] : {std::pair{0.9, 0.0}, std::pair{0.7, 0.3}}) {
        const auto p = params_from_ratios(eta, mu);
        const auto kernel = make_cylindrical_kernel(p, 64);
        const double a = 3.1 / (1.0 - eta);
        const auto mode = solve_marginal(kernel, a);
        const auto adj = solve_adjoint(kernel, a, mode.lambda0);
        CHECK(std::abs(adj.lambda0 - mode.lambda0) <= 1e-8 * mode.lambda0);
        CHECK(adj.residual_h < 1e-8);
        CHECK(adj.residual_phi < 1e-8);
        CHECK(adj.interior_positive);
    }
}

TEST_CASE("eigenvalue converges under finite-difference refinement") {
    const auto p = params_from_ratios(0.9, 0.0);
    const double a = 31.0;
    auto lam = [&](int n) {
        return solve_marginal(make_cylindrical_kernel(p, n, Scheme::FiniteDifference), a).lambda0;
    };
    const double l64 = lam(64), l128 = lam(128), l256 = lam(256);
    const double c1 = std::abs(l64 - l128);
    const double c2 = std::abs(l128 - l256);
    CHECK(c2 < c1 / 2.5);  // second-order scheme
}

TEST_CASE("collocation agrees with the finite-difference path") {
    const auto p = params_from_ratios(0.9, 0.0);
    const double a = 31.0;
    const double spectral = solve_marginal(make_cylindrical_kernel(p, 64), a).lambda0;
    const double fd = solve_marginal(make_cylindrical_kernel(p, 384, Scheme::FiniteDifference), a)
                          .lambda0;
    CHECK(rel_diff(spectral, fd) < 2e-3);
}

TEST_CASE("critical point of the wide-gap family") {
    const auto p = params_from_ratios(0.9, 0.0);
    const auto kernel = make_cylindrical_kernel(p, 48);
    const auto cp = find_critical(kernel, 10.0, 80.0, 1e-3);
    CHECK(cp.a_c * (1.0 - p.eta) == doctest::Approx(3.1).epsilon(0.05));
    CHECK(cp.interior_minimum);
    const double at_c = solve_marginal(kernel, cp.a_c).lambda0;
    CHECK(solve_marginal(kernel, cp.a_c + 0.1).lambda0 >= at_c * (1 - 1e-9));
    CHECK(solve_marginal(kernel, cp.a_c - 0.1).lambda0 >= at_c * (1 - 1e-9));
    CHECK(cp.T_c == doctest::Approx(cp.lambda_c * cp.lambda_c));
}

TEST_CASE("critical search rejects edge minima") {
    const auto p = params_from_ratios(0.9, 0.0);
    const auto kernel = make_cylindrical_kernel(p, 48);
    CHECK_THROWS_WITH_AS(find_critical(kernel, 1.0, 8.0, 1e-3),
                         "critical wavenumber outside scan range", SolverError);
}

TEST_CASE("no marginal value when the exchange coupling degenerates") {
    const auto p = params_from_ratios(0.9, 0.81);  // kappa = 0
    const auto kernel = make_cylindrical_kernel(p, 48);
    CHECK_THROWS_AS(solve_marginal(kernel, 31.0), SolverError);
}

TEST_CASE("growth rate crosses zero transversally at the marginal value") {
    const auto p = params_from_ratios(0.9, 0.0);
    const auto kernel = make_cylindrical_kernel(p, 64);
    const double a = 31.0;
    const auto mode = solve_marginal(kernel, a);
    const double l0 = mode.lambda0;

    const double beta0 = growth_rate(kernel, a, l0);
    const double slope = (growth_rate(kernel, a, l0 * 1.001) - growth_rate(kernel, a, l0 * 0.999)) /
                         (0.002 * l0);
    CHECK(std::abs(beta0) <= 1e-6 * std::max(1.0, slope * l0));
    CHECK(growth_rate(kernel, a, 1.01 * l0) > 0);
    CHECK(growth_rate(kernel, a, 0.99 * l0) < 0);
    CHECK(slope > 0);

    // Slope from a twice-coarser stencil agrees (smoothness self-consistency).
    const double slope2 =
        (growth_rate(kernel, a, l0 * 1.002) - growth_rate(kernel, a, l0 * 0.998)) / (0.004 * l0);
    CHECK(rel_diff(slope, slope2) < 1e-4);
}

TEST_CASE("growth curve brackets the critical value") {
    const auto kernel = make_narrowgap_kernel(1.0, NarrowGapVariant::Symmetric, 64);
    const auto mode = solve_marginal(kernel, 3.117);
    const auto gc = growth_curve(kernel, 3.117, mode.lambda0, 0.02, 5);
    CHECK(gc.betas(0) < 0);
    CHECK(gc.betas(gc.betas.size() - 1) > 0);
    CHECK(gc.slope_at_critical > 0);
}

TEST_CASE("pes pairing is positive and bilinear for co-rotation") {
    const auto p = params_from_ratios(0.9, 0.0);
    const auto kernel = make_cylindrical_kernel(p, 64);
    const double a = 31.0;
    const auto mode = solve_marginal(kernel, a);
    auto adj = solve_adjoint(kernel, a, mode.lambda0);
    const auto rep = pes_check(kernel, mode, adj);
    CHECK(rep.pairing > 0);
    CHECK(rep.pairing_nonzero);
    CHECK(rep.h_positive);
    CHECK(rep.phi_positive);
    CHECK(rep.hstar_positive);
    CHECK(rep.phistar_positive);
    CHECK(rep.integrand_positive);
    CHECK(rep.growth_slope > 0);
    CHECK(rep.pes_ok);

    const double base = rep.pairing;
    adj.hstar *= 2.5;
    adj.phistar *= 2.5;
    const auto scaled = pes_check(kernel, mode, adj);
    CHECK(scaled.pairing == doctest::Approx(2.5 * base).epsilon(1e-12));
}

TEST_CASE("perturbation identity: pairing over rho equals the growth slope") {
    const auto p = params_from_ratios(0.9, 0.0);
    const auto kernel = make_cylindrical_kernel(p, 64);
    const double a = 31.0;
    const auto mode = solve_marginal(kernel, a);
    const auto adj = solve_adjoint(kernel, a, mode.lambda0);
    const auto rep = pes_check(kernel, mode, adj);
    const double rho = mode_rho(kernel, mode, adj);
    CHECK(rep.pairing / rho == doctest::Approx(rep.growth_slope).epsilon(5e-4));
}

TEST_CASE("full narrow-gap variant approaches the symmetric limit") {
    const double sym = solve_marginal_narrowgap(1.0, 3.117, NarrowGapVariant::Symmetric, 64)
                           .lambda0;
    const double full999 =
        solve_marginal_narrowgap(0.999, 3.117, NarrowGapVariant::Full, 64).lambda0;
    CHECK(rel_diff(sym, full999) < 1e-3);
    const double full9 = solve_marginal_narrowgap(0.9, 3.117, NarrowGapVariant::Full, 64).lambda0;
    CHECK(full9 > sym);  // weaker drive raises the marginal value
}

TEST_CASE("counter-rotation kernels are stamped unverified") {
    const auto p = params_from_ratios(0.9, -0.3);
    const auto kernel = make_cylindrical_kernel(p, 48);
    CHECK_FALSE(kernel.pes_guaranteed);
}
