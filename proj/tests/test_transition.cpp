#include <doctest.h>

#include "taylor/transition.hpp"

#include <cmath>

using namespace taylor;

TEST_CASE("classification follows the sign of R") {
    CHECK(classify(-0.5, 1e-8) == TransitionType::TypeI_continuous);
    CHECK(classify(0.5, 1e-8) == TransitionType::TypeII_jump);
    CHECK(classify(0.0, 1e-8) == TransitionType::Indeterminate);
    CHECK(classify(5e-9, 1e-8) == TransitionType::Indeterminate);
    // Gauge invariance: scaling R by c^2 never flips the classification.
    for (double c : {0.25, 4.0, 100.0}) {
        const double r = -0.37;
        CHECK(classify(c * c * r, classification_tol(c * c * r, 1.0, 1.0)) ==
              classify(r, classification_tol(r, 1.0, 1.0)));
    }
}

TEST_CASE("bifurcated amplitude follows the square-root law") {
    CHECK(bifurcated_amplitude(0.01, -1.0) == doctest::Approx(0.1));
    CHECK(bifurcated_amplitude(0.0, -2.0) == 0.0);
    CHECK(bifurcated_amplitude(0.02, -1.0) ==
          doctest::Approx(std::sqrt(2.0) * bifurcated_amplitude(0.01, -1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(bifurcated_amplitude(0.01, 0.5), ValidationError);
}

TEST_CASE("origin is a fixed point of the reduced flow") {
    const auto traj = integrate_reduced(0.0, 0.0, 0.3, -1.0, 10.0, 1e-2);
    for (const auto& s : traj.states) {
        CHECK(s.x == 0.0);
        CHECK(s.y == 0.0);
    }
}

TEST_CASE("supercritical trajectories settle on the circle") {
    const double beta1 = 0.04, R = -1.0;
    const auto traj = integrate_reduced(0.05, 0.02, beta1, R, 500.0, 1e-3);
    REQUIRE_FALSE(traj.escaped);
    const auto& last = traj.states.back();
    CHECK(std::hypot(last.x, last.y) == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("integrator matches the closed-form radial solution") {
    const double beta1 = 0.8, R = -2.0, r0 = 0.07;
    const auto traj = integrate_reduced(r0, 0.0, beta1, R, 6.0, 1e-3);
    for (size_t i = 0; i < traj.states.size(); i += 500) {
        const auto& s = traj.states[i];
        const double expect = std::sqrt(reduced_radius_squared(r0, beta1, R, s.t));
        CHECK(std::hypot(s.x, s.y) == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("rotational equivariance of the reduced flow") {
    const double beta1 = 0.1, R = -1.0, angle = 1.1;
    const auto base = integrate_reduced(0.1, 0.0, beta1, R, 20.0, 1e-2);
    const double c = std::cos(angle), s = std::sin(angle);
    const auto rotated = integrate_reduced(0.1 * c, 0.1 * s, beta1, R, 20.0, 1e-2);
    REQUIRE(base.states.size() == rotated.states.size());
    for (size_t i = 0; i < base.states.size(); i += 100) {
        const double rx = c * base.states[i].x - s * base.states[i].y;
        const double ry = s * base.states[i].x + c * base.states[i].y;
        CHECK(rotated.states[i].x == doctest::Approx(rx).epsilon(1e-10));
        CHECK(rotated.states[i].y == doctest::Approx(ry).epsilon(1e-10));
    }
}

TEST_CASE("subcritical jump dynamics escapes the validity region") {
    // R > 0 and beta1 > 0: every nonzero start blows past the cap.
    const auto traj = integrate_reduced(0.05, 0.0, 0.1, 1.0, 200.0, 1e-2);
    CHECK(traj.escaped);
    // Inside the subcritical circle (beta1 < 0 < R) the origin attracts.
    const double beta1 = -0.09, R = 1.0;
    const double unstable_radius = std::sqrt(-beta1 / R);
    const auto settle = integrate_reduced(0.5 * unstable_radius, 0.0, beta1, R, 300.0, 1e-2);
    CHECK_FALSE(settle.escaped);
    CHECK(std::hypot(settle.states.back().x, settle.states.back().y) < 1e-6);
    // Outside it the state runs away.
    const auto runaway = integrate_reduced(1.5 * unstable_radius, 0.0, beta1, R, 300.0, 1e-2);
    CHECK(runaway.escaped);
}

TEST_CASE("report assembly composes the pipeline pieces") {
    CriticalPoint cp;
    cp.a_c = 3.117;
    cp.L_c = 2 * kPi / cp.a_c;
    cp.lambda_c = 41.33;
    cp.T_c = cp.lambda_c * cp.lambda_c;
    TransitionCoefficient tc;
    tc.R = tc.R_explicit = tc.R_inner = -2.0;
    tc.rho = 1.4;
    GrowthCurve gc;
    gc.lambda_c = cp.lambda_c;
    gc.lambdas = Vec::LinSpaced(5, 0.99 * cp.lambda_c, 1.01 * cp.lambda_c);
    gc.betas = Vec::LinSpaced(5, -0.1, 0.1);
    PesReport pes;
    pes.pes_ok = true;
    SystemKernel kernel;
    kernel.label = "narrowgap_symmetric";
    kernel.grid.n_interior = 64;
    kernel.pes_guaranteed = true;

    const auto rep = assemble_report(cp, tc, pes, gc, kernel);
    CHECK(rep.type == TransitionType::TypeI_continuous);
    REQUIRE_FALSE(rep.amplitude_law.empty());
    // Amplitude law is monotone in lambda and matches the closed form.
    double prev = -1;
    for (const auto& [lam, radius] : rep.amplitude_law) {
        CHECK(radius >= prev);
        prev = radius;
    }
    CHECK(rep.amplitude_law.back().second ==
          doctest::Approx(std::sqrt(0.1 / 2.0)).epsilon(1e-12));

    // Type-II report has no amplitude law.
    tc.R = tc.R_explicit = tc.R_inner = 2.0;
    const auto rep2 = assemble_report(cp, tc, pes, gc, kernel);
    CHECK(rep2.type == TransitionType::TypeII_jump);
    CHECK(rep2.amplitude_law.empty());
    CHECK(rep2.note.find("hysteresis") != std::string::npos);

    // Indeterminate coefficient demands more resolution.
    tc.R = tc.R_explicit = tc.R_inner = 0.0;
    tc.degenerate = true;
    const auto rep3 = assemble_report(cp, tc, pes, gc, kernel);
    CHECK(rep3.type == TransitionType::Indeterminate);
    CHECK(rep3.note.find("resolution") != std::string::npos);

    // Mixed provenance rejected.
    GrowthCurve bad = gc;
    bad.lambda_c = 1.07 * cp.lambda_c;
    CHECK_THROWS_AS(assemble_report(cp, tc, pes, bad, kernel), ValidationError);
}
