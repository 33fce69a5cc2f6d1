#include <doctest.h>

#include "taylor/dns.hpp"

#include <cmath>

using namespace taylor;

namespace {

struct Setup {
    SystemKernel kernel;
    StabilityMode mode;
    AdjointMode adj;
    double t_c;
};

const Setup& wide_gap() {
    static const Setup s = [] {
        Setup out{make_cylindrical_kernel(params_from_ratios(0.9, 0.0), 64), {}, {}, 0};
        out.mode = solve_marginal(out.kernel, 31.0);
        out.adj = solve_adjoint(out.kernel, 31.0, out.mode.lambda0);
        out.t_c = out.mode.lambda0 * out.mode.lambda0;
        return out;
    }();
    return s;
}

DnsConfig base_config() {
    DnsConfig cfg;
    cfg.eta = 0.9;
    cfg.mu = 0.0;
    cfg.length = 2.0 * kPi / 31.0;
    cfg.nr = 48;
    cfg.nz = 48;
    cfg.dt = suggested_dt(0.9);
    cfg.sample_every = 50;
    return cfg;
}

}  // namespace

TEST_CASE("pure diffusion decays monotonically") {
    const auto& s = wide_gap();
    DnsConfig cfg = base_config();
    cfg.taylor = 0.0;
    cfg.t_end = 0.008;
    cfg.init = DnsInit::Random;
    cfg.eps = 1e-3;
    cfg.seed = 42;
    const auto res = run_dns(cfg, s.kernel, s.mode, s.adj);
    REQUIRE_FALSE(res.series.aborted);
    const auto& ss = res.series.samples;
    REQUIRE(ss.size() > 4);
    for (size_t i = 1; i < ss.size(); ++i) CHECK(ss[i].energy < ss[i - 1].energy * (1 + 1e-12));
    CHECK(ss.back().energy < 0.2 * ss.front().energy);
}

TEST_CASE("eigen seed projects to its own amplitude") {
    const auto& s = wide_gap();
    DnsConfig cfg = base_config();
    cfg.taylor = 0.5 * s.t_c;
    cfg.t_end = 10 * cfg.dt;
    cfg.init = DnsInit::EigenSeed;
    cfg.eps = 1e-3;
    const auto res = run_dns(cfg, s.kernel, s.mode, s.adj);
    CHECK(res.series.samples.front().amp == doctest::Approx(1e-3).epsilon(1e-3));
    CHECK(std::abs(res.series.samples.front().amp_partner) < 1e-12);
}

TEST_CASE("subcritical decay rate matches the stability rate") {
    const auto& s = wide_gap();
    DnsConfig cfg = base_config();
    cfg.nr = cfg.nz = 64;
    cfg.taylor = 0.9 * s.t_c;
    cfg.init = DnsInit::EigenSeed;
    cfg.eps = 1e-4;
    const double expected = growth_rate(s.kernel, s.mode.a, std::sqrt(cfg.taylor));
    cfg.t_end = 1.5 / std::abs(expected);
    const auto res = run_dns(cfg, s.kernel, s.mode, s.adj);
    REQUIRE_FALSE(res.series.aborted);
    const auto fit = fit_exponential_rate(res.series, 0.3, 1.0);
    CHECK(std::abs(fit.rate - expected) < 0.05 * std::abs(expected));
}

TEST_CASE("supercritical growth rate matches the stability rate") {
    const auto& s = wide_gap();
    DnsConfig cfg = base_config();
    cfg.nr = cfg.nz = 64;
    cfg.taylor = 1.1 * s.t_c;
    cfg.init = DnsInit::EigenSeed;
    cfg.eps = 1e-7;
    const double expected = growth_rate(s.kernel, s.mode.a, std::sqrt(cfg.taylor));
    cfg.t_end = 1.5 / expected;
    const auto res = run_dns(cfg, s.kernel, s.mode, s.adj);
    REQUIRE_FALSE(res.series.aborted);
    const auto fit = fit_exponential_rate(res.series, 0.3, 1.0);
    CHECK(std::abs(fit.rate - expected) < 0.05 * expected);
}

TEST_CASE("cross-channel flux stays pinned for mean-free initial data") {
    const auto& s = wide_gap();
    DnsConfig cfg = base_config();
    cfg.taylor = 1.05 * s.t_c;
    cfg.t_end = 0.01;
    cfg.init = DnsInit::Random;
    cfg.eps = 1e-3;
    cfg.seed = 7;
    const auto res = run_dns(cfg, s.kernel, s.mode, s.adj);
    REQUIRE_FALSE(res.series.aborted);
    for (const auto& smp : res.series.samples) {
        const double unorm = std::sqrt(2.0 * smp.energy);
        CHECK(std::abs(smp.flux) <= 1e-8 * std::max(unorm, 1e-12));
    }
}

TEST_CASE("snapshot restart continues the trajectory") {
    const auto& s = wide_gap();
    DnsConfig cfg = base_config();
    cfg.taylor = 1.02 * s.t_c;
    cfg.t_end = 40 * cfg.dt;
    cfg.sample_every = 10;
    cfg.init = DnsInit::EigenSeed;
    cfg.eps = 1e-3;
    const auto full = run_dns(cfg, s.kernel, s.mode, s.adj);

    DnsConfig first = cfg;
    first.t_end = 20 * cfg.dt;
    const auto half = run_dns(first, s.kernel, s.mode, s.adj);
    write_snapshot("/tmp/taylor_dns_restart.bin", half.final_state);
    DnsConfig second = cfg;
    second.t_end = 20 * cfg.dt;
    second.init = DnsInit::Snapshot;
    second.snapshot_path = "/tmp/taylor_dns_restart.bin";
    const auto resumed = run_dns(second, s.kernel, s.mode, s.adj);

    const double a_full = full.series.samples.back().amp;
    const double a_res = resumed.series.samples.back().amp;
    CHECK(a_res == doctest::Approx(a_full).epsilon(5e-3));
}

TEST_CASE("saturated states are axial translates of one another") {
    const auto& s = wide_gap();
    DnsConfig cfg = base_config();
    cfg.taylor = 1.1 * s.t_c;
    cfg.init = DnsInit::EigenSeed;
    const double beta1 = growth_rate(s.kernel, s.mode.a, std::sqrt(cfg.taylor));
    cfg.eps = 10.0;  // near the attractor already
    cfg.t_end = 3.0 / beta1;
    const auto res = run_dns(cfg, s.kernel, s.mode, s.adj);
    REQUIRE_FALSE(res.series.aborted);

    // Shift the final state by a quarter period and continue briefly: the
    // energy must not move (the attractor is a circle of translates).
    FieldSnapshot shifted = res.final_state;
    const Index nz = shifted.z_nodes.size();
    const Index quarter = nz / 4;
    auto roll = [&](Mat& m) {
        const Mat copy = m;
        for (Index j = 0; j < nz; ++j) m.col(j) = copy.col((j + quarter) % nz);
    };
    roll(shifted.u_z);
    roll(shifted.u_r);
    roll(shifted.u_theta);
    write_snapshot("/tmp/taylor_dns_shifted.bin", shifted);
    DnsConfig cont = cfg;
    cont.t_end = 0.3 / beta1;
    cont.init = DnsInit::Snapshot;
    cont.snapshot_path = "/tmp/taylor_dns_shifted.bin";
    const auto res2 = run_dns(cont, s.kernel, s.mode, s.adj);
    const double e1 = res.series.samples.back().energy;
    const double e2 = res2.series.samples.back().energy;
    CHECK(e2 == doctest::Approx(e1).epsilon(2e-2));
}

TEST_CASE("exponent fit identities and robustness") {
    // Synthetic data: A = c (T - Tc)^{1/2} recovers beta = 1/2 exactly.
    const double t_c = 100.0;
    std::vector<std::pair<double, double>> amps;
    for (double ratio : {1.02, 1.05, 1.1, 1.2})
        amps.emplace_back(ratio * t_c, 3.0 * std::sqrt(ratio * t_c - t_c));
    const auto fit = measure_exponent(amps, t_c);
    CHECK(fit.beta == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fit.n_used == 4);

    // One percent measurement noise moves the exponent by < 0.02.
    std::vector<std::pair<double, double>> noisy = amps;
    const double wiggle[4] = {1.01, 0.99, 1.008, 0.995};
    for (size_t i = 0; i < noisy.size(); ++i) noisy[i].second *= wiggle[i];
    const auto nfit = measure_exponent(noisy, t_c);
    CHECK(std::abs(nfit.beta - 0.5) < 0.02);

    // Fewer than three usable points is an error.
    std::vector<std::pair<double, double>> few = {{101.0, 1.0}, {99.0, 1.0}, {98.0, 0.5}};
    CHECK_THROWS_AS(measure_exponent(few, t_c), ValidationError);
}

TEST_CASE("descent protocol brackets the collapse threshold") {
    // For a continuous-transition case the large state survives above T_c and
    // collapses below it, so the bracket closes around T_c and no bistability
    // is found.
    const auto& s = wide_gap();
    DnsConfig cfg = base_config();
    cfg.nr = cfg.nz = 32;
    cfg.init = DnsInit::EigenSeed;
    cfg.eps = 10.0;
    const double beta_hi = growth_rate(s.kernel, s.mode.a, std::sqrt(1.1 * s.t_c));
    cfg.t_end = 4.0 / beta_hi;
    cfg.sample_every = 200;
    const auto bracket = bracket_Tstar(cfg, s.kernel, s.mode, s.adj, 1.1 * s.t_c, 0.8 * s.t_c,
                                       6, 1.0, true);
    CHECK(bracket.last_surviving > s.t_c * 0.99);
    CHECK(bracket.first_collapsing < bracket.last_surviving);
    CHECK(bracket.first_collapsing > 0.79 * s.t_c);
    CHECK_FALSE(bracket.bistable_confirmed);
}
