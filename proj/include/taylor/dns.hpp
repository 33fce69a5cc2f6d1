#pragma once

#include "taylor/fields.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace taylor {

enum class DnsInit { EigenSeed, Random, Snapshot };

struct DnsConfig {
    double eta = 0.9;
    double mu = 0.0;
    double taylor = 0.0;   ///< Taylor number of the run
    double length = 0.0;   ///< axial period
    int nr = 64;           ///< radial panels (nr+1 nodes)
    int nz = 64;           ///< axial points, even
    double dt = 2e-4;
    double t_end = 1.0;
    int sample_every = 20;
    DnsInit init = DnsInit::EigenSeed;
    double eps = 1e-3;
    uint64_t seed = 1234;
    std::string snapshot_path;
    double blowup_limit = 1e8;
    double wall_cluster = 0.6;  ///< radial node clustering strength, 0 = uniform
};

/// Desk-scale step suggestion: the configured value of a gap-squared unit
/// keeps explicit advection and rotation coupling comfortably stable.
inline double suggested_dt(double eta, double gap_units_dt = 2e-4) {
    return gap_units_dt * (1.0 - eta) * (1.0 - eta);
}

struct DnsSample {
    double t = 0;
    double energy = 0;
    double amp = 0;          ///< adjoint projection (u, psi1*)_H / rho
    double amp_partner = 0;  ///< partner-family projection
    double flux = 0;         ///< cross-channel flux
};

struct DnsSeries {
    std::vector<DnsSample> samples;
    bool aborted = false;
    std::string abort_reason;
};

struct DnsResult {
    DnsSeries series;
    FieldSnapshot final_state;
};

/// Time-march the axisymmetric perturbation equations in stream-function /
/// vorticity form: implicit diffusion (z-diagonalized), explicit advection
/// and rotation coupling, z-periodic. No-slip walls are enforced exactly per
/// z-mode through precomputed influence responses. The marginal mode pair
/// provides the seed and the projection basis.
DnsResult run_dns(const DnsConfig& cfg, const SystemKernel& kernel, const StabilityMode& mode,
                  const AdjointMode& adj);

struct ExponentFit {
    double beta = 0;
    double intercept = 0;
    int n_used = 0;
};

/// Least-squares slope of log|A| against log(T - T_c) over saturated runs.
ExponentFit measure_exponent(const std::vector<std::pair<double, double>>& saturated_amps,
                             double t_c);

struct RateFit {
    double rate = 0;
    double rel_residual = 0;
    int n_used = 0;
};

/// Exponential growth/decay rate of |amp(t)| over a window of the series.
RateFit fit_exponential_rate(const DnsSeries& series, double window_start_frac = 0.3,
                             double window_end_frac = 1.0);

struct TstarBracket {
    double last_surviving = 0;
    double first_collapsing = 0;
    bool bistable_confirmed = false;
    std::vector<std::pair<double, bool>> descent;  ///< (T, survived)
};

/// Hysteresis protocol: descend from a saturated state, lowering T stepwise
/// until the flow collapses onto the base state; optionally verify
/// bistability at the surviving endpoint with a small fresh seed.
TstarBracket bracket_Tstar(const DnsConfig& base, const SystemKernel& kernel,
                           const StabilityMode& mode, const AdjointMode& adj, double t_start,
                           double t_low, int descent_steps, double survive_threshold,
                           bool verify_bistability = true);

}  // namespace taylor
