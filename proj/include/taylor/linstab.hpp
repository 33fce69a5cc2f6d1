#pragma once

#include "taylor/params.hpp"
#include "taylor/radial.hpp"

#include <optional>
#include <string>
#include <vector>

namespace taylor {

enum class NarrowGapVariant { Full, Symmetric };

/// Radial machinery for one marginal-stability family: grid, operators and
/// the two coupling coefficients of the linearized swirl/meridional exchange.
/// Covers both the finite-gap cylindrical system and the gap-scaled planar
/// reductions with the same assembly.
struct SystemKernel {
    RadialGrid grid;
    DiffOperators ops;
    Vec coupling_r;              ///< profile multiplying u_theta in the radial momentum row
    double coupling_theta = 0;   ///< coefficient multiplying u_r in the azimuthal row
    bool cylindrical = true;
    double eta = 0;
    double mu = 0;
    double kappa = 0;
    bool pes_guaranteed = true;  ///< false for counter-rotation or Rayleigh-stable inputs
    std::string label = "cylindrical";

    double length() const { return 2.0 * kPi; }  // placeholder; period comes from a
};

SystemKernel make_cylindrical_kernel(const NondimParams& p, int n,
                                     Scheme scheme = Scheme::Collocation);
SystemKernel make_narrowgap_kernel(double mu, NarrowGapVariant variant, int n,
                                   Scheme scheme = Scheme::Collocation);

/// Marginal eigendata at wavenumber a: the smallest positive marginal value
/// lambda0 and the radial amplitude pair (h, phi), gauge max_r h = 1.
struct StabilityMode {
    double a = 0;
    double lambda0 = 0;
    Vec h;
    Vec phi;
    double residual_h = 0;
    double residual_phi = 0;
    bool interior_positive = false;
    double spectral_gap = 0;     ///< second marginal value / lambda0 - 1
    bool near_degenerate = false;
    std::string normalization = "max_h=1";
};

/// Adjoint eigendata, gauge max_r hstar = 1.
struct AdjointMode {
    double a = 0;
    double lambda0 = 0;
    Vec hstar;
    Vec phistar;
    double residual_h = 0;
    double residual_phi = 0;
    bool interior_positive = false;
};

struct CriticalPoint {
    double a_c = 0;
    double L_c = 0;
    double lambda_c = 0;
    double T_c = 0;
    bool interior_minimum = true;
    bool multiple_minima = false;
};

struct GrowthCurve {
    Vec lambdas;
    Vec betas;
    double lambda_c = 0;
    double slope_at_critical = 0;
};

struct PesReport {
    double pairing = 0;
    bool pairing_nonzero = false;
    bool h_positive = false;
    bool phi_positive = false;
    bool hstar_positive = false;
    bool phistar_positive = false;
    double growth_slope = 0;
    bool integrand_positive = false;  ///< sign bookkeeping of both pairing terms
    bool pes_ok = false;
};

StabilityMode solve_marginal(const SystemKernel& k, double a);
AdjointMode solve_adjoint(const SystemKernel& k, double a, double lambda0);

/// Convenience wrapper mirroring the narrow-gap entry point.
StabilityMode solve_marginal_narrowgap(double mu, double a, NarrowGapVariant variant, int n,
                                       Scheme scheme = Scheme::Collocation);

CriticalPoint find_critical(const SystemKernel& k, double a_min = 1.0, double a_max = 8.0,
                            double search_tol = 1e-4, int coarse_samples = 29);

/// Leading growth rate of the linearized problem at (a, lambda); the
/// eigenvalue closest to neutral. complex_flag is set when the leading
/// eigenvalue has a nonzero imaginary part (its real part is returned).
double growth_rate(const SystemKernel& k, double a, double lambda,
                   bool* complex_flag = nullptr);

GrowthCurve growth_curve(const SystemKernel& k, double a, double lambda_c,
                         double rel_span = 0.02, int samples = 9);

PesReport pes_check(const SystemKernel& k, const StabilityMode& mode, const AdjointMode& adj);

/// (psi1, psi1*)_H for the physical eigenfields of (mode, adj).
double mode_rho(const SystemKernel& k, const StabilityMode& mode, const AdjointMode& adj);

}  // namespace taylor
