#pragma once

#include "taylor/common.hpp"

namespace taylor {

/// Laboratory description of the apparatus.
struct CylinderGeometry {
    double r1 = 0;      ///< inner radius
    double r2 = 0;      ///< outer radius
    double omega1 = 0;  ///< inner angular velocity
    double omega2 = 0;  ///< outer angular velocity
    double nu = 0;      ///< kinematic viscosity

    void validate() const;
};

/// Dimensionless description. `taylor` and `lambda` use the outer radius as
/// the length scale; the narrow-gap pipeline keeps its own gap-based scale
/// and never converts implicitly.
struct NondimParams {
    double eta = 0;     ///< radius ratio r1/r2
    double mu = 0;      ///< angular velocity ratio omega2/omega1
    double kappa = 0;   ///< (1 - mu/eta^2)/(1 - mu)
    double alpha = 0;   ///< (eta^2 - mu)/(1 - eta^2)
    double taylor = kNaN;
    double lambda = kNaN;
    bool rayleigh_stable_regime = false;  ///< mu >= eta^2: marginal analysis unguaranteed
};

/// Azimuthal base profile V(r) = a r + b / r.
struct CouetteProfile {
    double a_coef = 0;  ///< units 1/time
    double b_coef = 0;  ///< units length^2/time
    double operator()(double r) const { return a_coef * r + b_coef / r; }
};

/// Derive all dimensionless numbers from the geometry (length scale r2).
/// Throws ValidationError for mu == 1 ("degenerate rotation ratio").
NondimParams nondimensionalize(const CylinderGeometry& geom);

/// Dimensionless-only entry point; taylor/lambda left unset.
NondimParams params_from_ratios(double eta, double mu);

CouetteProfile couette_profile(const CylinderGeometry& geom);

/// True iff mu > eta^2 (the boundary mu == eta^2 counts as unstable-candidate).
bool rayleigh_stable(const NondimParams& p);

}  // namespace taylor
