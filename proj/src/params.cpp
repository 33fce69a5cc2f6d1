#include "taylor/params.hpp"

#include <cmath>

namespace taylor {

void CylinderGeometry::validate() const {
    if (!(r1 > 0) || !(r2 > r1)) throw ValidationError("cylinder radii must satisfy r2 > r1 > 0");
    if (!(nu > 0)) throw ValidationError("kinematic viscosity must be positive");
    if (omega1 == 0) throw ValidationError("inner angular velocity must be nonzero");
}

NondimParams params_from_ratios(double eta, double mu) {
    if (!(eta > 0) || !(eta < 1)) throw ValidationError("radius ratio eta must lie in (0,1)");
    if (mu == 1.0) throw ValidationError("degenerate rotation ratio");
    NondimParams p;
    p.eta = eta;
    p.mu = mu;
    p.kappa = (1.0 - mu / (eta * eta)) / (1.0 - mu);
    p.alpha = (eta * eta - mu) / (1.0 - eta * eta);
    p.rayleigh_stable_regime = (mu >= eta * eta);
    return p;
}

NondimParams nondimensionalize(const CylinderGeometry& geom) {
    geom.validate();
    const double eta = geom.r1 / geom.r2;
    const double mu = geom.omega2 / geom.omega1;
    NondimParams p = params_from_ratios(eta, mu);
    const double r2_4 = std::pow(geom.r2, 4);
    const double eta4 = std::pow(eta, 4);
    const double one_m_eta2 = 1.0 - eta * eta;
    p.taylor = 4.0 * r2_4 * geom.omega1 * geom.omega1 * (1.0 - mu) * (1.0 - mu) * eta4 /
               (geom.nu * geom.nu * one_m_eta2 * one_m_eta2);
    p.lambda = std::sqrt(p.taylor);
    return p;
}

CouetteProfile couette_profile(const CylinderGeometry& geom) {
    geom.validate();
    const double eta = geom.r1 / geom.r2;
    const double mu = geom.omega2 / geom.omega1;
    const double one_m_eta2 = 1.0 - eta * eta;
    CouetteProfile v;
    v.a_coef = -geom.omega1 * eta * eta * (1.0 - mu / (eta * eta)) / one_m_eta2;
    v.b_coef = geom.omega1 * geom.r1 * geom.r1 * (1.0 - mu) / one_m_eta2;
    return v;
}

bool rayleigh_stable(const NondimParams& p) { return p.mu > p.eta * p.eta; }

}  // namespace taylor
