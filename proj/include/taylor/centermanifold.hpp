#pragma once

#include "taylor/trigfield.hpp"

namespace taylor {

/// Quadratic interaction profiles of a marginal mode.
struct QuadraticForcings {
    Vec H1, H2, H3;
};

/// Mean and double-harmonic correction fields driven by the quadratic
/// self-interaction of the marginal mode.
struct CMCorrection {
    Vec phi0;            ///< azimuthal mean correction, Dirichlet walls
    Vec phi2_z, phi2_r, phi2_theta;  ///< double-harmonic profiles
    double phi2_condition = 0;       ///< pivot-ratio estimate of the 2a solve
    double phi2_residual_r = 0;
    double phi2_residual_theta = 0;
    TrigField Phi;       ///< assembled correction solving the full system
};

/// Cubic transition coefficient with both assembly routes.
struct TransitionCoefficient {
    double R = 0;
    double R_explicit = 0;
    double R_inner = 0;
    double rel_gap = 0;
    double rho = 0;
    std::string assembly_path = "both";
    std::string gauge = "max_h=1";
    bool degenerate = false;
};

QuadraticForcings quadratic_forcings(const SystemKernel& k, const StabilityMode& mode);

/// Mean azimuthal correction: DDstar phi0 = a (phi Dstar h + h D phi + phi h / r)
/// with Dirichlet walls.
Vec solve_phi0(const SystemKernel& k, const StabilityMode& mode);

/// Coupled double-harmonic correction (clamped radial profile, Dirichlet
/// azimuthal profile); phi2_z is reconstructed from the divergence constraint.
/// Throws "harmonic resonance: 2a eigenvalue collision" when the shifted
/// operator is near singular.
CMCorrection solve_phi2(const SystemKernel& k, const StabilityMode& mode);

/// Complete corrections: phi0, phi2 and the assembled field.
CMCorrection solve_corrections(const SystemKernel& k, const StabilityMode& mode);

/// Transition coefficient by the explicit radial-integral route and the
/// operator inner-product route; both must agree to 1e-6 relative.
TransitionCoefficient compute_R(const SystemKernel& k, const StabilityMode& mode,
                                const AdjointMode& adj, const CMCorrection& corr);

/// |(G(psi1,psi1), psi1*)| and the partner pairing; both must vanish for the
/// reduced equations to be solvable.
std::pair<double, double> solvability_check(const SystemKernel& k, const StabilityMode& mode,
                                            const AdjointMode& adj);

}  // namespace taylor
