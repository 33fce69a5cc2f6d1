#pragma once

#include "taylor/centermanifold.hpp"

#include <vector>

namespace taylor {

enum class TransitionType { TypeI_continuous, TypeII_jump, Indeterminate };

const char* to_string(TransitionType t);

/// Sign classification with an indeterminacy band.
TransitionType classify(double R, double tol);

/// Gauge-aware default band: |R| is meaningful only against rho/|psi1|^2.
double classification_tol(double R, double rho, double psi_norm2);

/// Radius of the bifurcated circle sqrt(beta1/|R|); requires R < 0.
double bifurcated_amplitude(double beta1, double R);

struct AmplitudeState {
    double t = 0, x = 0, y = 0;
};

struct ReducedTrajectory {
    std::vector<AmplitudeState> states;
    bool escaped = false;  ///< left the normal-form validity region
};

/// Fixed-step fourth-order integration of the truncated normal form
/// x' = beta1 x + R x (x^2+y^2), y' = beta1 y + R y (x^2+y^2).
/// Integration stops with escaped=true beyond 10 sqrt(|beta1/R|).
ReducedTrajectory integrate_reduced(double x0, double y0, double beta1, double R,
                                    double t_end, double dt);

/// Closed-form squared radius of the radial reduction (R < 0 branch).
double reduced_radius_squared(double r0, double beta1, double R, double t);

struct TransitionReport {
    double T_c = 0, a_c = 0, L_c = 0;
    double R = 0, rho = 0;
    double R_explicit = 0, R_inner = 0, R_rel_gap = 0;
    TransitionType type = TransitionType::Indeterminate;
    std::vector<std::pair<double, double>> amplitude_law;  ///< (lambda, radius), Type-I only
    bool pes_ok = false;
    bool pes_verified_regime = false;
    std::string gauge;
    std::string kernel_label;
    int grid_n = 0;
    std::string note;
};

/// Consolidate pipeline outputs. Throws on mixed provenance (different gauge
/// or wavenumber between the pieces).
TransitionReport assemble_report(const CriticalPoint& critical, const TransitionCoefficient& coef,
                                 const PesReport& pes, const GrowthCurve& growth,
                                 const SystemKernel& kernel);

}  // namespace taylor
