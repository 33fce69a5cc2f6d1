#include "taylor/transition.hpp"

#include <cmath>

namespace taylor {

const char* to_string(TransitionType t) {
    switch (t) {
        case TransitionType::TypeI_continuous: return "TypeI_continuous";
        case TransitionType::TypeII_jump: return "TypeII_jump";
        default: return "indeterminate";
    }
}

TransitionType classify(double R, double tol) {
    if (!std::isfinite(R)) throw ValidationError("classify: R must be finite");
    if (R < -tol) return TransitionType::TypeI_continuous;
    if (R > tol) return TransitionType::TypeII_jump;
    return TransitionType::Indeterminate;
}

double classification_tol(double R, double rho, double psi_norm2) {
    if (psi_norm2 <= 0) return 1e-8;
    return 1e-8 * std::abs(R) * std::abs(rho) / psi_norm2;
}

double bifurcated_amplitude(double beta1, double R) {
    if (!(R < 0)) throw ValidationError("no supercritical circle for Type-II");
    if (beta1 < 0) throw ValidationError("bifurcated_amplitude: beta1 must be nonnegative");
    return std::sqrt(beta1 / std::abs(R));
}

ReducedTrajectory integrate_reduced(double x0, double y0, double beta1, double R, double t_end,
                                    double dt) {
    if (!(dt > 0) || !(t_end >= 0)) throw ValidationError("integrate_reduced: bad time span");
    ReducedTrajectory traj;
    const double cap =
        (R != 0) ? 10.0 * std::sqrt(std::abs(beta1 / R)) : std::numeric_limits<double>::infinity();
    auto fx = [&](double x, double y) { return beta1 * x + R * x * (x * x + y * y); };
    auto fy = [&](double x, double y) { return beta1 * y + R * y * (x * x + y * y); };
    double x = x0, y = y0, t = 0;
    traj.states.push_back({t, x, y});
    const auto steps = static_cast<long>(std::ceil(t_end / dt - 1e-12));
    for (long s = 0; s < steps; ++s) {
        const double h = std::min(dt, t_end - t);
        const double k1x = fx(x, y), k1y = fy(x, y);
        const double k2x = fx(x + 0.5 * h * k1x, y + 0.5 * h * k1y);
        const double k2y = fy(x + 0.5 * h * k1x, y + 0.5 * h * k1y);
        const double k3x = fx(x + 0.5 * h * k2x, y + 0.5 * h * k2y);
        const double k3y = fy(x + 0.5 * h * k2x, y + 0.5 * h * k2y);
        const double k4x = fx(x + h * k3x, y + h * k3y);
        const double k4y = fy(x + h * k3x, y + h * k3y);
        x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
        y += h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
        t += h;
        traj.states.push_back({t, x, y});
        if (std::hypot(x, y) > cap || !std::isfinite(x) || !std::isfinite(y)) {
            traj.escaped = true;  // left the validity region of the truncation
            break;
        }
    }
    return traj;
}

double reduced_radius_squared(double r0, double beta1, double R, double t) {
    if (beta1 == 0) {
        // r' = R r^3: r^2(t) = r0^2 / (1 - 2 R r0^2 t)
        return r0 * r0 / (1.0 - 2.0 * R * r0 * r0 * t);
    }
    const double e = std::exp(2.0 * beta1 * t);
    return beta1 * r0 * r0 * e / (beta1 + std::abs(R) * r0 * r0 * (e - 1.0));
}

TransitionReport assemble_report(const CriticalPoint& critical, const TransitionCoefficient& coef,
                                 const PesReport& pes, const GrowthCurve& growth,
                                 const SystemKernel& kernel) {
    if (std::abs(growth.lambda_c - critical.lambda_c) > 1e-8 * critical.lambda_c)
        throw ValidationError("assemble_report: growth curve and critical point disagree");
    if (coef.gauge != "max_h=1")
        throw ValidationError("assemble_report: mixed gauge provenance");

    TransitionReport rep;
    rep.T_c = critical.T_c;
    rep.a_c = critical.a_c;
    rep.L_c = critical.L_c;
    rep.R = coef.R;
    rep.rho = coef.rho;
    rep.R_explicit = coef.R_explicit;
    rep.R_inner = coef.R_inner;
    rep.R_rel_gap = coef.rel_gap;
    rep.gauge = coef.gauge;
    rep.kernel_label = kernel.label;
    rep.grid_n = kernel.grid.n_interior;
    rep.pes_ok = pes.pes_ok;
    rep.pes_verified_regime = kernel.pes_guaranteed;

    const double tol = classification_tol(coef.R, coef.rho, 1.0);
    rep.type = coef.degenerate ? TransitionType::Indeterminate : classify(coef.R, tol);
    if (rep.type == TransitionType::TypeI_continuous) {
        for (Index i = 0; i < growth.lambdas.size(); ++i) {
            const double beta = growth.betas(i);
            if (beta >= 0)
                rep.amplitude_law.emplace_back(growth.lambdas(i),
                                               std::sqrt(beta / std::abs(coef.R)));
        }
        rep.note = "supercritical circle of steady states; amplitude follows the square-root law";
    } else if (rep.type == TransitionType::TypeII_jump) {
        rep.note = "jump transition; no local amplitude law - bracket the saddle-node by "
                   "time-stepper hysteresis";
    } else {
        rep.note = "R within the indeterminacy band - raise resolution";
    }
    return rep;
}

}  // namespace taylor
