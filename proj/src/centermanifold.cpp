#include "taylor/centermanifold.hpp"

#include <Eigen/LU>

#include <cmath>
#include <sstream>

namespace taylor {

namespace {

// Shared radial ingredients of the quadratic interaction in the physical
// eigenfield gauge (u_r = cos(az) h, u_theta = cos(az) phi,
// u_z = -(1/a) sin(az) Dstar h).
struct QuadProfiles {
    Vec q_r;     // double-harmonic radial forcing coefficient
    Vec q_theta; // double-harmonic azimuthal forcing coefficient
    Vec m_theta; // mean azimuthal forcing coefficient
    Vec h1_bar;  // (Dstar h)^2 - h DDstar h
};

QuadProfiles quad_profiles(const SystemKernel& k, const StabilityMode& mode) {
    const Vec dh = k.ops.D * mode.h;
    const Vec dsh = k.ops.Dstar * mode.h;
    const Vec dphi = k.ops.D * mode.phi;
    const Vec ddsh = k.ops.DDstar * mode.h;
    QuadProfiles q;
    q.h1_bar = dsh.array().square().matrix() - mode.h.cwiseProduct(ddsh);
    q.q_r = 0.5 * (mode.h.cwiseProduct(dh) - mode.h.cwiseProduct(dsh));
    q.q_theta = 0.5 * (mode.h.cwiseProduct(dphi) - mode.phi.cwiseProduct(dsh));
    q.m_theta = 0.5 * (mode.h.cwiseProduct(dphi) + mode.phi.cwiseProduct(dsh));
    if (k.cylindrical) {
        const Vec rinv = k.grid.nodes.cwiseInverse();
        q.q_r -= 0.5 * mode.phi.array().square().matrix().cwiseProduct(rinv);
        const Vec hphi_r = mode.h.cwiseProduct(mode.phi).cwiseProduct(rinv);
        q.q_theta += 0.5 * hphi_r;
        q.m_theta += 0.5 * hphi_r;
    }
    return q;
}

}  // namespace

QuadraticForcings quadratic_forcings(const SystemKernel& k, const StabilityMode& mode) {
    if (mode.residual_h > 1e-6 || mode.residual_phi > 1e-6)
        throw ValidationError("quadratic_forcings: mode residuals out of tolerance");
    const double a = mode.a;
    const Vec dh = k.ops.D * mode.h;
    const Vec dsh = k.ops.Dstar * mode.h;
    const Vec dphi = k.ops.D * mode.phi;
    const Vec ddsh = k.ops.DDstar * mode.h;
    QuadraticForcings f;
    f.H1 = a * (dsh.array().square().matrix() - mode.h.cwiseProduct(ddsh));
    f.H2 = a * a * (mode.h.cwiseProduct(dh) - mode.h.cwiseProduct(dsh));
    f.H3 = a * (mode.h.cwiseProduct(dphi) - mode.phi.cwiseProduct(dsh));
    if (k.cylindrical) {
        const Vec rinv = k.grid.nodes.cwiseInverse();
        f.H2 -= mode.phi.array().square().matrix().cwiseProduct(rinv);
        f.H3 += a * mode.h.cwiseProduct(mode.phi).cwiseProduct(rinv);
    }
    return f;
}

Vec solve_phi0(const SystemKernel& k, const StabilityMode& mode) {
    const QuadProfiles q = quad_profiles(k, mode);
    Mat op = k.ops.DDstar;
    embed_boundary_rows(op, dirichlet_bcs(), k.ops);
    Vec rhs = (2.0 * mode.a) * q.m_theta;
    zero_boundary_rhs(rhs, dirichlet_bcs(), k.grid.size());
    return solve_linear_bvp(op, rhs);
}

CMCorrection solve_phi2(const SystemKernel& k, const StabilityMode& mode) {
    const Index m = k.grid.size();
    const double a = mode.a;
    const double a2 = a * a;
    const QuadProfiles q = quad_profiles(k, mode);

    const Mat l2 = k.ops.l_a(2.0 * a);      // DDstar - 4a^2
    const Mat l2sq = l2 * l2;

    // Block system for (g_r, g_theta): pressure eliminated through the axial
    // momentum row, divergence closed by g_z = Dstar g_r / (2a).
    Mat sys = Mat::Zero(2 * m, 2 * m);
    Vec rhs = Vec::Zero(2 * m);
    sys.topLeftCorner(m, m) = l2sq;
    sys.bottomRightCorner(m, m) = l2;
    for (Index i = 0; i < m; ++i) {
        sys(i, m + i) = -4.0 * a2 * mode.lambda0 * k.coupling_r(i);
        sys(m + i, i) = mode.lambda0 * k.coupling_theta;
    }
    rhs.head(m) = -4.0 * a2 * q.q_r - (k.ops.D * q.h1_bar);
    rhs.tail(m) = q.q_theta;
    {
        Mat top = sys.topLeftCorner(m, m);
        embed_boundary_rows(top, clamped_bcs(), k.ops);
        sys.topLeftCorner(m, m) = top;
        for (Index row : {Index(0), Index(1), m - 2, m - 1}) {
            sys.row(row).tail(m).setZero();
            rhs(row) = 0;
        }
        Mat bot = sys.bottomRightCorner(m, m);
        embed_boundary_rows(bot, dirichlet_bcs(), k.ops);
        sys.bottomRightCorner(m, m) = bot;
        for (Index row : {m, 2 * m - 1}) {
            sys.row(row).head(m).setZero();
            rhs(row) = 0;
        }
    }

    // Row equilibration keeps the pivot estimate meaningful.
    for (Index i = 0; i < 2 * m; ++i) {
        const double s = sys.row(i).cwiseAbs().maxCoeff();
        if (s > 0) {
            sys.row(i) /= s;
            rhs(i) /= s;
        }
    }
    Eigen::PartialPivLU<Mat> lu(sys);
    const Vec udiag = lu.matrixLU().diagonal().cwiseAbs();
    const double cond_est = udiag.minCoeff() / udiag.maxCoeff();
    if (cond_est < 1e-13) {
        std::ostringstream msg;
        msg << "harmonic resonance: 2a eigenvalue collision (pivot ratio " << cond_est << ")";
        throw SolverError(msg.str());
    }
    Vec sol = lu.solve(rhs);
    sol += lu.solve(rhs - sys * sol);

    CMCorrection corr;
    corr.phi2_r = sol.head(m);
    corr.phi2_theta = sol.tail(m);
    corr.phi2_z = (k.ops.Dstar * corr.phi2_r) / (2.0 * a);
    corr.phi2_condition = cond_est;

    // Plug-back residuals of the two closed equations on interior rows.
    {
        const Vec rhs_r = -4.0 * a2 * q.q_r - (k.ops.D * q.h1_bar) +
                          4.0 * a2 * mode.lambda0 *
                              (k.coupling_r.array() * corr.phi2_theta.array()).matrix();
        const Vec lhs_r = l2sq * corr.phi2_r;
        const Vec scale_r = l2sq.cwiseAbs() * corr.phi2_r.cwiseAbs();
        double num = 0, den = 0;
        for (Index i = 2; i + 2 < m; ++i) {
            num += (lhs_r(i) - rhs_r(i)) * (lhs_r(i) - rhs_r(i));
            const double s = scale_r(i) + std::abs(rhs_r(i));
            den += s * s;
        }
        corr.phi2_residual_r = den > 0 ? std::sqrt(num / den) : 0;
        const Vec rhs_t = q.q_theta - mode.lambda0 * k.coupling_theta * corr.phi2_r;
        const Vec lhs_t = l2 * corr.phi2_theta;
        const Vec scale_t = l2.cwiseAbs() * corr.phi2_theta.cwiseAbs();
        num = den = 0;
        for (Index i = 1; i + 1 < m; ++i) {
            num += (lhs_t(i) - rhs_t(i)) * (lhs_t(i) - rhs_t(i));
            const double s = scale_t(i) + std::abs(rhs_t(i));
            den += s * s;
        }
        corr.phi2_residual_theta = den > 0 ? std::sqrt(num / den) : 0;
    }
    return corr;
}

CMCorrection solve_corrections(const SystemKernel& k, const StabilityMode& mode) {
    CMCorrection corr = solve_phi2(k, mode);
    corr.phi0 = solve_phi0(k, mode);
    const Index m = k.grid.size();
    corr.Phi = field_zero(mode.a, 2, m);
    corr.Phi.theta.cos_part[0] = corr.phi0 / (2.0 * mode.a);
    corr.Phi.z.sin_part[2] = -corr.phi2_z;
    corr.Phi.r.cos_part[2] = corr.phi2_r;
    corr.Phi.theta.cos_part[2] = corr.phi2_theta;
    return corr;
}

TransitionCoefficient compute_R(const SystemKernel& k, const StabilityMode& mode,
                                const AdjointMode& adj, const CMCorrection& corr) {
    TransitionCoefficient tc;
    const double hn = mode.h.cwiseAbs().maxCoeff();
    const double pn = mode.phi.cwiseAbs().maxCoeff();
    if (hn == 0 || pn == 0) {
        tc.R = tc.R_explicit = tc.R_inner = 0;
        tc.degenerate = true;
        return tc;
    }

    const TrigField psi = eigenfield(k, mode);
    const TrigField psi_star = adjoint_field(k, adj);
    tc.rho = field_inner(k, psi, psi_star);
    const double rho_scale = field_norm(k, psi) * field_norm(k, psi_star);
    if (std::abs(tc.rho) < 1e-10 * rho_scale)
        throw SolverError("degenerate normalization: (psi1, psi1*)_H vanishes");

    // Inner-product route.
    const TrigField n1 = advection(k, corr.Phi, psi);
    const TrigField n2 = advection(k, psi, corr.Phi);
    tc.R_inner = -(field_inner(k, n1, psi_star) + field_inner(k, n2, psi_star)) / tc.rho;

    // Explicit radial-integral route: every axial integral reduced by hand.
    {
        const double a = mode.a;
        const double a2 = a * a;
        const double length = 2.0 * kPi / a;
        const Vec one = Vec::Ones(k.grid.size());
        auto I = [&](const Vec& f) { return weighted_inner(f, one, k.grid); };
        const Vec p = k.ops.Dstar * mode.h;
        const Vec ps = k.ops.Dstar * adj.hstar;
        const Vec dp = k.ops.D * p;
        const Vec& h = mode.h;
        const Vec& phi = mode.phi;
        const Vec& hs = adj.hstar;
        const Vec& phis = adj.phistar;
        const Vec f0 = corr.phi0 / (2.0 * a);
        const Vec& gz = corr.phi2_z;
        const Vec& gr = corr.phi2_r;
        const Vec& gt = corr.phi2_theta;
        const Vec dgz = k.ops.D * gz;
        const Vec dgr = k.ops.D * gr;
        const Vec dgt = k.ops.D * gt;
        const Vec df0 = k.ops.D * f0;
        const Vec dh = k.ops.D * h;
        const Vec dphi = k.ops.D * phi;

        double sum = 0;
        // Correction advecting the mode.
        sum += -(length / 4) * I(gr.cwiseProduct(dp).cwiseProduct(ps)) -
               (a * length / 4) * I(gz.cwiseProduct(p).cwiseProduct(ps));
        sum += (a2 * length / 4) * I(gr.cwiseProduct(dh).cwiseProduct(hs)) +
               (a2 * a * length / 4) * I(gz.cwiseProduct(h).cwiseProduct(hs));
        sum += (length / 4) * I(gr.cwiseProduct(dphi).cwiseProduct(phis)) +
               (a * length / 4) * I(gz.cwiseProduct(phi).cwiseProduct(phis));
        // Mode advecting the correction.
        sum += (a * length / 4) * I(h.cwiseProduct(dgz).cwiseProduct(ps)) +
               (a * length / 2) * I(p.cwiseProduct(gz).cwiseProduct(ps));
        sum += (a2 * length / 4) * I(h.cwiseProduct(dgr).cwiseProduct(hs)) +
               (a2 * length / 2) * I(p.cwiseProduct(gr).cwiseProduct(hs));
        sum += (length / 2) * I(h.cwiseProduct(df0).cwiseProduct(phis)) +
               (length / 4) * I(h.cwiseProduct(dgt).cwiseProduct(phis)) +
               (length / 2) * I(p.cwiseProduct(gt).cwiseProduct(phis));
        if (k.cylindrical) {
            const Vec rinv = k.grid.nodes.cwiseInverse();
            // Curvature exchange terms; the mean correction enters only here.
            sum += -(a2 * length / 2) * I(f0.cwiseProduct(phi).cwiseProduct(hs).cwiseProduct(rinv)) -
                   (a2 * length / 4) * I(gt.cwiseProduct(phi).cwiseProduct(hs).cwiseProduct(rinv));
            sum += (length / 2) * I(f0.cwiseProduct(h).cwiseProduct(phis).cwiseProduct(rinv)) +
                   (length / 4) * I(gt.cwiseProduct(h).cwiseProduct(phis).cwiseProduct(rinv));
            sum += -(a2 * length / 2) * I(phi.cwiseProduct(f0).cwiseProduct(hs).cwiseProduct(rinv)) -
                   (a2 * length / 4) * I(phi.cwiseProduct(gt).cwiseProduct(hs).cwiseProduct(rinv));
            sum += (length / 4) * I(phi.cwiseProduct(gr).cwiseProduct(phis).cwiseProduct(rinv));
        }
        tc.R_explicit = -sum / tc.rho;
    }

    tc.rel_gap = rel_diff(tc.R_explicit, tc.R_inner);
    if (tc.rel_gap > 1e-6) {
        std::ostringstream msg;
        msg << "transition coefficient routes disagree: explicit " << tc.R_explicit
            << " vs inner " << tc.R_inner << " (relative gap " << tc.rel_gap << ")";
        throw SolverError(msg.str());
    }
    tc.R = 0.5 * (tc.R_explicit + tc.R_inner);
    return tc;
}

std::pair<double, double> solvability_check(const SystemKernel& k, const StabilityMode& mode,
                                            const AdjointMode& adj) {
    const TrigField psi = eigenfield(k, mode);
    const TrigField psi_star = adjoint_field(k, adj);
    const TrigField psi_star_partner = adjoint_field_partner(k, adj);
    const TrigField n = advection(k, psi, psi);
    return {std::abs(field_inner(k, n, psi_star)),
            std::abs(field_inner(k, n, psi_star_partner))};
}

}  // namespace taylor
