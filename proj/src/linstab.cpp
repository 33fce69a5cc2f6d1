#include "taylor/linstab.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <random>

namespace taylor {

namespace {

// Block structure of the marginal problem K0 x = lambda K1 x with
// x = [h; phi]. The fourth-order h rows are clamped (value + derivative at
// each wall), the second-order phi rows are Dirichlet. Boundary rows of K1
// stay zero so constraint rows carry no eigenvalue.
struct BlockProblem {
    Mat K0, K1;
};

// Left-scale a matrix pencil so every row has unit infinity norm; the
// generalized spectrum is unchanged and pivot-based rank checks stay
// meaningful despite fourth-order rows dwarfing constraint rows.
void equilibrate_rows(Mat& k0, Mat& k1) {
    for (Index i = 0; i < k0.rows(); ++i) {
        const double s =
            std::max(k0.row(i).cwiseAbs().maxCoeff(), k1.row(i).cwiseAbs().maxCoeff());
        if (s > 0) {
            k0.row(i) /= s;
            k1.row(i) /= s;
        }
    }
}

BlockProblem assemble_marginal(const SystemKernel& k, double a, bool adjoint) {
    const Index m = k.grid.size();
    Mat l2 = k.ops.l_a_squared(a);
    embed_boundary_rows(l2, clamped_bcs(), k.ops);
    Mat l1 = k.ops.l_a(a);
    embed_boundary_rows(l1, dirichlet_bcs(), k.ops);

    BlockProblem p;
    p.K0 = Mat::Zero(2 * m, 2 * m);
    p.K0.topLeftCorner(m, m) = l2;
    p.K0.bottomRightCorner(m, m) = l1;
    p.K1 = Mat::Zero(2 * m, 2 * m);
    const double a2 = a * a;
    for (Index i = 2; i + 2 < m; ++i) {
        if (adjoint)
            p.K1(i, m + i) = k.coupling_theta;
        else
            p.K1(i, m + i) = a2 * k.coupling_r(i);
    }
    for (Index i = 1; i + 1 < m; ++i) {
        if (adjoint)
            p.K1(m + i, i) = -a2 * k.coupling_r(i);
        else
            p.K1(m + i, i) = -k.coupling_theta;
    }
    equilibrate_rows(p.K0, p.K1);
    return p;
}

struct Candidate {
    double value = 0;  // generalized eigenvalue lambda (or beta for growth)
    Vec x;
    double residual = 0;
};

Mat orthonormalize(const Mat& v) {
    Eigen::HouseholderQR<Mat> qr(v);
    return qr.householderQ() * Mat::Identity(v.rows(), v.cols());
}

// Real positive generalized eigenvalues of K0 x = lambda K1 x, ascending.
// Subspace iteration on K0^{-1} K1 targets the smallest |lambda| cluster;
// a dense solve takes over when the iteration stalls.
std::vector<Candidate> positive_generalized_eigs(const Mat& K0, const Mat& K1,
                                                 bool& complex_smaller, int want) {
    const Index m = K0.rows();
    Eigen::PartialPivLU<Mat> lu(K0);
    complex_smaller = false;

    const int block = std::min<Index>(10, m);
    std::mt19937 rng(0x5eed);
    std::normal_distribution<double> gauss;
    Mat v(m, block);
    for (Index i = 0; i < m; ++i)
        for (int j = 0; j < block; ++j) v(i, j) = gauss(rng);
    v = orthonormalize(v);

    auto ritz_pass = [&](const Mat& basis, std::vector<Candidate>& found,
                         double& best_complex_mu) {
        const Mat w = lu.solve(K1 * basis);
        const Mat h = basis.transpose() * w;
        Eigen::EigenSolver<Mat> es(h);
        found.clear();
        best_complex_mu = 0;
        for (Index j = 0; j < h.rows(); ++j) {
            const std::complex<double> muc = es.eigenvalues()(j);
            if (std::abs(muc) < 1e-300) continue;
            if (std::abs(muc.imag()) > 1e-8 * std::abs(muc)) {
                // Only a converged complex pair counts.
                const Vec xr = basis * es.eigenvectors().col(j).real();
                const Vec xi = basis * es.eigenvectors().col(j).imag();
                const double xn = std::hypot(xr.norm(), xi.norm());
                if (xn == 0) continue;
                const Vec mxr = lu.solve(K1 * xr);
                const Vec mxi = lu.solve(K1 * xi);
                const Vec res_r = mxr - muc.real() * xr + muc.imag() * xi;
                const Vec res_i = mxi - muc.real() * xi - muc.imag() * xr;
                const double resid = std::hypot(res_r.norm(), res_i.norm()) /
                                     (xn * std::abs(muc));
                if (resid < 1e-9)
                    best_complex_mu = std::max(best_complex_mu, std::abs(muc));
                continue;
            }
            const double mu = muc.real();
            if (mu <= 0) continue;
            Vec x = basis * es.eigenvectors().col(j).real();
            const double xn = x.norm();
            if (xn == 0) continue;
            x /= xn;
            const Vec mx = lu.solve(K1 * x);
            Candidate c;
            c.value = 1.0 / mu;
            c.x = x;
            c.residual = (mx - mu * x).norm() / mu;
            found.push_back(std::move(c));
        }
        std::sort(found.begin(), found.end(),
                  [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
    };

    std::vector<Candidate> found;
    double best_complex_mu = 0;
    bool converged = false;
    for (int iter = 0; iter < 120 && !converged; ++iter) {
        for (int s = 0; s < 5; ++s) v = orthonormalize(lu.solve(K1 * v));
        ritz_pass(v, found, best_complex_mu);
        const int have = static_cast<int>(found.size());
        if (have >= std::min(want, 1)) {
            converged = true;
            for (int j = 0; j < std::min(want, have); ++j)
                if (found[j].residual > 1e-11) converged = false;
        }
    }

    if (!converged) {
        // Dense fallback.
        const Mat mfull = lu.solve(K1);
        Eigen::EigenSolver<Mat> es(mfull);
        const double mu_max = es.eigenvalues().cwiseAbs().maxCoeff();
        found.clear();
        best_complex_mu = 0;
        for (Index j = 0; j < m; ++j) {
            const std::complex<double> muc = es.eigenvalues()(j);
            if (std::abs(muc) < 1e-12 * mu_max) continue;
            if (std::abs(muc.imag()) > 1e-8 * std::abs(muc)) {
                best_complex_mu = std::max(best_complex_mu, std::abs(muc));
                continue;
            }
            if (muc.real() <= 0) continue;
            Candidate c;
            c.value = 1.0 / muc.real();
            c.x = es.eigenvectors().col(j).real();
            c.x.normalize();
            const Vec mx = mfull * c.x;
            c.residual = (mx - muc.real() * c.x).norm() / muc.real();
            found.push_back(std::move(c));
        }
        std::sort(found.begin(), found.end(),
                  [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
    }

    if (!found.empty() && best_complex_mu > 1.0 / found.front().value)
        complex_smaller = true;
    else if (found.empty() && best_complex_mu > 0)
        complex_smaller = true;

    // Inverse-iteration polish in block-balanced coordinates: the two halves
    // of the eigenvector can differ by orders of magnitude, which starves the
    // smaller block of relative accuracy.
    const Index half = m / 2;
    const int polish = std::min<int>(want, static_cast<int>(found.size()));
    for (int j = 0; j < polish; ++j) {
        double lambda = found[j].value;
        Vec x = found[j].x;
        const double hmax = x.head(half).cwiseAbs().maxCoeff();
        const double pmax = x.tail(half).cwiseAbs().maxCoeff();
        Vec s = Vec::Ones(m);
        if (hmax > 0 && pmax > 0) s.tail(half).setConstant(pmax / hmax);
        const Mat k0s = K0 * s.asDiagonal();
        const Mat k1s = K1 * s.asDiagonal();
        Vec xt = (x.array() / s.array()).matrix();
        xt.normalize();
        for (int it = 0; it < 4; ++it) {
            const Mat shifted = k0s - lambda * k1s;
            Eigen::PartialPivLU<Mat> slu(shifted);
            Vec y = slu.solve(k1s * xt);
            if (!y.allFinite()) break;
            const double yn = y.norm();
            if (!(yn > 0)) break;
            xt = y / yn;
            const Vec k1x = k1s * xt;
            const double denom = k1x.squaredNorm();
            if (denom > 0) lambda = k1x.dot(k0s * xt) / denom;
        }
        Vec xfull = (s.array() * xt.array()).matrix();
        const Vec res = K0 * xfull - lambda * (K1 * xfull);
        found[j].value = lambda;
        found[j].x = xfull;
        found[j].residual = res.norm() / (K0 * xfull).norm();
    }
    return found;
}

// Backward relative residual of A x = rhs over the equation rows [lo, hi):
// componentwise scale |A||x| + |rhs| absorbs the cancellation inherent in
// high-order collocation rows.
double block_residual(const Mat& a, const Vec& x, const Vec& rhs, Index lo, Index hi) {
    const Vec lhs = a * x;
    const Vec scale = a.cwiseAbs() * x.cwiseAbs();
    double num = 0, den = 0;
    for (Index i = lo; i < hi; ++i) {
        num += (lhs(i) - rhs(i)) * (lhs(i) - rhs(i));
        const double s = scale(i) + std::abs(rhs(i));
        den += s * s;
    }
    return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

bool interior_positive(const Vec& f) {
    for (Index i = 1; i + 1 < f.size(); ++i)
        if (!(f(i) > 0)) return false;
    return true;
}

void normalize_mode(Vec& h, Vec& phi) {
    Index imax = 0;
    h.cwiseAbs().maxCoeff(&imax);
    const double s = h(imax);
    if (s == 0) throw SolverError("degenerate mode: h vanishes");
    h /= s;
    phi /= s;
}

}  // namespace

using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

namespace {

// Extended-precision refinement of the leading eigenpair. The pencil is
// reassembled in long double so that the formation error of the squared
// fourth-order block no longer limits the eigenvalue accuracy; the
// primal/adjoint agreement gate needs ~1e-10 at n = 128.
void refine_eigenpair_ld(const SystemKernel& k, double a, bool adjoint, double& lambda,
                         Vec& x) {
    const Index m = k.grid.size();
    const LMat d = k.ops.D.cast<long double>();
    const LVec nodes = k.grid.nodes.cast<long double>();
    LMat dstar = d;
    if (k.cylindrical) {
        for (Index i = 0; i < m; ++i) dstar(i, i) += 1.0L / nodes(i);
    }
    LMat ddstar = d * dstar;
    if (k.cylindrical && k.grid.scheme == Scheme::Collocation) {
        const LVec defect = ddstar * nodes;
        for (Index i = 0; i < m; ++i) ddstar(i, i) -= defect(i) / nodes(i);
    }
    const long double a2 = static_cast<long double>(a) * a;
    LMat l = ddstar;
    l.diagonal().array() -= a2;
    LMat l2 = l * l;
    // Clamped rows for the fourth-order block, Dirichlet for the second.
    l2.row(0).setZero();
    l2(0, 0) = 1.0L;
    l2.row(m - 1).setZero();
    l2(m - 1, m - 1) = 1.0L;
    l2.row(1) = d.row(0);
    l2.row(m - 2) = d.row(m - 1);
    LMat l1 = l;
    l1.row(0).setZero();
    l1(0, 0) = 1.0L;
    l1.row(m - 1).setZero();
    l1(m - 1, m - 1) = 1.0L;

    LMat k0 = LMat::Zero(2 * m, 2 * m);
    k0.topLeftCorner(m, m) = l2;
    k0.bottomRightCorner(m, m) = l1;
    LMat k1 = LMat::Zero(2 * m, 2 * m);
    const LVec cr = k.coupling_r.cast<long double>();
    for (Index i = 2; i + 2 < m; ++i) {
        if (adjoint)
            k1(i, m + i) = k.coupling_theta;
        else
            k1(i, m + i) = a2 * cr(i);
    }
    for (Index i = 1; i + 1 < m; ++i) {
        if (adjoint)
            k1(m + i, i) = -a2 * cr(i);
        else
            k1(m + i, i) = -k.coupling_theta;
    }
    for (Index i = 0; i < 2 * m; ++i) {
        const long double s =
            std::max(k0.row(i).cwiseAbs().maxCoeff(), k1.row(i).cwiseAbs().maxCoeff());
        if (s > 0) {
            k0.row(i) /= s;
            k1.row(i) /= s;
        }
    }

    // Block-balanced inverse iteration from the double-precision start.
    LVec xt = x.cast<long double>();
    const long double hmax = xt.head(m).cwiseAbs().maxCoeff();
    const long double pmax = xt.tail(m).cwiseAbs().maxCoeff();
    LVec s = LVec::Ones(2 * m);
    if (hmax > 0 && pmax > 0) s.tail(m).setConstant(pmax / hmax);
    const LMat k0s = k0 * s.asDiagonal();
    const LMat k1s = k1 * s.asDiagonal();
    xt = (xt.array() / s.array()).matrix();
    xt /= xt.norm();
    long double lam = lambda;
    for (int it = 0; it < 3; ++it) {
        const LMat shifted = k0s - lam * k1s;
        Eigen::PartialPivLU<LMat> slu(shifted);
        LVec y = slu.solve(k1s * xt);
        if (!y.allFinite()) break;
        const long double yn = y.norm();
        if (!(yn > 0)) break;
        xt = y / yn;
        const LVec k1x = k1s * xt;
        const long double denom = k1x.squaredNorm();
        if (denom > 0) lam = k1x.dot(k0s * xt) / denom;
    }
    lambda = static_cast<double>(lam);
    const LVec xfull = (s.array() * xt.array()).matrix();
    x = xfull.cast<double>();
}

}  // namespace

SystemKernel make_cylindrical_kernel(const NondimParams& p, int n, Scheme scheme) {
    SystemKernel k;
    k.grid = build_grid(p.eta, n, scheme);
    k.ops = build_operators(k.grid, true);
    k.coupling_r = (k.grid.nodes.array().square().inverse() - p.kappa).matrix();
    k.coupling_theta = p.kappa;
    k.cylindrical = true;
    k.eta = p.eta;
    k.mu = p.mu;
    k.kappa = p.kappa;
    k.pes_guaranteed = (p.mu >= 0.0) && !p.rayleigh_stable_regime;
    k.label = "cylindrical";
    return k;
}

SystemKernel make_narrowgap_kernel(double mu, NarrowGapVariant variant, int n, Scheme scheme) {
    SystemKernel k;
    k.grid = build_unit_grid(n, scheme);
    k.ops = build_operators(k.grid, false);
    if (variant == NarrowGapVariant::Full)
        k.coupling_r = (1.0 - (1.0 - mu) * k.grid.nodes.array()).matrix();
    else
        k.coupling_r = Vec::Ones(k.grid.size());
    k.coupling_theta = 1.0;
    k.cylindrical = false;
    k.eta = 0.0;
    k.mu = mu;
    k.kappa = 1.0;
    k.pes_guaranteed = (mu >= 0.0) && (mu <= 1.0);
    k.label = variant == NarrowGapVariant::Full ? "narrowgap_full" : "narrowgap_symmetric";
    return k;
}

StabilityMode solve_marginal(const SystemKernel& k, double a) {
    if (!(a > 0)) throw ValidationError("wavenumber a must be positive");
    const Index m = k.grid.size();
    const BlockProblem p = assemble_marginal(k, a, false);
    bool complex_smaller = false;
    const auto eigs = positive_generalized_eigs(p.K0, p.K1, complex_smaller, 2);
    if (eigs.empty()) {
        if (complex_smaller)
            throw SolverError("complex marginal eigenvalue - PES assumption violated");
        throw SolverError("no marginal value at this wavenumber");
    }
    if (complex_smaller)
        throw SolverError("complex marginal eigenvalue - PES assumption violated");

    StabilityMode mode;
    mode.a = a;
    mode.lambda0 = eigs[0].value;
    Vec x = eigs[0].x;
    refine_eigenpair_ld(k, a, /*adjoint=*/false, mode.lambda0, x);
    mode.h = x.head(m);
    mode.phi = x.tail(m);
    normalize_mode(mode.h, mode.phi);

    const Mat l2 = k.ops.l_a_squared(a);
    const Mat l1 = k.ops.l_a(a);
    const Vec rhs_h =
        (a * a * mode.lambda0) * (k.coupling_r.array() * mode.phi.array()).matrix();
    const Vec rhs_phi = (-mode.lambda0 * k.coupling_theta) * mode.h;
    mode.residual_h = block_residual(l2, mode.h, rhs_h, 2, m - 2);
    mode.residual_phi = block_residual(l1, mode.phi, rhs_phi, 1, m - 1);
    mode.interior_positive = interior_positive(mode.h) && interior_positive(mode.phi);
    if (!mode.interior_positive) {
        // Try the opposite gauge before reporting sign structure.
        if (interior_positive((-mode.h).eval()) && interior_positive((-mode.phi).eval())) {
            mode.h = -mode.h;
            mode.phi = -mode.phi;
            mode.interior_positive = true;
        }
    }
    if (eigs.size() > 1) {
        mode.spectral_gap = eigs[1].value / mode.lambda0 - 1.0;
        mode.near_degenerate = mode.spectral_gap < 1e-3;
    }
    return mode;
}

AdjointMode solve_adjoint(const SystemKernel& k, double a, double lambda0) {
    const Index m = k.grid.size();
    const BlockProblem p = assemble_marginal(k, a, true);
    bool complex_smaller = false;
    const auto eigs = positive_generalized_eigs(p.K0, p.K1, complex_smaller, 1);
    if (eigs.empty()) throw SolverError("no adjoint marginal value at this wavenumber");
    double lam = eigs[0].value;
    Vec x = eigs[0].x;
    refine_eigenpair_ld(k, a, /*adjoint=*/true, lam, x);
    if (std::abs(lam - lambda0) > 1e-8 * std::abs(lambda0))
        throw SolverError("primal/adjoint spectrum inconsistency - raise resolution");

    AdjointMode adj;
    adj.a = a;
    adj.lambda0 = lam;
    adj.hstar = x.head(m);
    adj.phistar = x.tail(m);
    normalize_mode(adj.hstar, adj.phistar);

    const Mat l2 = k.ops.l_a_squared(a);
    const Mat l1 = k.ops.l_a(a);
    const Vec rhs_h = (lam * k.coupling_theta) * adj.phistar;
    const Vec rhs_phi = (-a * a * lam) * (k.coupling_r.array() * adj.hstar.array()).matrix();
    adj.residual_h = block_residual(l2, adj.hstar, rhs_h, 2, m - 2);
    adj.residual_phi = block_residual(l1, adj.phistar, rhs_phi, 1, m - 1);
    adj.interior_positive = interior_positive(adj.hstar) && interior_positive(adj.phistar);
    if (!adj.interior_positive && interior_positive((-adj.hstar).eval()) &&
        interior_positive((-adj.phistar).eval())) {
        adj.hstar = -adj.hstar;
        adj.phistar = -adj.phistar;
        adj.interior_positive = true;
    }
    return adj;
}

StabilityMode solve_marginal_narrowgap(double mu, double a, NarrowGapVariant variant, int n,
                                       Scheme scheme) {
    return solve_marginal(make_narrowgap_kernel(mu, variant, n, scheme), a);
}

CriticalPoint find_critical(const SystemKernel& k, double a_min, double a_max,
                            double search_tol, int coarse_samples) {
    if (!(a_min > 0) || !(a_max > a_min)) throw ValidationError("invalid wavenumber range");
    if (coarse_samples < 5) throw ValidationError("need at least 5 coarse samples");

    auto lambda_at = [&](double a) -> double {
        try {
            return solve_marginal(k, a).lambda0;
        } catch (const SolverError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    Vec as(coarse_samples), ls(coarse_samples);
    for (int i = 0; i < coarse_samples; ++i) {
        as(i) = a_min + (a_max - a_min) * i / (coarse_samples - 1);
        ls(i) = lambda_at(as(i));
    }
    Index imin = 0;
    ls.minCoeff(&imin);
    if (!std::isfinite(ls(imin))) throw SolverError("no marginal value in scan range");
    CriticalPoint cp;
    if (imin == 0 || imin == coarse_samples - 1)
        throw SolverError("critical wavenumber outside scan range");

    int local_minima = 0;
    for (int i = 1; i + 1 < coarse_samples; ++i)
        if (std::isfinite(ls(i)) && ls(i) < ls(i - 1) && ls(i) < ls(i + 1)) ++local_minima;
    cp.multiple_minima = local_minima > 1;

    // Golden-section refinement inside the bracketing triple.
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = as(imin - 1), hi = as(imin + 1);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = lambda_at(x1), f2 = lambda_at(x2);
    while (hi - lo > search_tol) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = lambda_at(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = lambda_at(x2);
        }
    }
    // Parabolic polish through the best three points.
    const double am = 0.5 * (lo + hi);
    const double fm = lambda_at(am);
    double a_c = am;
    {
        const double x_0 = lo, x_1 = am, x_2 = hi;
        const double f_0 = lambda_at(lo), f_1 = fm, f_2 = lambda_at(hi);
        const double d1 = (f_1 - f_0) / (x_1 - x_0);
        const double d2 = (f_2 - f_1) / (x_2 - x_1);
        const double curv = (d2 - d1) / (x_2 - x_0);
        if (std::isfinite(curv) && curv > 0) {
            const double vertex = 0.5 * (x_0 + x_1 - d1 / curv);
            if (vertex > lo - (hi - lo) && vertex < hi + (hi - lo)) a_c = vertex;
        }
    }
    cp.a_c = a_c;
    cp.L_c = 2.0 * kPi / a_c;
    cp.lambda_c = lambda_at(a_c);
    if (!std::isfinite(cp.lambda_c)) {
        cp.a_c = am;
        cp.lambda_c = fm;
    }
    cp.T_c = cp.lambda_c * cp.lambda_c;
    cp.interior_minimum = true;
    return cp;
}

double growth_rate(const SystemKernel& k, double a, double lambda, bool* complex_flag) {
    const Index m = k.grid.size();
    Mat l2 = k.ops.l_a_squared(a);
    Mat l1 = k.ops.l_a(a);

    Mat a_sys = Mat::Zero(2 * m, 2 * m);
    Mat b_sys = Mat::Zero(2 * m, 2 * m);
    a_sys.topLeftCorner(m, m) = l2;
    a_sys.bottomRightCorner(m, m) = l1;
    for (Index i = 2; i + 2 < m; ++i)
        a_sys(i, m + i) = -a * a * lambda * k.coupling_r(i);
    for (Index i = 1; i + 1 < m; ++i) a_sys(m + i, i) = lambda * k.coupling_theta;
    // Mass rows: beta multiplies (DDstar - a^2) h and phi on equation rows only.
    for (Index i = 2; i + 2 < m; ++i) b_sys.row(i).head(m) = l1.row(i);
    for (Index i = 1; i + 1 < m; ++i) b_sys(m + i, m + i) = 1.0;
    {
        Mat htop = a_sys.topLeftCorner(m, m);
        embed_boundary_rows(htop, clamped_bcs(), k.ops);
        a_sys.topLeftCorner(m, m) = htop;
        Mat pbot = a_sys.bottomRightCorner(m, m);
        embed_boundary_rows(pbot, dirichlet_bcs(), k.ops);
        a_sys.bottomRightCorner(m, m) = pbot;
    }
    equilibrate_rows(a_sys, b_sys);

    double sigma = 0.0;
    for (int attempt = 0; attempt < 3; ++attempt) {
        Mat shifted = a_sys - sigma * b_sys;
        Eigen::PartialPivLU<Mat> lu(shifted);
        const Vec udiag = lu.matrixLU().diagonal().cwiseAbs();
        if (udiag.minCoeff() < 1e-14 * udiag.maxCoeff()) {
            sigma = (sigma == 0.0) ? -1e-6 * (1.0 + a * a) : sigma * 10;
            continue;
        }
        // Power iteration with periodic Rayleigh-Ritz on a small block.
        const int block = std::min<Index>(6, 2 * m);
        std::mt19937 rng(0xbeef);
        std::normal_distribution<double> gauss;
        Mat v(2 * m, block);
        for (Index i = 0; i < 2 * m; ++i)
            for (int j = 0; j < block; ++j) v(i, j) = gauss(rng);
        v = orthonormalize(v);
        std::complex<double> mu_lead(0, 0);
        Vec lead;
        for (int iter = 0; iter < 200; ++iter) {
            for (int s = 0; s < 4; ++s) v = orthonormalize(lu.solve(b_sys * v));
            const Mat w = lu.solve(b_sys * v);
            const Mat h = v.transpose() * w;
            Eigen::EigenSolver<Mat> es(h);
            Index jbest = 0;
            double best = -1;
            for (Index j = 0; j < h.rows(); ++j) {
                const double mag = std::abs(es.eigenvalues()(j));
                if (mag > best) {
                    best = mag;
                    jbest = j;
                }
            }
            mu_lead = es.eigenvalues()(jbest);
            lead = v * es.eigenvectors().col(jbest).real();
            const Vec mx = lu.solve(b_sys * lead);
            const double resid =
                (mx - mu_lead.real() * lead).norm() / std::max(1e-300, std::abs(mu_lead));
            if (std::abs(mu_lead.imag()) > 1e-8 * std::abs(mu_lead)) {
                if (iter > 30) break;  // genuinely complex pair
            } else if (resid < 1e-11) {
                break;
            }
        }
        if (std::abs(mu_lead) < 1e-300) {
            sigma = (sigma == 0.0) ? -1e-6 * (1.0 + a * a) : sigma * 10;
            continue;
        }
        const std::complex<double> beta = sigma + 1.0 / mu_lead;
        const bool is_complex = std::abs(beta.imag()) > 1e-8 * std::max(1.0, std::abs(beta));
        if (complex_flag) *complex_flag = is_complex;
        return beta.real();
    }
    throw SolverError("growth-rate solve failed: shifted operator singular");
}

GrowthCurve growth_curve(const SystemKernel& k, double a, double lambda_c, double rel_span,
                         int samples) {
    if (samples < 3) throw ValidationError("growth_curve needs at least 3 samples");
    GrowthCurve gc;
    gc.lambda_c = lambda_c;
    gc.lambdas.resize(samples);
    gc.betas.resize(samples);
    for (int i = 0; i < samples; ++i) {
        const double t = -1.0 + 2.0 * i / (samples - 1);
        const double lam = lambda_c * (1.0 + rel_span * t);
        gc.lambdas(i) = lam;
        gc.betas(i) = growth_rate(k, a, lam);
    }
    const double dl = lambda_c * rel_span * 1e-1;
    gc.slope_at_critical =
        (growth_rate(k, a, lambda_c + dl) - growth_rate(k, a, lambda_c - dl)) / (2 * dl);
    return gc;
}

double mode_rho(const SystemKernel& k, const StabilityMode& mode, const AdjointMode& adj) {
    const double length = 2.0 * kPi / mode.a;
    const Vec ph = k.ops.Dstar * mode.h;
    const Vec phs = k.ops.Dstar * adj.hstar;
    const double a2 = mode.a * mode.a;
    const Vec integrand = (ph.array() * phs.array() + a2 * mode.h.array() * adj.hstar.array() +
                           mode.phi.array() * adj.phistar.array())
                              .matrix();
    return 0.5 * length * (integrand.array() * k.grid.quad_weights.array()).sum();
}

PesReport pes_check(const SystemKernel& k, const StabilityMode& mode, const AdjointMode& adj) {
    if (mode.a != adj.a) throw ValidationError("pes_check: mode/adjoint wavenumber mismatch");
    PesReport r;
    const double length = 2.0 * kPi / mode.a;
    const double a2 = mode.a * mode.a;
    // (B psi1, psi1*)_H reduced over one period.
    const Vec term_r = (a2 * k.coupling_r.array() * mode.phi.array() * adj.hstar.array()).matrix();
    const Vec term_theta =
        (k.coupling_theta * mode.h.array() * adj.phistar.array()).matrix();
    r.pairing = 0.5 * length *
                ((term_r + term_theta).array() * k.grid.quad_weights.array()).sum();
    const double scale =
        mode.h.norm() * adj.phistar.norm() + mode.phi.norm() * adj.hstar.norm();
    if (std::abs(r.pairing) < 1e-10 * scale) throw SolverError("PES pairing degenerate");
    r.pairing_nonzero = true;
    r.h_positive = interior_positive(mode.h);
    r.phi_positive = interior_positive(mode.phi);
    r.hstar_positive = interior_positive(adj.hstar);
    r.phistar_positive = interior_positive(adj.phistar);
    bool integrand_pos = true;
    for (Index i = 1; i + 1 < mode.h.size(); ++i)
        if (term_r(i) + term_theta(i) <= 0) integrand_pos = false;
    r.integrand_positive = integrand_pos;
    r.growth_slope = (growth_rate(k, mode.a, mode.lambda0 * (1 + 1e-3)) -
                      growth_rate(k, mode.a, mode.lambda0 * (1 - 1e-3))) /
                     (2e-3 * mode.lambda0);
    r.pes_ok = r.pairing_nonzero && r.growth_slope > 0 && r.h_positive && r.phi_positive &&
               r.hstar_positive && r.phistar_positive;
    return r;
}

}  // namespace taylor
