#include "taylor/dns.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <random>

namespace taylor {

namespace {

using CVec = Eigen::VectorXcd;
using CMatx = Eigen::MatrixXcd;
using Cplx = std::complex<double>;

// Real tridiagonal factors of one z-mode of the implicit operators plus the
// influence data that pins the wall vorticity to the no-slip constraint.
struct ModeSolver {
    Vec a_visc, b_visc, c_visc;  // (1 - dt (Delta - 1/r^2)) on interior nodes
    Vec a_psi, b_psi, c_psi;     // stream operator on interior nodes
    Vec omega_in, omega_out;     // unit wall-vorticity diffusion responses
    Vec psi_in, psi_out;         // their stream responses
    double s[2][2] = {};         // wall-slope matrix of the responses
    double det = 0;
};

struct Workspace {
    int nr, nz;
    double dxi, dz, length;
    Vec r, rinv;
    Vec gp, gpp;    // metric r'(xi), r''(xi) of the wall-clustered map
    double dr_min = 0;
    double lambda, kappa;
    Vec c_r;
    Vec sigma;
    Eigen::FFT<double> fft;
    std::vector<ModeSolver> modes;

    Mat utheta;
    Mat omega;  // fluctuating part, zero z-mean
    Mat psi;    // fluctuating stream function
    Vec uzbar;

    Mat u_r, uz_prime;

    Mat proj_z, proj_r, proj_theta;
    Mat projp_z, projp_r, projp_theta;
    double rho_dns = 1.0;
    Vec wr;
};

void row_fft_fwd(Workspace& w, const Mat& field, CMatx& hat) {
    const int nr = w.nr, nz = w.nz;
    hat.resize(nr + 1, nz);
    Eigen::VectorXd row(nz);
    CVec out(nz);
    for (int i = 0; i <= nr; ++i) {
        row = field.row(i).transpose();
        w.fft.fwd(out, row);
        hat.row(i) = out.transpose();
    }
}

void row_fft_inv(Workspace& w, const CMatx& hat, Mat& field) {
    const int nr = w.nr, nz = w.nz;
    field.resize(nr + 1, nz);
    CVec in(nz);
    Eigen::VectorXd row(nz);
    for (int i = 0; i <= nr; ++i) {
        in = hat.row(i).transpose();
        w.fft.inv(row, in);
        field.row(i) = row.transpose();
    }
}

template <typename VecT>
void thomas(const Vec& a, const Vec& b, const Vec& c, VecT& rhs) {
    const Index n = rhs.size();
    Vec cp(n);
    VecT work = rhs;
    cp(0) = c(0) / b(0);
    work(0) /= b(0);
    for (Index i = 1; i < n; ++i) {
        const double m = b(i) - a(i) * cp(i - 1);
        cp(i) = c(i) / m;
        work(i) = (work(i) - a(i) * work(i - 1)) / m;
    }
    for (Index i = n - 2; i >= 0; --i) work(i) -= cp(i) * work(i + 1);
    rhs = work;
}

Mat dz_fd(const Mat& f, double dz) {
    const Index nr = f.rows(), nz = f.cols();
    Mat out(nr, nz);
    for (Index j = 0; j < nz; ++j) {
        const Index jp = (j + 1) % nz, jm = (j + nz - 1) % nz;
        out.col(j) = (f.col(jp) - f.col(jm)) / (2.0 * dz);
    }
    return out;
}

Mat dr_fd(const Workspace& w, const Mat& f) {
    const Index nr = f.rows() - 1, nz = f.cols();
    Mat out = Mat::Zero(nr + 1, nz);
    for (Index i = 1; i < nr; ++i)
        out.row(i) = (f.row(i + 1) - f.row(i - 1)) / (2.0 * w.dxi * w.gp(i));
    return out;
}

Vec dr_fd_vec(const Workspace& w, const Vec& f) {
    const Index nr = f.size() - 1;
    Vec out = Vec::Zero(nr + 1);
    for (Index i = 1; i < nr; ++i) out(i) = (f(i + 1) - f(i - 1)) / (2.0 * w.dxi * w.gp(i));
    out(0) = (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * w.dxi * w.gp(0));
    out(nr) = (3.0 * f(nr) - 4.0 * f(nr - 1) + f(nr - 2)) / (2.0 * w.dxi * w.gp(nr));
    return out;
}

void build_mode_solvers(Workspace& w, double dt) {
    const int nr = w.nr, nz = w.nz;
    w.modes.resize(nz);
    for (int k = 0; k < nz; ++k) {
        ModeSolver& ms = w.modes[k];
        const double sig = w.sigma(k);
        ms.a_visc.resize(nr - 1);
        ms.b_visc.resize(nr - 1);
        ms.c_visc.resize(nr - 1);
        ms.a_psi.resize(nr - 1);
        ms.b_psi.resize(nr - 1);
        ms.c_psi.resize(nr - 1);
        for (int i = 1; i < nr; ++i) {
            const double ri = w.r(i);
            const double alpha = 1.0 / (w.gp(i) * w.gp(i));
            const double curv = -w.gpp(i) / std::pow(w.gp(i), 3);
            const double beta_plus = curv + 1.0 / (ri * w.gp(i));   // Delta drift
            const double beta_minus = curv - 1.0 / (ri * w.gp(i));  // stream drift
            const double d2 = alpha / (w.dxi * w.dxi);
            ms.a_visc(i - 1) = -dt * (d2 - beta_plus / (2.0 * w.dxi));
            ms.c_visc(i - 1) = -dt * (d2 + beta_plus / (2.0 * w.dxi));
            ms.b_visc(i - 1) = 1.0 + dt * (2.0 * d2 - sig + 1.0 / (ri * ri));
            ms.a_psi(i - 1) = d2 - beta_minus / (2.0 * w.dxi);
            ms.c_psi(i - 1) = d2 + beta_minus / (2.0 * w.dxi);
            ms.b_psi(i - 1) = -2.0 * d2 + sig;
        }
        if (k == 0) continue;  // the fluctuation solver never sees mode zero

        // Unit wall-vorticity responses and their stream-function slopes.
        auto response = [&](bool inner_wall, Vec& omega_resp, Vec& psi_resp, double& slope_in,
                            double& slope_out) {
            Vec rhs = Vec::Zero(nr - 1);
            if (inner_wall)
                rhs(0) = -ms.a_visc(0);
            else
                rhs(nr - 2) = -ms.c_visc(nr - 2);
            thomas(ms.a_visc, ms.b_visc, ms.c_visc, rhs);
            omega_resp = Vec::Zero(nr + 1);
            omega_resp(0) = inner_wall ? 1.0 : 0.0;
            omega_resp(nr) = inner_wall ? 0.0 : 1.0;
            omega_resp.segment(1, nr - 1) = rhs;
            Vec prhs(nr - 1);
            for (int i = 1; i < nr; ++i) prhs(i - 1) = -w.r(i) * omega_resp(i);
            thomas(ms.a_psi, ms.b_psi, ms.c_psi, prhs);
            psi_resp = Vec::Zero(nr + 1);
            psi_resp.segment(1, nr - 1) = prhs;
            slope_in = (4.0 * psi_resp(1) - psi_resp(2)) / (2.0 * w.dxi);
            slope_out = (-4.0 * psi_resp(nr - 1) + psi_resp(nr - 2)) / (2.0 * w.dxi);
        };
        double s11, s21, s12, s22;
        response(true, ms.omega_in, ms.psi_in, s11, s21);
        response(false, ms.omega_out, ms.psi_out, s12, s22);
        ms.s[0][0] = s11;
        ms.s[0][1] = s12;
        ms.s[1][0] = s21;
        ms.s[1][1] = s22;
        ms.det = s11 * s22 - s12 * s21;
        if (ms.det == 0) throw SolverError("dns: singular wall influence matrix");
    }
}

// Advance the fluctuating vorticity with implicit diffusion and exact
// no-slip: per mode, the two wall-vorticity amplitudes are chosen so the
// wall slopes of the stream function vanish.
void advance_vorticity(Workspace& w, const Mat& rhs_field) {
    const int nr = w.nr, nz = w.nz;
    CMatx hat;
    row_fft_fwd(w, rhs_field, hat);
    CMatx psi_hat = CMatx::Zero(nr + 1, nz);
    CVec rhs(nr - 1), prhs(nr - 1);
    for (int k = 0; k < nz; ++k) {
        if (k == 0) {
            hat.col(0).setZero();
            continue;
        }
        ModeSolver& ms = w.modes[k];
        for (int i = 1; i < nr; ++i) rhs(i - 1) = hat(i, k);
        thomas(ms.a_visc, ms.b_visc, ms.c_visc, rhs);
        for (int i = 1; i < nr; ++i) prhs(i - 1) = -w.r(i) * rhs(i - 1);
        thomas(ms.a_psi, ms.b_psi, ms.c_psi, prhs);
        const Cplx slope_in = (4.0 * prhs(0) - prhs(1)) / (2.0 * w.dxi);
        const Cplx slope_out = (-4.0 * prhs(nr - 2) + prhs(nr - 3)) / (2.0 * w.dxi);
        const Cplx ci = (-slope_in * ms.s[1][1] + slope_out * ms.s[0][1]) / ms.det;
        const Cplx co = (-slope_out * ms.s[0][0] + slope_in * ms.s[1][0]) / ms.det;
        hat(0, k) = ci;
        hat(nr, k) = co;
        for (int i = 1; i < nr; ++i)
            hat(i, k) = rhs(i - 1) + ci * ms.omega_in(i) + co * ms.omega_out(i);
        psi_hat(0, k) = 0;
        psi_hat(nr, k) = 0;
        for (int i = 1; i < nr; ++i)
            psi_hat(i, k) = prhs(i - 1) + ci * ms.psi_in(i) + co * ms.psi_out(i);
    }
    row_fft_inv(w, hat, w.omega);
    row_fft_inv(w, psi_hat, w.psi);
}

// Dirichlet implicit diffusion step for the azimuthal velocity.
void advance_utheta(Workspace& w, const Mat& rhs_field) {
    const int nr = w.nr, nz = w.nz;
    CMatx hat;
    row_fft_fwd(w, rhs_field, hat);
    CVec rhs(nr - 1);
    for (int k = 0; k < nz; ++k) {
        ModeSolver& ms = w.modes[k];
        for (int i = 1; i < nr; ++i) rhs(i - 1) = hat(i, k);
        thomas(ms.a_visc, ms.b_visc, ms.c_visc, rhs);
        hat(0, k) = 0;
        hat(nr, k) = 0;
        for (int i = 1; i < nr; ++i) hat(i, k) = rhs(i - 1);
    }
    row_fft_inv(w, hat, w.utheta);
    w.utheta.row(0).setZero();
    w.utheta.row(nr).setZero();
}

// Initial stream function from an externally supplied fluctuating vorticity
// (zero wall vorticity assumed consistent with the seed).
void solve_stream_plain(Workspace& w) {
    const int nr = w.nr, nz = w.nz;
    Mat rhs_field = w.omega;
    for (int i = 0; i <= nr; ++i) rhs_field.row(i) *= -w.r(i);
    CMatx hat;
    row_fft_fwd(w, rhs_field, hat);
    CVec rhs(nr - 1);
    for (int k = 0; k < nz; ++k) {
        if (k == 0) {
            hat.col(0).setZero();
            continue;
        }
        ModeSolver& ms = w.modes[k];
        for (int i = 1; i < nr; ++i) rhs(i - 1) = hat(i, k);
        thomas(ms.a_psi, ms.b_psi, ms.c_psi, rhs);
        hat(0, k) = 0;
        hat(nr, k) = 0;
        for (int i = 1; i < nr; ++i) hat(i, k) = rhs(i - 1);
    }
    row_fft_inv(w, hat, w.psi);
    w.psi.row(0).setZero();
    w.psi.row(nr).setZero();
}

void derive_velocities(Workspace& w) {
    const int nr = w.nr;
    const Mat psi_z = dz_fd(w.psi, w.dz);
    const Mat psi_r = dr_fd(w, w.psi);
    w.u_r = psi_z;
    w.uz_prime = psi_r;
    for (int i = 0; i <= nr; ++i) {
        w.u_r.row(i) *= -w.rinv(i);
        w.uz_prime.row(i) *= w.rinv(i);
    }
    w.u_r.row(0).setZero();
    w.u_r.row(nr).setZero();
    w.uz_prime.row(0).setZero();
    w.uz_prime.row(nr).setZero();
}

double energy_of(const Workspace& w) {
    double total = 0;
    for (int i = 0; i <= w.nr; ++i) {
        double rowsum = 0;
        for (int j = 0; j < w.nz; ++j) {
            const double uz = w.uzbar(i) + w.uz_prime(i, j);
            rowsum += uz * uz + w.u_r(i, j) * w.u_r(i, j) + w.utheta(i, j) * w.utheta(i, j);
        }
        total += w.wr(i) * w.r(i) * rowsum * w.dz;
    }
    return 0.5 * total;
}

double project(const Workspace& w, const Mat& pz, const Mat& pr, const Mat& pt) {
    double total = 0;
    for (int i = 0; i <= w.nr; ++i) {
        double rowsum = 0;
        for (int j = 0; j < w.nz; ++j) {
            const double uz = w.uzbar(i) + w.uz_prime(i, j);
            rowsum += uz * pz(i, j) + w.u_r(i, j) * pr(i, j) + w.utheta(i, j) * pt(i, j);
        }
        total += w.wr(i) * w.r(i) * rowsum * w.dz;
    }
    return total;
}

double flux_of(const Workspace& w) {
    double total = 0;
    for (int i = 0; i <= w.nr; ++i) total += w.wr(i) * w.r(i) * w.uzbar(i);
    return total * w.length;
}

}  // namespace

DnsResult run_dns(const DnsConfig& cfg, const SystemKernel& kernel, const StabilityMode& mode,
                  const AdjointMode& adj) {
    if (cfg.nz % 2 != 0 || cfg.nz < 8) throw ValidationError("dns: nz must be even and >= 8");
    if (cfg.nr < 8) throw ValidationError("dns: nr too small");
    if (!(cfg.dt > 0) || !(cfg.t_end > 0)) throw ValidationError("dns: bad time span");
    if (!(cfg.length > 0)) throw ValidationError("dns: axial period must be positive");

    const auto params = params_from_ratios(cfg.eta, cfg.mu);
    Workspace w;
    w.nr = cfg.nr;
    w.nz = cfg.nz;
    w.length = cfg.length;
    w.dxi = 1.0 / cfg.nr;
    w.dz = cfg.length / cfg.nz;
    // Wall-clustered map r(xi) = eta + gap (xi - s sin(2 pi xi)/(2 pi)).
    {
        const double gap = 1.0 - cfg.eta;
        const double s = std::clamp(cfg.wall_cluster, 0.0, 0.95);
        w.r.resize(cfg.nr + 1);
        w.gp.resize(cfg.nr + 1);
        w.gpp.resize(cfg.nr + 1);
        for (int i = 0; i <= cfg.nr; ++i) {
            const double xi = double(i) / cfg.nr;
            w.r(i) = cfg.eta + gap * (xi - s * std::sin(2.0 * kPi * xi) / (2.0 * kPi));
            w.gp(i) = gap * (1.0 - s * std::cos(2.0 * kPi * xi));
            w.gpp(i) = gap * s * 2.0 * kPi * std::sin(2.0 * kPi * xi);
        }
        w.r(cfg.nr) = 1.0;
        w.dr_min = (w.r.tail(cfg.nr) - w.r.head(cfg.nr)).minCoeff();
    }
    w.rinv = w.r.cwiseInverse();
    w.lambda = std::sqrt(cfg.taylor);
    w.kappa = params.kappa;
    w.c_r = (w.r.array().square().inverse() - w.kappa).matrix();
    w.sigma.resize(cfg.nz);
    for (int k = 0; k < cfg.nz; ++k)
        w.sigma(k) = -(2.0 - 2.0 * std::cos(2.0 * kPi * k / cfg.nz)) / (w.dz * w.dz);
    w.wr.resize(cfg.nr + 1);
    w.wr(0) = 0.5 * (w.r(1) - w.r(0));
    w.wr(cfg.nr) = 0.5 * (w.r(cfg.nr) - w.r(cfg.nr - 1));
    for (int i = 1; i < cfg.nr; ++i) w.wr(i) = 0.5 * (w.r(i + 1) - w.r(i - 1));
    build_mode_solvers(w, cfg.dt);

    // Projection basis sampled on the run's grid.
    {
        const Mat interp = interpolation_matrix(kernel.grid, w.r);
        const Vec hs = interp * adj.hstar;
        const Vec ps = interp * (kernel.ops.Dstar * adj.hstar);
        const Vec fs = interp * adj.phistar;
        const double a = mode.a;
        w.proj_z.resize(cfg.nr + 1, cfg.nz);
        w.proj_r.resize(cfg.nr + 1, cfg.nz);
        w.proj_theta.resize(cfg.nr + 1, cfg.nz);
        w.projp_z.resize(cfg.nr + 1, cfg.nz);
        w.projp_r.resize(cfg.nr + 1, cfg.nz);
        w.projp_theta.resize(cfg.nr + 1, cfg.nz);
        for (int j = 0; j < cfg.nz; ++j) {
            const double z = j * w.dz;
            const double c = std::cos(a * z), s = std::sin(a * z);
            w.proj_z.col(j) = -a * s * ps;
            w.proj_r.col(j) = a * a * c * hs;
            w.proj_theta.col(j) = c * fs;
            w.projp_z.col(j) = a * c * ps;
            w.projp_r.col(j) = a * a * s * hs;
            w.projp_theta.col(j) = s * fs;
        }
        // rho with the run's own quadrature so a pure seed projects exactly.
        const Vec hm = interp * mode.h;
        const Vec pm = interp * (kernel.ops.Dstar * mode.h);
        const Vec fm = interp * mode.phi;
        double rho = 0;
        for (int i = 0; i <= cfg.nr; ++i) {
            double rowsum = 0;
            for (int j = 0; j < cfg.nz; ++j) {
                const double z = j * w.dz;
                const double c = std::cos(a * z), s = std::sin(a * z);
                rowsum += (-(1.0 / a) * s * pm(i)) * w.proj_z(i, j) +
                          (c * hm(i)) * w.proj_r(i, j) + (c * fm(i)) * w.proj_theta(i, j);
            }
            rho += w.wr(i) * w.r(i) * rowsum * w.dz;
        }
        w.rho_dns = rho;
    }

    // Initial state.
    w.utheta = Mat::Zero(cfg.nr + 1, cfg.nz);
    w.omega = Mat::Zero(cfg.nr + 1, cfg.nz);
    w.uzbar = Vec::Zero(cfg.nr + 1);
    if (cfg.init == DnsInit::EigenSeed) {
        const Mat interp = interpolation_matrix(kernel.grid, w.r);
        const Vec hm = interp * mode.h;
        const Vec fm = interp * mode.phi;
        const Vec lah = interp * (kernel.ops.l_a(mode.a) * mode.h);
        for (int j = 0; j < cfg.nz; ++j) {
            const double z = j * w.dz;
            w.utheta.col(j) = cfg.eps * std::cos(mode.a * z) * fm;
            w.omega.col(j) = (cfg.eps / mode.a) * std::sin(mode.a * z) * lah;
        }
        w.utheta.row(0).setZero();
        w.utheta.row(cfg.nr).setZero();
        w.omega.row(0).setZero();
        w.omega.row(cfg.nr).setZero();
    } else if (cfg.init == DnsInit::Random) {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> coef(-1.0, 1.0);
        Mat psi0 = Mat::Zero(cfg.nr + 1, cfg.nz);
        for (int kmode = 1; kmode <= 3; ++kmode) {
            const double cc = coef(rng), cs = coef(rng), tc = coef(rng), ts = coef(rng);
            for (int i = 0; i <= cfg.nr; ++i) {
                const double x = (w.r(i) - cfg.eta) / (1.0 - cfg.eta);
                const double shape = x * x * (1 - x) * (1 - x);
                const double tshape = x * (1 - x);
                for (int j = 0; j < cfg.nz; ++j) {
                    const double ph = 2.0 * kPi * kmode * j / cfg.nz;
                    psi0(i, j) += cfg.eps * shape * (cc * std::cos(ph) + cs * std::sin(ph));
                    w.utheta(i, j) += cfg.eps * tshape * (tc * std::cos(ph) + ts * std::sin(ph));
                }
            }
        }
        for (int i = 1; i < cfg.nr; ++i) {
            const double alpha = 1.0 / (w.gp(i) * w.gp(i));
            const double curv = -w.gpp(i) / std::pow(w.gp(i), 3);
            for (int j = 0; j < cfg.nz; ++j) {
                const int jp = (j + 1) % cfg.nz, jm = (j + cfg.nz - 1) % cfg.nz;
                const double psi_zz = (psi0(i, jp) - 2 * psi0(i, j) + psi0(i, jm)) / (w.dz * w.dz);
                const double psi_xx =
                    (psi0(i + 1, j) - 2 * psi0(i, j) + psi0(i - 1, j)) / (w.dxi * w.dxi);
                const double psi_x = (psi0(i + 1, j) - psi0(i - 1, j)) / (2 * w.dxi);
                const double psi_rr = alpha * psi_xx + curv * psi_x;
                const double psi_r = psi_x / w.gp(i);
                w.omega(i, j) = -(psi_rr - psi_r / w.r(i) + psi_zz) / w.r(i);
            }
        }
    } else {
        const FieldSnapshot snap = read_snapshot(cfg.snapshot_path);
        if (snap.r_nodes.size() != cfg.nr + 1 || snap.z_nodes.size() != cfg.nz)
            throw ValidationError("dns: snapshot grid does not match the configured grid");
        w.utheta = snap.u_theta;
        for (int i = 0; i <= cfg.nr; ++i) w.uzbar(i) = snap.u_z.row(i).mean();
        Mat uzp = snap.u_z;
        for (int i = 0; i <= cfg.nr; ++i) uzp.row(i).array() -= w.uzbar(i);
        const Mat dur_dz = dz_fd(snap.u_r, w.dz);
        const Mat duz_dr = dr_fd(w, uzp);
        w.omega = dur_dz - duz_dr;
        w.omega.row(0).setZero();
        w.omega.row(cfg.nr).setZero();
    }
    for (int i = 0; i <= cfg.nr; ++i) w.omega.row(i).array() -= w.omega.row(i).mean();
    solve_stream_plain(w);
    derive_velocities(w);

    DnsResult result;
    const long nsteps = static_cast<long>(std::llround(cfg.t_end / cfg.dt));

    auto sample = [&](double t) {
        DnsSample s;
        s.t = t;
        s.energy = energy_of(w);
        s.amp = project(w, w.proj_z, w.proj_r, w.proj_theta) / w.rho_dns;
        s.amp_partner = project(w, w.projp_z, w.projp_r, w.projp_theta) / w.rho_dns;
        s.flux = flux_of(w);
        result.series.samples.push_back(s);
        return s;
    };
    sample(0.0);

    const bool debug = std::getenv("TAYLOR_DNS_DEBUG") != nullptr;
    Mat ntheta = Mat::Zero(cfg.nr + 1, cfg.nz), nomega = Mat::Zero(cfg.nr + 1, cfg.nz);
    for (long step = 0; step < nsteps; ++step) {
        if (debug && step < 16)
            std::fprintf(stderr, "step %ld: |omega|=%.3e |psi|=%.3e |utheta|=%.3e |ur|=%.3e\n",
                         step, w.omega.cwiseAbs().maxCoeff(), w.psi.cwiseAbs().maxCoeff(),
                         w.utheta.cwiseAbs().maxCoeff(), w.u_r.cwiseAbs().maxCoeff());
        const double umax_r = w.u_r.cwiseAbs().maxCoeff();
        const double umax_z = w.uz_prime.cwiseAbs().maxCoeff() + w.uzbar.cwiseAbs().maxCoeff();
        if (umax_r * cfg.dt / w.dr_min > 0.9 || umax_z * cfg.dt / w.dz > 0.9) {
            result.series.aborted = true;
            result.series.abort_reason =
                "CFL violation: |u_r| dt/dr = " + std::to_string(umax_r * cfg.dt / w.dr_min) +
                ", |u_z| dt/dz = " + std::to_string(umax_z * cfg.dt / w.dz) + " at step " +
                std::to_string(step);
            break;
        }
        if (!w.utheta.allFinite() || w.utheta.cwiseAbs().maxCoeff() > cfg.blowup_limit) {
            result.series.aborted = true;
            result.series.abort_reason = "state blew up";
            break;
        }

        const Vec omega_bar = -dr_fd_vec(w, w.uzbar);
        Mat omega_full = w.omega;
        for (int i = 0; i <= cfg.nr; ++i) omega_full.row(i).array() += omega_bar(i);

        const Mat dth_dz = dz_fd(w.utheta, w.dz);
        const Mat dth_dr = dr_fd(w, w.utheta);
        const Mat dom_dz = dz_fd(omega_full, w.dz);
        const Mat dom_dr = dr_fd(w, omega_full);

        for (int i = 1; i < cfg.nr; ++i) {
            const double ri = w.r(i);
            for (int j = 0; j < cfg.nz; ++j) {
                const double uz = w.uzbar(i) + w.uz_prime(i, j);
                const double ur = w.u_r(i, j);
                ntheta(i, j) = -(ur * dth_dr(i, j) + uz * dth_dz(i, j)) +
                               w.lambda * w.kappa * ur - ur * w.utheta(i, j) / ri;
                nomega(i, j) = -(ur * dom_dr(i, j) + uz * dom_dz(i, j)) +
                               (w.lambda * w.c_r(i) + 2.0 * w.utheta(i, j) / ri) * dth_dz(i, j) +
                               ur * omega_full(i, j) / ri;
            }
        }

        // Mean axial forcing; the fluctuating vorticity source is de-meaned so
        // the mean shear stays with the separately advanced profile.
        Vec nmean = Vec::Zero(cfg.nr + 1);
        const Mat duzp_dr = dr_fd(w, w.uz_prime);
        for (int i = 1; i < cfg.nr; ++i) {
            double acc = 0;
            for (int j = 0; j < cfg.nz; ++j) acc += w.u_r(i, j) * duzp_dr(i, j);
            nmean(i) = -acc / cfg.nz;
        }
        for (int i = 1; i < cfg.nr; ++i) nomega.row(i).array() -= nomega.row(i).mean();

        Mat rhs_theta = w.utheta + cfg.dt * ntheta;
        rhs_theta.row(0).setZero();
        rhs_theta.row(cfg.nr).setZero();
        advance_utheta(w, rhs_theta);

        Mat rhs_omega = w.omega + cfg.dt * nomega;
        rhs_omega.row(0).setZero();
        rhs_omega.row(cfg.nr).setZero();
        advance_vorticity(w, rhs_omega);

        {
            Vec rhs = w.uzbar + cfg.dt * nmean;
            Vec interior(cfg.nr - 1);
            const ModeSolver& ms0 = w.modes[0];
            // Mean diffusion lacks the curvature penalty: adjust the diagonal.
            Vec bmean = ms0.b_visc;
            for (int i = 1; i < cfg.nr; ++i) bmean(i - 1) -= cfg.dt / (w.r(i) * w.r(i));
            for (int i = 1; i < cfg.nr; ++i) interior(i - 1) = rhs(i);
            thomas(ms0.a_visc, bmean, ms0.c_visc, interior);
            for (int i = 1; i < cfg.nr; ++i) w.uzbar(i) = interior(i - 1);
            w.uzbar(0) = w.uzbar(cfg.nr) = 0;
        }

        derive_velocities(w);
        const double t = (step + 1) * cfg.dt;
        if ((step + 1) % cfg.sample_every == 0 || step + 1 == nsteps) {
            const auto s = sample(t);
            if (!std::isfinite(s.energy)) {
                result.series.aborted = true;
                result.series.abort_reason = "energy is not finite";
                break;
            }
        }
    }

    FieldSnapshot snap;
    snap.r_nodes = w.r;
    snap.z_nodes = Vec::LinSpaced(cfg.nz, 0.0, w.length * (cfg.nz - 1) / cfg.nz);
    snap.u_z = w.uz_prime;
    for (int i = 0; i <= cfg.nr; ++i) snap.u_z.row(i).array() += w.uzbar(i);
    snap.u_r = w.u_r;
    snap.u_theta = w.utheta;
    snap.meta.eta = cfg.eta;
    snap.meta.mu = cfg.mu;
    snap.meta.lambda = w.lambda;
    snap.meta.period = w.length;
    snap.meta.note = "dns final state";
    result.final_state = std::move(snap);
    return result;
}

ExponentFit measure_exponent(const std::vector<std::pair<double, double>>& saturated_amps,
                             double t_c) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [taylor, amp] : saturated_amps)
        if (taylor > t_c && amp > 0) pts.emplace_back(std::log(taylor - t_c), std::log(amp));
    if (pts.size() < 3) throw ValidationError("insufficient data: need 3 usable points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(pts.size());
    ExponentFit fit;
    fit.beta = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.beta * sx) / n;
    fit.n_used = static_cast<int>(pts.size());
    return fit;
}

RateFit fit_exponential_rate(const DnsSeries& series, double window_start_frac,
                             double window_end_frac) {
    if (series.samples.size() < 4) throw ValidationError("rate fit needs at least 4 samples");
    const double t_end = series.samples.back().t;
    const double t0 = window_start_frac * t_end, t1 = window_end_frac * t_end;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& s : series.samples) {
        if (s.t < t0 || s.t > t1) continue;
        const double a = std::abs(s.amp);
        if (!(a > 0) || !std::isfinite(a)) continue;
        const double y = std::log(a);
        sx += s.t;
        sy += y;
        sxx += s.t * s.t;
        sxy += s.t * y;
        ++n;
    }
    if (n < 3) throw ValidationError("insufficient data: rate window too sparse");
    RateFit fit;
    fit.rate = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - fit.rate * sx) / n;
    double ss = 0, tot = 0, mean_y = sy / n;
    for (const auto& s : series.samples) {
        if (s.t < t0 || s.t > t1) continue;
        const double a = std::abs(s.amp);
        if (!(a > 0) || !std::isfinite(a)) continue;
        const double y = std::log(a);
        ss += (y - fit.rate * s.t - intercept) * (y - fit.rate * s.t - intercept);
        tot += (y - mean_y) * (y - mean_y);
    }
    fit.rel_residual = tot > 0 ? std::sqrt(ss / tot) : 0;
    fit.n_used = n;
    return fit;
}

TstarBracket bracket_Tstar(const DnsConfig& base, const SystemKernel& kernel,
                           const StabilityMode& mode, const AdjointMode& adj, double t_start,
                           double t_low, int descent_steps, double survive_threshold,
                           bool verify_bistability) {
    if (!(t_low < t_start)) throw ValidationError("bracket_Tstar: need t_low < t_start");
    if (descent_steps < 2) throw ValidationError("bracket_Tstar: need at least 2 descent steps");

    TstarBracket out;
    DnsConfig cfg = base;
    cfg.taylor = t_start;
    DnsResult state = run_dns(cfg, kernel, mode, adj);
    std::string restart = "/tmp/taylor_bracket_state.bin";
    if (!base.snapshot_path.empty()) restart = base.snapshot_path + ".bracket";
    bool have_survivor = false;
    bool collapsed = false;
    const double step = (t_start - t_low) / descent_steps;
    double taylor = t_start;
    for (int s = 0; s <= descent_steps; ++s) {
        const double amp = std::abs(state.series.samples.back().amp);
        const bool survived = amp > survive_threshold && !state.series.aborted;
        out.descent.emplace_back(taylor, survived);
        if (survived) {
            out.last_surviving = taylor;
            have_survivor = true;
        } else {
            out.first_collapsing = taylor;
            collapsed = true;
            break;
        }
        if (s == descent_steps) break;
        taylor -= step;
        write_snapshot(restart, state.final_state);
        cfg = base;
        cfg.taylor = taylor;
        cfg.init = DnsInit::Snapshot;
        cfg.snapshot_path = restart;
        state = run_dns(cfg, kernel, mode, adj);
    }
    if (!have_survivor) throw SolverError("bracket_Tstar: starting state did not persist");
    if (!collapsed) throw SolverError("T* below scan range");

    if (verify_bistability) {
        DnsConfig small = base;
        small.taylor = out.last_surviving;
        small.init = DnsInit::EigenSeed;
        small.eps = 1e-5;
        const DnsResult fresh = run_dns(small, kernel, mode, adj);
        const double start_amp = std::abs(fresh.series.samples.front().amp);
        const double end_amp = std::abs(fresh.series.samples.back().amp);
        out.bistable_confirmed = end_amp < 0.5 * start_amp;
    }
    return out;
}

}  // namespace taylor
