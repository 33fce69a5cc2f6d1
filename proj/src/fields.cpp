#include "taylor/fields.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace taylor {

namespace {

Mat sample_scalar(const TrigScalar& s, double a, const Vec& z) {
    const Index nr = s.radial_size();
    Mat out = Mat::Zero(nr, z.size());
    for (Index j = 0; j < z.size(); ++j) {
        for (int h = 0; h <= s.harmonics(); ++h) {
            const double c = std::cos(h * a * z(j));
            const double sn = std::sin(h * a * z(j));
            out.col(j) += c * s.cos_part[h] + sn * s.sin_part[h];
        }
    }
    return out;
}

}  // namespace

FieldSnapshot sample_field(const SystemKernel& k, const TrigField& f, int nz, SnapshotMeta meta) {
    if (nz < 4 || nz % 2 != 0) throw ValidationError("sample_field: nz must be even and >= 4");
    FieldSnapshot snap;
    snap.r_nodes = k.grid.nodes;
    const double length = f.period();
    snap.z_nodes = Vec::LinSpaced(nz, 0.0, length * (nz - 1) / nz);
    snap.u_z = sample_scalar(f.z, f.a, snap.z_nodes);
    snap.u_r = sample_scalar(f.r, f.a, snap.z_nodes);
    snap.u_theta = sample_scalar(f.theta, f.a, snap.z_nodes);
    meta.period = length;
    snap.meta = std::move(meta);
    return snap;
}

FieldSnapshot reconstruct_eigenfield(const SystemKernel& k, const StabilityMode& mode, double z0,
                                     double amplitude, int nz) {
    const TrigField f = field_zshift(eigenfield(k, mode, amplitude), z0);
    SnapshotMeta meta;
    meta.eta = k.eta;
    meta.mu = k.mu;
    meta.lambda = mode.lambda0;
    meta.phase = z0;
    meta.note = "eigenfield";
    return sample_field(k, f, nz, meta);
}

FieldSnapshot secondary_flow(const SystemKernel& k, const StabilityMode& mode,
                             const CMCorrection& corr, double beta1, double R, double phase,
                             int nz, bool include_quadratic) {
    if (!(R < 0)) throw ValidationError("secondary_flow rejects jump-type inputs (R >= 0)");
    if (beta1 < 0) throw ValidationError("secondary_flow: beta1 must be nonnegative");
    const double gamma = std::sqrt(beta1 / std::abs(R));
    TrigField f = field_scale(eigenfield(k, mode), gamma);
    if (include_quadratic) f = field_add(f, field_scale(corr.Phi, gamma * gamma));
    f = field_zshift(f, phase);
    SnapshotMeta meta;
    meta.eta = k.eta;
    meta.mu = k.mu;
    meta.lambda = mode.lambda0;
    meta.phase = phase;
    meta.note = include_quadratic ? "secondary flow, quadratic correction attached"
                                  : "secondary flow, leading order";
    return sample_field(k, f, nz, meta);
}

double snapshot_norm(const FieldSnapshot& snap) {
    const Index nr = snap.r_nodes.size(), nz = snap.z_nodes.size();
    if (nr < 2 || nz < 1) return 0;
    const double dz = snap.meta.period / nz;
    double total = 0;
    for (Index i = 0; i < nr; ++i) {
        const double wr = (i == 0)            ? 0.5 * (snap.r_nodes(1) - snap.r_nodes(0))
                          : (i == nr - 1)     ? 0.5 * (snap.r_nodes(nr - 1) - snap.r_nodes(nr - 2))
                                              : 0.5 * (snap.r_nodes(i + 1) - snap.r_nodes(i - 1));
        for (Index j = 0; j < nz; ++j) {
            const double q = snap.u_z(i, j) * snap.u_z(i, j) + snap.u_r(i, j) * snap.u_r(i, j) +
                             snap.u_theta(i, j) * snap.u_theta(i, j);
            total += wr * dz * snap.r_nodes(i) * q;
        }
    }
    return std::sqrt(total);
}

double snapshot_flux(const FieldSnapshot& snap) {
    const Index nr = snap.r_nodes.size(), nz = snap.z_nodes.size();
    const double dz = snap.meta.period / nz;
    double total = 0;
    for (Index i = 0; i < nr; ++i) {
        const double wr = (i == 0)            ? 0.5 * (snap.r_nodes(1) - snap.r_nodes(0))
                          : (i == nr - 1)     ? 0.5 * (snap.r_nodes(nr - 1) - snap.r_nodes(nr - 2))
                                              : 0.5 * (snap.r_nodes(i + 1) - snap.r_nodes(i - 1));
        for (Index j = 0; j < nz; ++j) total += wr * dz * snap.r_nodes(i) * snap.u_z(i, j);
    }
    return total;
}

double snapshot_divergence(const FieldSnapshot& snap, const SystemKernel* kernel) {
    const Index nr = snap.r_nodes.size(), nz = snap.z_nodes.size();
    // d(w u_z)/dz via the exact trigonometric interpolant derivative.
    Mat dz_uz(nr, nz);
    {
        const double length = snap.meta.period;
        // Differentiate each radial row by DFT synthesis.
        for (Index i = 0; i < nr; ++i) {
            for (Index j = 0; j < nz; ++j) {
                double acc = 0;
                for (Index l = 0; l < nz; ++l) {
                    const Index kk = ((j - l) % nz + nz) % nz;
                    if (kk == 0) continue;
                    const double sign = (kk % 2 == 0) ? 1.0 : -1.0;
                    const double w = 0.5 * sign / std::tan(kPi * kk / nz);
                    acc += w * snap.u_z(i, l);
                }
                dz_uz(i, j) = acc * (2.0 * kPi / length);
            }
        }
    }
    const bool weighted = !kernel || kernel->cylindrical;
    const Vec w = weighted ? snap.r_nodes : Vec::Ones(nr);
    Mat wur = snap.u_r;
    for (Index i = 0; i < nr; ++i) wur.row(i) *= w(i);
    Mat dr_wur(nr, nz);
    if (kernel && kernel->grid.size() == nr &&
        (kernel->grid.nodes - snap.r_nodes).cwiseAbs().maxCoeff() < 1e-14) {
        dr_wur = kernel->ops.D * wur;
    } else {
        for (Index i = 0; i < nr; ++i) {
            if (i == 0 || i == nr - 1) {
                dr_wur.row(i).setZero();  // wall rows excluded below
                continue;
            }
            const double hm = snap.r_nodes(i) - snap.r_nodes(i - 1);
            const double hp = snap.r_nodes(i + 1) - snap.r_nodes(i);
            for (Index j = 0; j < nz; ++j) {
                dr_wur(i, j) = (hm * hm * wur(i + 1, j) - hp * hp * wur(i - 1, j) +
                                (hp * hp - hm * hm) * wur(i, j)) /
                               (hm * hp * (hm + hp));
            }
        }
    }
    double worst = 0;
    for (Index i = 1; i + 1 < nr; ++i)
        for (Index j = 0; j < nz; ++j)
            worst = std::max(worst, std::abs(w(i) * dz_uz(i, j) + dr_wur(i, j)));
    const double unorm = snapshot_norm(snap);
    return unorm > 0 ? worst / unorm : worst;
}

void write_snapshot(const std::string& path, const FieldSnapshot& snap) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open snapshot file for writing: " + path);
    out << "taylor-transit-snapshot v1 float64 little-endian column-major\n";
    out << "nr " << snap.r_nodes.size() << " nz " << snap.z_nodes.size() << "\n";
    out << std::setprecision(17);
    out << "eta " << snap.meta.eta << " mu " << snap.meta.mu << " lambda " << snap.meta.lambda
        << " period " << snap.meta.period << " phase " << snap.meta.phase << "\n";
    out << "gauge " << snap.meta.gauge << "\n";
    out << "note " << snap.meta.note << "\n";
    out << "end-header\n";
    auto dump = [&](const double* p, std::streamsize n) {
        out.write(reinterpret_cast<const char*>(p), n * static_cast<std::streamsize>(sizeof(double)));
    };
    dump(snap.r_nodes.data(), snap.r_nodes.size());
    dump(snap.z_nodes.data(), snap.z_nodes.size());
    dump(snap.u_z.data(), snap.u_z.size());
    dump(snap.u_r.data(), snap.u_r.size());
    dump(snap.u_theta.data(), snap.u_theta.size());
    if (!out) throw IoError("snapshot write failed: " + path);
}

FieldSnapshot read_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open snapshot file: " + path);
    std::string line;
    std::getline(in, line);
    if (line.rfind("taylor-transit-snapshot v1", 0) != 0)
        throw IoError("not a snapshot file: " + path);
    FieldSnapshot snap;
    Index nr = 0, nz = 0;
    std::string key;
    while (std::getline(in, line) && line != "end-header") {
        std::istringstream ls(line);
        ls >> key;
        if (key == "nr") {
            ls >> nr >> key >> nz;
        } else if (key == "eta") {
            ls >> snap.meta.eta >> key >> snap.meta.mu >> key >> snap.meta.lambda >> key >>
                snap.meta.period >> key >> snap.meta.phase;
        } else if (key == "gauge") {
            ls >> snap.meta.gauge;
        } else if (key == "note") {
            std::getline(ls >> std::ws, snap.meta.note);
        }
    }
    if (nr <= 0 || nz <= 0) throw IoError("snapshot header missing grid sizes: " + path);
    snap.r_nodes.resize(nr);
    snap.z_nodes.resize(nz);
    snap.u_z.resize(nr, nz);
    snap.u_r.resize(nr, nz);
    snap.u_theta.resize(nr, nz);
    auto slurp = [&](double* p, std::streamsize n) {
        in.read(reinterpret_cast<char*>(p), n * static_cast<std::streamsize>(sizeof(double)));
    };
    slurp(snap.r_nodes.data(), nr);
    slurp(snap.z_nodes.data(), nz);
    slurp(snap.u_z.data(), nr * nz);
    slurp(snap.u_r.data(), nr * nz);
    slurp(snap.u_theta.data(), nr * nz);
    if (!in) throw IoError("snapshot payload truncated: " + path);
    return snap;
}

void write_snapshot_csv(const std::string& path, const FieldSnapshot& snap) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open csv file for writing: " + path);
    out << "r,z,u_z,u_r,u_theta\n" << std::setprecision(17);
    for (Index j = 0; j < snap.z_nodes.size(); ++j)
        for (Index i = 0; i < snap.r_nodes.size(); ++i)
            out << snap.r_nodes(i) << ',' << snap.z_nodes(j) << ',' << snap.u_z(i, j) << ','
                << snap.u_r(i, j) << ',' << snap.u_theta(i, j) << "\n";
    if (!out) throw IoError("csv write failed: " + path);
}

const char* to_string(PatternClass p) {
    switch (p) {
        case PatternClass::CrossFlowPositive: return "cross_flow_positive";
        case PatternClass::CrossFlowNegative: return "cross_flow_negative";
        case PatternClass::NoCrossFlow: return "no_cross_flow";
        case PatternClass::KCellStack: return "k_cell_stack";
        default: return "unresolved";
    }
}

namespace {

// Least-squares quintic through the nearest nodes; returns f'' at x0 and the
// fit residual.
std::pair<double, double> local_quintic_second_derivative(const Vec& x, const Vec& f, double x0,
                                                          Index center) {
    const Index m = x.size();
    const Index half = 4;
    const Index lo = std::max<Index>(0, std::min<Index>(center - half, m - 9));
    const Index count = std::min<Index>(9, m - lo);
    Mat a(count, 6);
    Vec b(count);
    const double scale = std::max(1e-300, x(lo + count - 1) - x(lo));
    for (Index i = 0; i < count; ++i) {
        const double t = (x(lo + i) - x0) / scale;
        double p = 1;
        for (int c = 0; c < 6; ++c) {
            a(i, c) = p;
            p *= t;
        }
        b(i) = f(lo + i);
    }
    const Vec coef = a.colPivHouseholderQr().solve(b);
    const double resid = (a * coef - b).norm() / std::max(1e-300, b.norm());
    return {2.0 * coef(2) / (scale * scale), resid};
}

}  // namespace

TopologyDiagnostics diagnose_topology(const SystemKernel& k, const FieldSnapshot& snap,
                                      const StabilityMode& mode) {
    TopologyDiagnostics diag;
    const Index m = mode.h.size();

    // Radial cells: one plus the interior sign changes of the stream amplitude.
    int changes = 0;
    double prev = 0;
    for (Index i = 1; i + 1 < m; ++i) {
        const double v = mode.h(i);
        if (std::abs(v) < 1e-12) continue;
        if (prev != 0 && v * prev < 0) ++changes;
        prev = v;
    }
    diag.vortex_cells_radial = 1 + changes;

    // Axial cells per period: sign changes of u_r along z at the cell-core radius.
    Index icore = 0;
    mode.h.cwiseAbs().maxCoeff(&icore);
    {
        const Index nz = snap.z_nodes.size();
        int zc = 0;
        for (Index j = 0; j < nz; ++j) {
            const double v0 = snap.u_r(icore, j);
            const double v1 = snap.u_r(icore, (j + 1) % nz);
            if (v0 * v1 < 0) ++zc;
        }
        diag.vortex_cells_axial = zc;
    }

    diag.cross_channel_flux = snapshot_flux(snap);
    const double unorm = snapshot_norm(snap);
    const double measure = snap.meta.period * 0.5 *
                           (snap.r_nodes(snap.r_nodes.size() - 1) * snap.r_nodes(snap.r_nodes.size() - 1) -
                            snap.r_nodes(0) * snap.r_nodes(0));
    const double flux_tol = 1e-8 * unorm * std::sqrt(std::max(measure, 0.0));
    diag.in_Htilde = std::abs(diag.cross_channel_flux) <= flux_tol;

    // D-regularity: parabolic refinement of the stream-amplitude maximum,
    // then local quintic fits for the three curvature probes.
    {
        const Vec& r = k.grid.nodes;
        double r0 = r(icore);
        if (icore > 0 && icore + 1 < m) {
            const double f0 = mode.h(icore - 1), f1 = mode.h(icore), f2 = mode.h(icore + 1);
            const double x0 = r(icore - 1), x1 = r(icore), x2 = r(icore + 1);
            const double d1 = (f1 - f0) / (x1 - x0), d2 = (f2 - f1) / (x2 - x1);
            const double curv = (d2 - d1) / (x2 - x0);
            if (curv < 0) r0 = 0.5 * (x0 + x1 - d1 / curv);
        }
        diag.r0 = r0;
        const auto [hpp_mid, res_mid] = local_quintic_second_derivative(r, mode.h, r0, icore);
        const auto [hpp_l, res_l] = local_quintic_second_derivative(r, mode.h, r(0), 0);
        const auto [hpp_r, res_r] = local_quintic_second_derivative(r, mode.h, r(m - 1), m - 1);
        diag.hpp_interior = hpp_mid;
        diag.hpp_left = hpp_l;
        diag.hpp_right = hpp_r;
        const double gap = r(m - 1) - r(0);
        const double tol = 1e-6 * mode.h.cwiseAbs().maxCoeff() / (gap * gap);
        if (res_mid > 1e-6 || res_l > 1e-6 || res_r > 1e-6)
            diag.d_regular = DRegularity::Unresolved;
        else if (std::abs(hpp_mid) > tol && std::abs(hpp_l) > tol && std::abs(hpp_r) > tol)
            diag.d_regular = DRegularity::Regular;
        else
            diag.d_regular = DRegularity::Degenerate;
    }

    if (diag.vortex_cells_radial >= 2)
        diag.pattern = PatternClass::KCellStack;
    else if (diag.in_Htilde)
        diag.pattern = PatternClass::NoCrossFlow;
    else
        diag.pattern = diag.cross_channel_flux > 0 ? PatternClass::CrossFlowPositive
                                                   : PatternClass::CrossFlowNegative;
    return diag;
}

EkDecomposition ek_decompose(const SystemKernel& k, const Vec& profile, int n_modes) {
    const Index m = k.grid.size();
    if (profile.size() != m) throw ValidationError("ek_decompose: profile size mismatch");
    if (n_modes < 1 || n_modes > m - 2) throw ValidationError("ek_decompose: bad mode count");

    EkDecomposition out;
    const double pmax = profile.cwiseAbs().maxCoeff();
    out.wall_warning =
        pmax > 0 && (std::abs(profile(0)) > 1e-10 * pmax || std::abs(profile(m - 1)) > 1e-10 * pmax);

    // Dirichlet diffusion operator restricted to interior nodes.
    const Mat full = k.ops.Dstar * k.ops.D;
    const Mat interior = full.block(1, 1, m - 2, m - 2);
    Eigen::EigenSolver<Mat> es(interior);
    struct Pair {
        double rho;
        Vec v;
    };
    std::vector<Pair> pairs;
    for (Index j = 0; j < m - 2; ++j) {
        const auto ev = es.eigenvalues()(j);
        if (std::abs(ev.imag()) > 1e-8 * std::abs(ev)) continue;
        if (ev.real() >= 0) continue;
        Vec v = Vec::Zero(m);
        v.segment(1, m - 2) = es.eigenvectors().col(j).real();
        pairs.push_back({-ev.real(), std::move(v)});
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.rho < b.rho; });
    if (static_cast<int>(pairs.size()) < n_modes)
        throw SolverError("ek_decompose: spectrum extraction came up short");

    // Orthonormalize in the r-weighted inner product (modified Gram-Schmidt).
    out.modes.reserve(n_modes);
    for (int i = 0; i < n_modes; ++i) {
        Vec v = pairs[i].v;
        for (const auto& mode : out.modes)
            v -= weighted_inner(v, mode.profile, k.grid) * mode.profile;
        const double nrm = std::sqrt(std::max(0.0, weighted_inner(v, v, k.grid)));
        if (nrm <= 0) throw SolverError("ek_decompose: degenerate eigenvector");
        v /= nrm;
        // Fix the sign gauge: positive slope at the inner wall.
        if (v(1) < 0) v = -v;
        EkMode mode;
        mode.rho = pairs[i].rho;
        mode.profile = std::move(v);
        mode.alpha = weighted_inner(profile, mode.profile, k.grid);
        out.modes.push_back(std::move(mode));
    }

    const double pnorm = std::sqrt(std::max(0.0, weighted_inner(profile, profile, k.grid)));
    Vec recon = Vec::Zero(m);
    for (const auto& mode : out.modes) recon += mode.alpha * mode.profile;
    out.reconstruction_residual =
        pnorm > 0 ? std::sqrt(std::max(0.0, weighted_inner(profile - recon, profile - recon, k.grid))) / pnorm
                  : 0.0;
    const double alpha_tol = 1e-8 * std::max(pnorm, 1e-300);
    for (int i = 0; i < n_modes; ++i) {
        if (std::abs(out.modes[i].alpha) > alpha_tol) {
            out.k0 = i + 1;
            out.leading_sign = out.modes[i].alpha > 0 ? 1 : -1;
            break;
        }
    }
    out.in_Htilde = out.k0 < 0;
    return out;
}

}  // namespace taylor
