#include "taylor/trigfield.hpp"

#include <cmath>

namespace taylor {

TrigScalar trig_zero(int harmonics, Index m) {
    TrigScalar s;
    s.cos_part.assign(harmonics + 1, Vec::Zero(m));
    s.sin_part.assign(harmonics + 1, Vec::Zero(m));
    return s;
}

namespace {

void ensure_harmonic(TrigScalar& s, int k, Index m) {
    while (s.harmonics() < k) {
        s.cos_part.push_back(Vec::Zero(m));
        s.sin_part.push_back(Vec::Zero(m));
    }
}

}  // namespace

TrigScalar trig_mul(const TrigScalar& u, const TrigScalar& v) {
    const Index m = u.radial_size();
    TrigScalar out = trig_zero(u.harmonics() + v.harmonics(), m);
    for (int j = 0; j <= u.harmonics(); ++j) {
        for (int k = 0; k <= v.harmonics(); ++k) {
            const int sum = j + k;
            const int dif = std::abs(j - k);
            // cos j cos k = (cos|j-k| + cos(j+k))/2
            Vec cc = u.cos_part[j].cwiseProduct(v.cos_part[k]);
            if (cc.any()) {
                out.cos_part[dif] += 0.5 * cc;
                out.cos_part[sum] += 0.5 * cc;
            }
            // sin j sin k = (cos|j-k| - cos(j+k))/2
            Vec ss = u.sin_part[j].cwiseProduct(v.sin_part[k]);
            if (ss.any()) {
                out.cos_part[dif] += 0.5 * ss;
                out.cos_part[sum] -= 0.5 * ss;
            }
            // sin j cos k = (sin(j+k) + sgn(j-k) sin|j-k|)/2
            Vec sc = u.sin_part[j].cwiseProduct(v.cos_part[k]);
            if (sc.any()) {
                out.sin_part[sum] += 0.5 * sc;
                if (j > k)
                    out.sin_part[dif] += 0.5 * sc;
                else if (j < k)
                    out.sin_part[dif] -= 0.5 * sc;
            }
            // cos j sin k = (sin(j+k) - sgn(j-k) sin|j-k|)/2
            Vec cs = u.cos_part[j].cwiseProduct(v.sin_part[k]);
            if (cs.any()) {
                out.sin_part[sum] += 0.5 * cs;
                if (k > j)
                    out.sin_part[dif] += 0.5 * cs;
                else if (k < j)
                    out.sin_part[dif] -= 0.5 * cs;
            }
        }
    }
    return out;
}

TrigScalar trig_dz(const TrigScalar& u, double a) {
    const Index m = u.radial_size();
    TrigScalar out = trig_zero(u.harmonics(), m);
    for (int k = 1; k <= u.harmonics(); ++k) {
        out.sin_part[k] = -(k * a) * u.cos_part[k];
        out.cos_part[k] = (k * a) * u.sin_part[k];
    }
    return out;
}

TrigScalar trig_dr(const TrigScalar& u, const Mat& d) {
    TrigScalar out = u;
    for (int k = 0; k <= u.harmonics(); ++k) {
        out.cos_part[k] = d * u.cos_part[k];
        out.sin_part[k] = d * u.sin_part[k];
    }
    return out;
}

TrigScalar trig_add(const TrigScalar& u, const TrigScalar& v) {
    const Index m = u.radial_size();
    TrigScalar out = trig_zero(std::max(u.harmonics(), v.harmonics()), m);
    for (int k = 0; k <= out.harmonics(); ++k) {
        if (k <= u.harmonics()) {
            out.cos_part[k] += u.cos_part[k];
            out.sin_part[k] += u.sin_part[k];
        }
        if (k <= v.harmonics()) {
            out.cos_part[k] += v.cos_part[k];
            out.sin_part[k] += v.sin_part[k];
        }
    }
    return out;
}

TrigScalar trig_scale(const TrigScalar& u, double c) {
    TrigScalar out = u;
    for (int k = 0; k <= u.harmonics(); ++k) {
        out.cos_part[k] *= c;
        out.sin_part[k] *= c;
    }
    return out;
}

TrigScalar trig_profile_mul(const TrigScalar& u, const Vec& profile) {
    TrigScalar out = u;
    for (int k = 0; k <= u.harmonics(); ++k) {
        out.cos_part[k] = u.cos_part[k].cwiseProduct(profile);
        out.sin_part[k] = u.sin_part[k].cwiseProduct(profile);
    }
    return out;
}

TrigField field_zero(double a, int harmonics, Index m) {
    TrigField f;
    f.a = a;
    f.z = trig_zero(harmonics, m);
    f.r = trig_zero(harmonics, m);
    f.theta = trig_zero(harmonics, m);
    return f;
}

TrigField field_add(const TrigField& u, const TrigField& v) {
    if (u.a != v.a) throw ValidationError("field_add: mismatched base wavenumbers");
    TrigField out;
    out.a = u.a;
    out.z = trig_add(u.z, v.z);
    out.r = trig_add(u.r, v.r);
    out.theta = trig_add(u.theta, v.theta);
    return out;
}

TrigField field_scale(const TrigField& u, double c) {
    TrigField out = u;
    out.z = trig_scale(u.z, c);
    out.r = trig_scale(u.r, c);
    out.theta = trig_scale(u.theta, c);
    return out;
}

namespace {

TrigScalar scalar_zshift(const TrigScalar& u, double a, double delta) {
    TrigScalar out = u;
    for (int k = 1; k <= u.harmonics(); ++k) {
        const double c = std::cos(k * a * delta);
        const double s = std::sin(k * a * delta);
        out.cos_part[k] = c * u.cos_part[k] + s * u.sin_part[k];
        out.sin_part[k] = -s * u.cos_part[k] + c * u.sin_part[k];
    }
    return out;
}

}  // namespace

TrigField field_zshift(const TrigField& u, double delta) {
    TrigField out = u;
    out.z = scalar_zshift(u.z, u.a, delta);
    out.r = scalar_zshift(u.r, u.a, delta);
    out.theta = scalar_zshift(u.theta, u.a, delta);
    return out;
}

TrigField eigenfield(const SystemKernel& k, const StabilityMode& mode, double amplitude) {
    const Index m = k.grid.size();
    TrigField f = field_zero(mode.a, 1, m);
    const Vec p = k.ops.Dstar * mode.h;
    f.z.sin_part[1] = -(amplitude / mode.a) * p;
    f.r.cos_part[1] = amplitude * mode.h;
    f.theta.cos_part[1] = amplitude * mode.phi;
    return f;
}

TrigField eigenfield_partner(const SystemKernel& k, const StabilityMode& mode,
                             double amplitude) {
    const Index m = k.grid.size();
    TrigField f = field_zero(mode.a, 1, m);
    const Vec p = k.ops.Dstar * mode.h;
    f.z.cos_part[1] = (amplitude / mode.a) * p;
    f.r.sin_part[1] = amplitude * mode.h;
    f.theta.sin_part[1] = amplitude * mode.phi;
    return f;
}

TrigField adjoint_field(const SystemKernel& k, const AdjointMode& adj) {
    const Index m = k.grid.size();
    TrigField f = field_zero(adj.a, 1, m);
    const Vec p = k.ops.Dstar * adj.hstar;
    f.z.sin_part[1] = -adj.a * p;
    f.r.cos_part[1] = (adj.a * adj.a) * adj.hstar;
    f.theta.cos_part[1] = adj.phistar;
    return f;
}

TrigField adjoint_field_partner(const SystemKernel& k, const AdjointMode& adj) {
    const Index m = k.grid.size();
    TrigField f = field_zero(adj.a, 1, m);
    const Vec p = k.ops.Dstar * adj.hstar;
    f.z.cos_part[1] = adj.a * p;
    f.r.sin_part[1] = (adj.a * adj.a) * adj.hstar;
    f.theta.sin_part[1] = adj.phistar;
    return f;
}

TrigField advection(const SystemKernel& k, const TrigField& u, const TrigField& v) {
    if (u.a != v.a) throw ValidationError("advection: mismatched base wavenumbers");
    const Mat& d = k.ops.D;
    auto advect = [&](const TrigScalar& q) {
        return trig_add(trig_mul(u.r, trig_dr(q, d)), trig_mul(u.z, trig_dz(q, u.a)));
    };
    TrigField out;
    out.a = u.a;
    out.z = advect(v.z);
    out.r = advect(v.r);
    out.theta = advect(v.theta);
    if (k.cylindrical) {
        const Vec rinv = k.grid.nodes.cwiseInverse();
        out.r = trig_add(out.r, trig_scale(trig_profile_mul(trig_mul(u.theta, v.theta), rinv), -1.0));
        out.theta = trig_add(out.theta, trig_profile_mul(trig_mul(u.theta, v.r), rinv));
    }
    return out;
}

namespace {

double scalar_inner(const SystemKernel& k, const TrigScalar& u, const TrigScalar& v,
                    double length) {
    const int kmax = std::min(u.harmonics(), v.harmonics());
    double total = 0;
    for (int h = 0; h <= kmax; ++h) {
        const double zfac = (h == 0) ? length : 0.5 * length;
        total += zfac * weighted_inner(u.cos_part[h], v.cos_part[h], k.grid);
        if (h > 0) total += zfac * weighted_inner(u.sin_part[h], v.sin_part[h], k.grid);
    }
    return total;
}

}  // namespace

double field_inner(const SystemKernel& k, const TrigField& u, const TrigField& v) {
    if (u.a != v.a) throw ValidationError("field_inner: mismatched base wavenumbers");
    const double length = u.period();
    return scalar_inner(k, u.z, v.z, length) + scalar_inner(k, u.r, v.r, length) +
           scalar_inner(k, u.theta, v.theta, length);
}

double field_norm(const SystemKernel& k, const TrigField& u) {
    return std::sqrt(std::max(0.0, field_inner(k, u, u)));
}

double divergence_residual(const SystemKernel& k, const TrigField& u) {
    // d(w u_z)/dz + d(w u_r)/dr with w = r (cylindrical) or 1 (planar).
    const Vec w = k.cylindrical ? k.grid.nodes : Vec::Ones(k.grid.size());
    const TrigScalar div = trig_add(trig_dz(trig_profile_mul(u.z, w), u.a),
                                    trig_dr(trig_profile_mul(u.r, w), k.ops.D));
    double num = 0, den = 0;
    for (int h = 0; h <= div.harmonics(); ++h) {
        // Interior nodes only; wall rows carry the boundary data.
        for (Index i = 1; i + 1 < div.radial_size(); ++i) {
            num = std::max(num, std::abs(div.cos_part[h](i)));
            num = std::max(num, std::abs(div.sin_part[h](i)));
        }
        if (h <= u.z.harmonics()) {
            den = std::max(den, u.z.cos_part[h].cwiseAbs().maxCoeff() * u.a * (h + 1));
            den = std::max(den, u.z.sin_part[h].cwiseAbs().maxCoeff() * u.a * (h + 1));
        }
    }
    const double opscale = k.ops.D.cwiseAbs().rowwise().sum().maxCoeff();
    double rmax = 0;
    for (int h = 0; h <= u.r.harmonics(); ++h) {
        rmax = std::max(rmax, u.r.cos_part[h].cwiseAbs().maxCoeff());
        rmax = std::max(rmax, u.r.sin_part[h].cwiseAbs().maxCoeff());
    }
    den = std::max(den, opscale * rmax);
    return den > 0 ? num / den : 0.0;
}

double trilinear(const SystemKernel& k, const TrigField& u, const TrigField& v,
                 const TrigField& w, bool* div_warning) {
    if (div_warning) *div_warning = divergence_residual(k, u) > 1e-6;
    return -field_inner(k, advection(k, u, v), w);
}

double field_inner_zquad(const SystemKernel& k, const TrigField& u, const TrigField& v,
                         int nz) {
    const double length = u.period();
    const double dz = length / nz;
    auto eval = [&](const TrigScalar& s, double zpos) {
        Vec acc = Vec::Zero(s.radial_size());
        for (int h = 0; h <= s.harmonics(); ++h)
            acc += std::cos(h * u.a * zpos) * s.cos_part[h] +
                   std::sin(h * u.a * zpos) * s.sin_part[h];
        return acc;
    };
    double total = 0;
    for (int j = 0; j < nz; ++j) {
        const double zpos = j * dz;
        total += weighted_inner(eval(u.z, zpos), eval(v.z, zpos), k.grid);
        total += weighted_inner(eval(u.r, zpos), eval(v.r, zpos), k.grid);
        total += weighted_inner(eval(u.theta, zpos), eval(v.theta, zpos), k.grid);
    }
    return total * dz;
}

}  // namespace taylor
