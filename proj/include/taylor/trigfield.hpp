#pragma once

#include "taylor/linstab.hpp"

namespace taylor {

/// Scalar field q(r,z) = sum_k [ cos(k a z) C_k(r) + sin(k a z) S_k(r) ].
/// sin_part[0] is kept but always zero.
struct TrigScalar {
    std::vector<Vec> cos_part;
    std::vector<Vec> sin_part;

    int harmonics() const { return static_cast<int>(cos_part.size()) - 1; }
    Index radial_size() const { return cos_part.empty() ? 0 : cos_part[0].size(); }
};

TrigScalar trig_zero(int harmonics, Index m);
TrigScalar trig_mul(const TrigScalar& u, const TrigScalar& v);
TrigScalar trig_dz(const TrigScalar& u, double a);
TrigScalar trig_dr(const TrigScalar& u, const Mat& d);
TrigScalar trig_add(const TrigScalar& u, const TrigScalar& v);
TrigScalar trig_scale(const TrigScalar& u, double c);
/// Pointwise multiplication by a radial profile.
TrigScalar trig_profile_mul(const TrigScalar& u, const Vec& profile);

/// Velocity triple (u_z, u_r, u_theta) over one axial period 2*pi/a.
struct TrigField {
    double a = 0;
    TrigScalar z, r, theta;

    double period() const { return 2.0 * kPi / a; }
    Index radial_size() const { return z.radial_size(); }
};

TrigField field_zero(double a, int harmonics, Index m);
TrigField field_add(const TrigField& u, const TrigField& v);
TrigField field_scale(const TrigField& u, double c);
/// Axial translation z -> z + delta.
TrigField field_zshift(const TrigField& u, double delta);

/// Physical eigenfield of a marginal mode (amplitude gauge max_r h = 1).
TrigField eigenfield(const SystemKernel& k, const StabilityMode& mode, double amplitude = 1.0);
/// The quarter-period partner of the eigenfield.
TrigField eigenfield_partner(const SystemKernel& k, const StabilityMode& mode,
                             double amplitude = 1.0);
/// Physical adjoint eigenfield.
TrigField adjoint_field(const SystemKernel& k, const AdjointMode& adj);
TrigField adjoint_field_partner(const SystemKernel& k, const AdjointMode& adj);

/// Advective interaction N(u, v): the quadratic terms of the momentum
/// equations before Leray projection. Pairing N against a solenoidal field
/// equals pairing the projected counterpart, so no pressure solve is needed.
TrigField advection(const SystemKernel& k, const TrigField& u, const TrigField& v);

/// H inner product over one period with the kernel's radial weight.
double field_inner(const SystemKernel& k, const TrigField& u, const TrigField& v);
double field_norm(const SystemKernel& k, const TrigField& u);

/// Relative defect of the meridional divergence constraint.
double divergence_residual(const SystemKernel& k, const TrigField& u);

/// (G(u,v), w)_H. Emits a warning flag when div(r u) is violated beyond
/// tolerance (the antisymmetry identity depends on it).
double trilinear(const SystemKernel& k, const TrigField& u, const TrigField& v,
                 const TrigField& w, bool* div_warning = nullptr);

/// Trapezoid-in-z oracle for field_inner (test cross-check path).
double field_inner_zquad(const SystemKernel& k, const TrigField& u, const TrigField& v,
                         int nz = 256);

}  // namespace taylor
