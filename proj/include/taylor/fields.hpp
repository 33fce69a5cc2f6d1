#pragma once

#include "taylor/centermanifold.hpp"

#include <optional>
#include <string>
#include <vector>

namespace taylor {

struct SnapshotMeta {
    double eta = 0;
    double mu = 0;
    double lambda = 0;
    double period = 0;
    double phase = 0;
    std::string gauge = "max_h=1";
    std::string note;
};

/// Velocity triple on an (r, z) grid over one axial period. Matrices are
/// nr x nz, column-major, z excludes the periodic endpoint.
struct FieldSnapshot {
    Vec r_nodes;
    Vec z_nodes;
    Mat u_z, u_r, u_theta;
    SnapshotMeta meta;
};

FieldSnapshot sample_field(const SystemKernel& k, const TrigField& f, int nz, SnapshotMeta meta);

/// amplitude * psi1 translated by z0.
FieldSnapshot reconstruct_eigenfield(const SystemKernel& k, const StabilityMode& mode, double z0,
                                     double amplitude, int nz);

/// Leading-order bifurcated flow sqrt(beta1/|R|) psi1(z + z0), optionally with
/// the quadratic correction attached. Rejects R >= 0.
FieldSnapshot secondary_flow(const SystemKernel& k, const StabilityMode& mode,
                             const CMCorrection& corr, double beta1, double R, double phase,
                             int nz, bool include_quadratic = false);

/// Relative defect of the discrete meridional divergence. Spectral z
/// differences; radial differences use the kernel operator when the grids
/// match, second-order differences otherwise.
double snapshot_divergence(const FieldSnapshot& snap, const SystemKernel* kernel = nullptr);

double snapshot_norm(const FieldSnapshot& snap);
double snapshot_flux(const FieldSnapshot& snap);

void write_snapshot(const std::string& path, const FieldSnapshot& snap);
FieldSnapshot read_snapshot(const std::string& path);
void write_snapshot_csv(const std::string& path, const FieldSnapshot& snap);

enum class PatternClass {
    CrossFlowPositive,   // tilted cells riding a positive axial through-flow
    CrossFlowNegative,
    NoCrossFlow,         // the pure counter-rotating cell stack
    KCellStack,          // two or more cells across the gap
    Unresolved
};
const char* to_string(PatternClass p);

enum class DRegularity { Regular, Degenerate, Unresolved };

struct TopologyDiagnostics {
    int vortex_cells_radial = 0;
    int vortex_cells_axial = 0;
    double cross_channel_flux = 0;
    bool in_Htilde = false;
    DRegularity d_regular = DRegularity::Unresolved;
    double hpp_interior = 0, hpp_left = 0, hpp_right = 0;
    double r0 = 0;
    PatternClass pattern = PatternClass::Unresolved;
};

TopologyDiagnostics diagnose_topology(const SystemKernel& k, const FieldSnapshot& snap,
                                      const StabilityMode& mode);

struct EkMode {
    double rho = 0;    ///< decay rate: the profile relaxes as exp(-rho t)
    Vec profile;
    double alpha = 0;
};

struct EkDecomposition {
    std::vector<EkMode> modes;
    int k0 = -1;            ///< 1-based index of the first active mode
    int leading_sign = 0;
    double reconstruction_residual = 0;
    bool wall_warning = false;
    bool in_Htilde = false;
};

/// Expand a mean axial profile in the Dirichlet eigenbasis of the radial
/// diffusion operator; modes are orthonormal in the r-weighted inner product.
EkDecomposition ek_decompose(const SystemKernel& k, const Vec& profile, int n_modes);

}  // namespace taylor
