#pragma once

#include "taylor/common.hpp"

#include <vector>

namespace taylor {

enum class Scheme { Collocation, FiniteDifference };

/// Quadrature weight function baked into RadialGrid::quad_weights.
enum class QuadWeight { R, One };

/// Radial nodes with quadrature for integrals against the stored weight.
/// Nodes run from the left endpoint to the right endpoint inclusive and are
/// strictly increasing.
struct RadialGrid {
    double eta = 0;  ///< left endpoint (right endpoint is 1)
    int n_interior = 0;
    Scheme scheme = Scheme::Collocation;
    QuadWeight weight = QuadWeight::R;
    Vec nodes;
    Vec quad_weights;  ///< sum_i w_i f_i approximates the weighted integral

    Index size() const { return nodes.size(); }
    double left() const { return nodes(0); }
    double right() const { return nodes(nodes.size() - 1); }
};

/// Grid on [eta, 1] with r-weighted quadrature. Requires 0 < eta < 1, n >= 16.
RadialGrid build_grid(double eta, int n, Scheme scheme = Scheme::Collocation);

/// Gap-scaled grid on [0, 1] with unit quadrature weight (planar problems).
RadialGrid build_unit_grid(int n, Scheme scheme = Scheme::Collocation);

/// Dense differentiation operators on a grid. For cylindrical geometry
/// Dstar = D + 1/r and DDstar = D Dstar annihilates r on interior nodes;
/// for planar geometry Dstar = D.
struct DiffOperators {
    Mat D;
    Mat Dstar;
    Mat DDstar;
    bool cylindrical = true;

    Mat l_a(double a) const {
        Mat l = DDstar;
        l.diagonal().array() -= a * a;
        return l;
    }
    Mat l_a_squared(double a) const {
        const Mat l = l_a(a);
        return l * l;
    }
};

DiffOperators build_operators(const RadialGrid& grid, bool cylindrical = true);

double weighted_inner(const Vec& f, const Vec& g, const RadialGrid& grid);

/// One boundary constraint: value or first derivative pinned to zero at a wall.
struct BoundaryCondition {
    enum class Kind { Value, Derivative };
    Kind kind = Kind::Value;
    bool left_wall = true;
};

using BoundaryConditionSet = std::vector<BoundaryCondition>;

/// Replace rows of `op` by constraint rows. Value constraints occupy the wall
/// rows; derivative constraints the adjacent rows. The matching rhs rows are
/// zeroed. Constraint count must equal the differential order being closed.
void embed_boundary_rows(Mat& op, const BoundaryConditionSet& bcs, const DiffOperators& ops);
void zero_boundary_rhs(Vec& rhs, const BoundaryConditionSet& bcs, Index n);

BoundaryConditionSet dirichlet_bcs();
BoundaryConditionSet clamped_bcs();

/// Dense solve of an operator with embedded boundary rows. Checks a pivot
/// ratio estimate and the interior residual; throws SolverError on
/// near-singularity ("BVP operator singular; check lambda not at eigenvalue")
/// or when the residual contract fails.
Vec solve_linear_bvp(const Mat& op_with_bc, const Vec& rhs, double rcond_min = 1e-13,
                     double residual_tol = 1e-10);

/// Polynomial (barycentric) interpolation matrix from a collocation grid to
/// arbitrary target points. Only meaningful for collocation grids.
Mat interpolation_matrix(const RadialGrid& grid, const Vec& targets);

}  // namespace taylor
