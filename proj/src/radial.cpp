#include "taylor/radial.hpp"

#include <Eigen/LU>

#include <cmath>

namespace taylor {

namespace {

// Chebyshev-Lobatto nodes in increasing order plus the differentiation
// matrix on [-1, 1]. Node differences are evaluated trigonometrically and
// the diagonal by the negative-sum trick to keep rounding low.
void chebyshev(int degree, Vec& x, Mat& d) {
    const int m = degree + 1;
    x.resize(m);
    for (int j = 0; j < m; ++j) x(j) = -std::cos(kPi * j / degree);
    Vec c = Vec::Ones(m);
    c(0) = c(degree) = 2.0;
    d.resize(m, m);
    const double h = kPi / degree;
    for (int i = 0; i < m; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < m; ++j) {
            if (i == j) continue;
            const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            // x_i - x_j = 2 sin((i+j)h/2) sin((i-j)h/2)
            const double diff =
                2.0 * std::sin(0.5 * (i + j) * h) * std::sin(0.5 * (i - j) * h);
            d(i, j) = (c(i) / c(j)) * sign / diff;
            row_sum += d(i, j);
        }
        d(i, i) = -row_sum;
    }
}

// Clenshaw-Curtis weights on [-1, 1] for Lobatto nodes ordered as above.
Vec clenshaw_curtis(int degree) {
    const int m = degree + 1;
    Vec w(m);
    const double end = (degree % 2 == 0) ? 1.0 / (double(degree) * degree - 1.0)
                                         : 1.0 / (double(degree) * degree);
    w(0) = w(degree) = end;
    for (int i = 1; i < degree; ++i) {
        const double theta = kPi * i / degree;
        double v = 1.0;
        if (degree % 2 == 0) {
            for (int k = 1; k <= degree / 2 - 1; ++k)
                v -= 2.0 * std::cos(2.0 * k * theta) / (4.0 * k * k - 1.0);
            v -= std::cos(degree * theta) / (double(degree) * degree - 1.0);
        } else {
            for (int k = 1; k <= (degree - 1) / 2; ++k)
                v -= 2.0 * std::cos(2.0 * k * theta) / (4.0 * k * k - 1.0);
        }
        w(i) = 2.0 * v / degree;
    }
    return w;
}

RadialGrid make_grid(double a, double b, int n, Scheme scheme, QuadWeight weight) {
    if (n < 16) throw ValidationError("resolution below minimum");
    RadialGrid g;
    g.eta = a;
    g.n_interior = n;
    g.scheme = scheme;
    g.weight = weight;
    const int degree = n + 1;
    const int m = n + 2;
    if (scheme == Scheme::Collocation) {
        Vec x;
        Mat d;
        chebyshev(degree, x, d);
        const double half = 0.5 * (b - a);
        g.nodes = (0.5 * (a + b) + half * x.array()).matrix();
        g.quad_weights = half * clenshaw_curtis(degree);
    } else {
        const double h = (b - a) / (m - 1);
        g.nodes.resize(m);
        g.quad_weights.resize(m);
        for (int i = 0; i < m; ++i) {
            g.nodes(i) = a + i * h;
            g.quad_weights(i) = (i == 0 || i == m - 1) ? 0.5 * h : h;
        }
    }
    if (weight == QuadWeight::R)
        g.quad_weights.array() *= g.nodes.array();
    return g;
}

}  // namespace

RadialGrid build_grid(double eta, int n, Scheme scheme) {
    if (!(eta > 0) || !(eta < 1)) throw ValidationError("grid endpoint eta must lie in (0,1)");
    return make_grid(eta, 1.0, n, scheme, QuadWeight::R);
}

RadialGrid build_unit_grid(int n, Scheme scheme) {
    return make_grid(0.0, 1.0, n, scheme, QuadWeight::One);
}

DiffOperators build_operators(const RadialGrid& grid, bool cylindrical) {
    const Index m = grid.size();
    DiffOperators ops;
    ops.cylindrical = cylindrical;
    if (grid.scheme == Scheme::Collocation) {
        Vec x;
        Mat d;
        chebyshev(grid.n_interior + 1, x, d);
        ops.D = d * (2.0 / (grid.right() - grid.left()));
    } else {
        const double h = grid.nodes(1) - grid.nodes(0);
        ops.D = Mat::Zero(m, m);
        for (Index i = 1; i + 1 < m; ++i) {
            ops.D(i, i - 1) = -0.5 / h;
            ops.D(i, i + 1) = 0.5 / h;
        }
        ops.D(0, 0) = -1.5 / h;
        ops.D(0, 1) = 2.0 / h;
        ops.D(0, 2) = -0.5 / h;
        ops.D(m - 1, m - 1) = 1.5 / h;
        ops.D(m - 1, m - 2) = -2.0 / h;
        ops.D(m - 1, m - 3) = 0.5 / h;
    }
    ops.Dstar = ops.D;
    if (cylindrical)
        ops.Dstar += grid.nodes.cwiseInverse().asDiagonal();
    ops.DDstar = ops.D * ops.Dstar;
    if (cylindrical && grid.scheme == Scheme::Collocation) {
        // Pin the analytic null function: DDstar r = 0 exactly.
        const Vec defect = ops.DDstar * grid.nodes;
        ops.DDstar.diagonal() -= (defect.array() / grid.nodes.array()).matrix();
    }
    return ops;
}

double weighted_inner(const Vec& f, const Vec& g, const RadialGrid& grid) {
    if (f.size() != grid.size() || g.size() != grid.size())
        throw ValidationError("weighted_inner: size mismatch with grid");
    return (f.array() * g.array() * grid.quad_weights.array()).sum();
}

BoundaryConditionSet dirichlet_bcs() {
    return {{BoundaryCondition::Kind::Value, true}, {BoundaryCondition::Kind::Value, false}};
}

BoundaryConditionSet clamped_bcs() {
    return {{BoundaryCondition::Kind::Value, true},
            {BoundaryCondition::Kind::Derivative, true},
            {BoundaryCondition::Kind::Value, false},
            {BoundaryCondition::Kind::Derivative, false}};
}

void embed_boundary_rows(Mat& op, const BoundaryConditionSet& bcs, const DiffOperators& ops) {
    const Index m = op.rows();
    for (const auto& bc : bcs) {
        if (bc.kind == BoundaryCondition::Kind::Value) {
            const Index row = bc.left_wall ? 0 : m - 1;
            op.row(row).setZero();
            op(row, row) = 1.0;
        } else {
            // Derivative constraints take the slot adjacent to their wall.
            const Index row = bc.left_wall ? 1 : m - 2;
            op.row(row) = ops.D.row(bc.left_wall ? 0 : m - 1);
        }
    }
}

void zero_boundary_rhs(Vec& rhs, const BoundaryConditionSet& bcs, Index m) {
    for (const auto& bc : bcs) {
        Index row;
        if (bc.kind == BoundaryCondition::Kind::Value)
            row = bc.left_wall ? 0 : m - 1;
        else
            row = bc.left_wall ? 1 : m - 2;
        rhs(row) = 0.0;
    }
}

Vec solve_linear_bvp(const Mat& op_with_bc, const Vec& rhs, double rcond_min,
                     double residual_tol) {
    if (op_with_bc.rows() != op_with_bc.cols() || op_with_bc.rows() != rhs.size())
        throw ValidationError("solve_linear_bvp: operator must be square and match rhs");
    // Row equilibration: constraint rows and high-order rows differ by many
    // orders of magnitude, which would defeat the pivot-based rank check.
    const Index m = op_with_bc.rows();
    Vec rscale(m);
    for (Index i = 0; i < m; ++i) {
        const double s = op_with_bc.row(i).cwiseAbs().maxCoeff();
        rscale(i) = s > 0 ? 1.0 / s : 1.0;
    }
    const Mat a = rscale.asDiagonal() * op_with_bc;
    const Vec b = rscale.asDiagonal() * rhs;
    Eigen::PartialPivLU<Mat> lu(a);
    const Vec udiag = lu.matrixLU().diagonal().cwiseAbs();
    const double dmax = udiag.maxCoeff();
    if (dmax == 0.0 || udiag.minCoeff() / dmax < rcond_min)
        throw SolverError("BVP operator singular; check lambda not at eigenvalue");
    Vec x = lu.solve(b);
    // One step of iterative refinement in the scaled system.
    x += lu.solve(b - a * x);
    const double res = (a * x - b).norm();
    const double scale = std::max(b.norm(), x.norm());
    if (scale > 0 && res / scale > residual_tol)
        throw SolverError("BVP solve residual beyond tolerance");
    return x;
}

Mat interpolation_matrix(const RadialGrid& grid, const Vec& targets) {
    if (grid.scheme != Scheme::Collocation)
        throw ValidationError("interpolation_matrix requires a collocation grid");
    const Index m = grid.size();
    Vec w(m);
    for (Index j = 0; j < m; ++j) {
        w(j) = (j % 2 == 0) ? 1.0 : -1.0;
        if (j == 0 || j == m - 1) w(j) *= 0.5;
    }
    Mat p = Mat::Zero(targets.size(), m);
    for (Index i = 0; i < targets.size(); ++i) {
        const double t = targets(i);
        Index hit = -1;
        for (Index j = 0; j < m; ++j)
            if (t == grid.nodes(j)) hit = j;
        if (hit >= 0) {
            p(i, hit) = 1.0;
            continue;
        }
        double denom = 0.0;
        for (Index j = 0; j < m; ++j) denom += w(j) / (t - grid.nodes(j));
        for (Index j = 0; j < m; ++j) p(i, j) = (w(j) / (t - grid.nodes(j))) / denom;
    }
    return p;
}

}  // namespace taylor
