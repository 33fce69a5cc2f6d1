#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace taylor {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Eigen::Index;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Input violates a documented precondition.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A solver could not meet its contract (singular operator, missing
/// eigenvalue, tolerance failure, ...).
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File input/output failure.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double rel_diff(double x, double y) {
    const double scale = std::max(std::abs(x), std::abs(y));
    return scale > 0 ? std::abs(x - y) / scale : 0.0;
}

}  // namespace taylor
