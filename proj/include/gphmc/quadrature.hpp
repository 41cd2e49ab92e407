#pragma once

#include <Eigen/Core>

#include "gphmc/target.hpp"

namespace gphmc {

// Dense-determinant quadrature reference for two inferred hyperparameters:
// the unnormalized log density on a regular grid, trapezoid-normalized, with
// marginal CDFs tabulated on each axis.
struct QuadratureReference {
    Eigen::VectorXd axis0, axis1;       // grid coordinates
    Eigen::MatrixXd density;            // normalized, axis0 along rows
    Eigen::MatrixXd marginal_cdf;       // 2 x points, per-axis CDF at grid points
    Eigen::Vector2d means;              // posterior means of (theta_0, theta_1)
};

struct QuadratureGridSpec {
    double lo = -3.0;
    double hi = 3.0;
    int points = 100;
};

QuadratureReference quadrature_reference(const TargetModel& target,
                                         const QuadratureGridSpec& spec = {});

}  // namespace gphmc
