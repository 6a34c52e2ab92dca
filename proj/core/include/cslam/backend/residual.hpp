#pragma once

#include <Eigen/Core>

#include "cslam/pose2.hpp"

namespace cslam::backend {

/// SE(2) logarithm as (rho_x, rho_y, theta).
Eigen::Vector3d se2_log(const Pose2& p);

/// Residual r = log(z^-1 * (xi^-1 * xj)) with Jacobians w.r.t. additive
/// perturbations of (x, y, theta) of each pose.
struct EdgeLinearization {
  Eigen::Vector3d residual;
  Eigen::Matrix3d jac_from;
  Eigen::Matrix3d jac_to;
};

EdgeLinearization linearize_edge(const Pose2& xi, const Pose2& xj, const Pose2& z);

Eigen::Vector3d edge_residual(const Pose2& xi, const Pose2& xj, const Pose2& z);

}  // namespace cslam::backend
