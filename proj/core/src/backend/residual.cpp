#include "cslam/backend/residual.hpp"

#include <cmath>

namespace cslam::backend {
namespace {

// Translational part of the SE(2) log is W(theta) * t with
// W = [[a, theta/2], [-theta/2, a]], a = (theta/2) cot(theta/2).
double half_cot(double theta) {
  if (std::abs(theta) < 1e-3) {
    const double t2 = theta * theta;
    return 1.0 - t2 / 12.0 - t2 * t2 / 720.0;
  }
  const double h = 0.5 * theta;
  return h * std::cos(h) / std::sin(h);
}

double half_cot_derivative(double theta) {
  if (std::abs(theta) < 1e-3) return -theta / 6.0 - theta * theta * theta / 180.0;
  const double h = 0.5 * theta;
  const double s = std::sin(h);
  return 0.5 * std::cos(h) / s - 0.25 * theta / (s * s);
}

}  // namespace

Eigen::Vector3d se2_log(const Pose2& p) {
  const double a = half_cot(p.theta);
  const double h = 0.5 * p.theta;
  return {a * p.x + h * p.y, -h * p.x + a * p.y, p.theta};
}

Eigen::Vector3d edge_residual(const Pose2& xi, const Pose2& xj, const Pose2& z) {
  return se2_log(z.inverse() * (xi.inverse() * xj));
}

EdgeLinearization linearize_edge(const Pose2& xi, const Pose2& xj, const Pose2& z) {
  const double ci = std::cos(xi.theta), si = std::sin(xi.theta);
  const double cz = std::cos(z.theta), sz = std::sin(z.theta);
  Eigen::Matrix2d ri_t;
  ri_t << ci, si, -si, ci;
  Eigen::Matrix2d dri_t;  // d(Ri^T)/d(theta_i)
  dri_t << -si, ci, -ci, -si;
  Eigen::Matrix2d rz_t;
  rz_t << cz, sz, -sz, cz;

  const Eigen::Vector2d dt(xj.x - xi.x, xj.y - xi.y);
  const Eigen::Vector2d et = rz_t * (ri_t * dt - Eigen::Vector2d(z.x, z.y));
  const double eth = normalize_angle(xj.theta - xi.theta - z.theta);

  const double a = half_cot(eth);
  const double da = half_cot_derivative(eth);
  Eigen::Matrix2d w;
  w << a, 0.5 * eth, -0.5 * eth, a;
  Eigen::Matrix2d dw;
  dw << da, 0.5, -0.5, da;

  EdgeLinearization lin;
  lin.residual << w * et, eth;

  // d et / d(xi), d et / d(xj); d eth / dthetai = -1, d eth / dthetaj = 1.
  const Eigen::Matrix2d det_dti = -rz_t * ri_t;
  const Eigen::Vector2d det_dthi = rz_t * dri_t * dt;
  const Eigen::Matrix2d det_dtj = rz_t * ri_t;
  const Eigen::Vector2d dw_et = dw * et;

  lin.jac_from.setZero();
  lin.jac_from.block<2, 2>(0, 0) = w * det_dti;
  lin.jac_from.block<2, 1>(0, 2) = w * det_dthi - dw_et;
  lin.jac_from(2, 2) = -1.0;

  lin.jac_to.setZero();
  lin.jac_to.block<2, 2>(0, 0) = w * det_dtj;
  lin.jac_to.block<2, 1>(0, 2) = dw_et;
  lin.jac_to(2, 2) = 1.0;
  return lin;
}

}  // namespace cslam::backend
