#pragma once

// Independent reference implementations used to check the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "cslam/pose2.hpp"

namespace oracle {

using EdgeList = std::vector<std::pair<int, int>>;

inline Eigen::MatrixXd laplacian(int n, const EdgeList& edges) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] : edges) {
    l(i, i) += 1;
    l(j, j) += 1;
    l(i, j) -= 1;
    l(j, i) -= 1;
  }
  return l;
}

inline double lambda2(const Eigen::MatrixXd& l) {
  if (l.rows() < 2) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(1);
}

/// Largest lambda_2 over all k-subsets of `candidates` added to `base`.
inline double best_subset_lambda2(int n, const EdgeList& base, const EdgeList& candidates, std::size_t k) {
  double best = -1.0;
  const std::size_t m = candidates.size();
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    EdgeList e = base;
    for (std::size_t q = 0; q < m; ++q) {
      if (mask >> q & 1u) e.push_back(candidates[q]);
    }
    best = std::max(best, lambda2(laplacian(n, e)));
  }
  return best;
}

/// Sum of squared position residuals |R(theta) e_i + t - g_i|^2 with the
/// optimal t for the given theta.
inline double alignment_cost(const std::vector<Eigen::Vector2d>& est, const std::vector<Eigen::Vector2d>& truth,
                             double theta) {
  const Eigen::Matrix2d r = cslam::Pose2(0, 0, theta).rotation();
  Eigen::Vector2d me = Eigen::Vector2d::Zero(), mg = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) {
    me += est[i];
    mg += truth[i];
  }
  me /= static_cast<double>(est.size());
  mg /= static_cast<double>(est.size());
  const Eigen::Vector2d t = mg - r * me;
  double cost = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) cost += (r * est[i] + t - truth[i]).squaredNorm();
  return cost;
}

inline double alignment_cost(const std::vector<Eigen::Vector2d>& est, const std::vector<Eigen::Vector2d>& truth,
                             const cslam::Pose2& transform) {
  double cost = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) cost += (transform.transform(est[i]) - truth[i]).squaredNorm();
  return cost;
}

/// Minimum alignment cost over a rotation grid of the given step.
inline double grid_alignment_cost(const std::vector<Eigen::Vector2d>& est, const std::vector<Eigen::Vector2d>& truth,
                                  double step) {
  double best = std::numeric_limits<double>::infinity();
  for (double th = -std::numbers::pi; th < std::numbers::pi; th += step) {
    best = std::min(best, alignment_cost(est, truth, th));
  }
  return best;
}

/// Central-difference Jacobian of f at p under additive (x, y, theta) steps.
inline Eigen::Matrix3d numeric_jacobian(const std::function<Eigen::Vector3d(const cslam::Pose2&)>& f,
                                        const cslam::Pose2& p, double h = 1e-6) {
  Eigen::Matrix3d j;
  for (int c = 0; c < 3; ++c) {
    double plus[3] = {p.x, p.y, p.theta};
    double minus[3] = {p.x, p.y, p.theta};
    plus[c] += h;
    minus[c] -= h;
    const Eigen::Vector3d fp = f(cslam::Pose2(plus[0], plus[1], plus[2]));
    const Eigen::Vector3d fm = f(cslam::Pose2(minus[0], minus[1], minus[2]));
    Eigen::Vector3d d = fp - fm;
    d(2) = cslam::normalize_angle(d(2));
    j.col(c) = d / (2 * h);
  }
  return j;
}

}  // namespace oracle
