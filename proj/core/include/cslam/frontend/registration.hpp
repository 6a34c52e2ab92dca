#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "cslam/pose2.hpp"
#include "cslam/rng.hpp"
#include "cslam/world.hpp"

namespace cslam::frontend {

struct RegistrationConfig {
  int min_inliers = 80;
  double inlier_radius = 0.5;
  int ransac_iterations = 40;
  int icp_max_iterations = 50;
  double icp_tolerance = 1e-6;
  double icp_max_correspondence = 1.5;
  /// Descriptor shape used for the rotation seed.
  int rings = 20;
  int sectors = 60;
  double r_max = 50.0;
};

struct RegistrationResult {
  bool success = false;
  /// Pose of the b sensor frame expressed in the a sensor frame.
  Pose2 relative_pose;
  int inliers = 0;
  double rmse = 0.0;
  /// Number of points in scan b, the denominator of the inlier fraction.
  int b_points = 0;
};

/// Uniform-grid index over 2D points for fixed-radius nearest neighbour queries.
class PointGrid {
 public:
  PointGrid(std::span<const Eigen::Vector2d> points, double cell);

  /// Index of the nearest point within `radius` (radius <= cell), or -1.
  int nearest(const Eigen::Vector2d& q, double radius) const;

 private:
  std::span<const Eigen::Vector2d> points_;
  double cell_;
  double x0_ = 0, y0_ = 0;
  long long nx_ = 0, ny_ = 0;
  // Compressed cell lists: indices of cell c are order_[start_[c] .. start_[c + 1]).
  std::vector<int> start_;
  std::vector<int> order_;
};

/// Exact rigid fit from two correspondences: returns T with a_i ~ T * b_i.
Pose2 fit_two_points(const Eigen::Vector2d& a1, const Eigen::Vector2d& a2, const Eigen::Vector2d& b1,
                     const Eigen::Vector2d& b2);

/// Points of b that land within `radius` of some point of a under `transform`.
int count_inliers(std::span<const Eigen::Vector2d> a, std::span<const Eigen::Vector2d> b,
                  const Pose2& transform, double radius);

/// Estimates the rigid transform mapping scan_b's points onto scan_a's.
/// Deterministic for a given rng state.
RegistrationResult register_scans(const Scan& scan_a, const Scan& scan_b,
                                  const RegistrationConfig& cfg, Rng& rng);

}  // namespace cslam::frontend
