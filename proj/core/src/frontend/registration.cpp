#include "cslam/frontend/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "cslam/frontend/descriptor.hpp"

namespace cslam::frontend {

PointGrid::PointGrid(std::span<const Eigen::Vector2d> points, double cell)
    : points_(points), cell_(cell) {
  if (!(cell > 0)) throw std::invalid_argument("PointGrid: cell size must be > 0");
  if (points.empty()) return;
  double x1 = points[0].x(), y1 = points[0].y();
  x0_ = x1;
  y0_ = y1;
  for (const auto& p : points) {
    x0_ = std::min(x0_, p.x());
    y0_ = std::min(y0_, p.y());
    x1 = std::max(x1, p.x());
    y1 = std::max(y1, p.y());
  }
  nx_ = static_cast<long long>(std::floor((x1 - x0_) / cell_)) + 1;
  ny_ = static_cast<long long>(std::floor((y1 - y0_) / cell_)) + 1;
  if (nx_ * ny_ > 4 * static_cast<long long>(points.size()) + 1024) {
    // Sparse spread: fall back to coarser cells, still exact since queries scan neighbours.
    const double scale = std::sqrt(static_cast<double>(nx_ * ny_) / (4.0 * points.size() + 1024.0));
    cell_ *= std::ceil(scale);
    nx_ = static_cast<long long>(std::floor((x1 - x0_) / cell_)) + 1;
    ny_ = static_cast<long long>(std::floor((y1 - y0_) / cell_)) + 1;
  }
  std::vector<long long> cell_of(points.size());
  start_.assign(static_cast<std::size_t>(nx_ * ny_ + 1), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto ix = static_cast<long long>(std::floor((points[i].x() - x0_) / cell_));
    const auto iy = static_cast<long long>(std::floor((points[i].y() - y0_) / cell_));
    cell_of[i] = std::min(ix, nx_ - 1) * ny_ + std::min(iy, ny_ - 1);
    ++start_[static_cast<std::size_t>(cell_of[i] + 1)];
  }
  for (std::size_t c = 1; c < start_.size(); ++c) start_[c] += start_[c - 1];
  order_.resize(points.size());
  std::vector<int> fill(start_.begin(), start_.end() - 1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    order_[static_cast<std::size_t>(fill[static_cast<std::size_t>(cell_of[i])]++)] = static_cast<int>(i);
  }
}

int PointGrid::nearest(const Eigen::Vector2d& q, double radius) const {
  if (order_.empty()) return -1;
  const auto ix = static_cast<long long>(std::floor((q.x() - x0_) / cell_));
  const auto iy = static_cast<long long>(std::floor((q.y() - y0_) / cell_));
  if (ix < -1 || iy < -1 || ix > nx_ || iy > ny_) return -1;
  int best = -1;
  double best_d2 = radius * radius;
  for (long long cx = std::max(ix - 1, 0LL); cx <= std::min(ix + 1, nx_ - 1); ++cx) {
    for (long long cy = std::max(iy - 1, 0LL); cy <= std::min(iy + 1, ny_ - 1); ++cy) {
      const auto c = static_cast<std::size_t>(cx * ny_ + cy);
      for (int k = start_[c]; k < start_[c + 1]; ++k) {
        const int idx = order_[static_cast<std::size_t>(k)];
        const double d2 = (points_[static_cast<std::size_t>(idx)] - q).squaredNorm();
        if (d2 <= best_d2) {
          if (d2 < best_d2 || best < 0 || idx < best) best = idx;
          best_d2 = d2;
        }
      }
    }
  }
  return best;
}

Pose2 fit_two_points(const Eigen::Vector2d& a1, const Eigen::Vector2d& a2, const Eigen::Vector2d& b1,
                     const Eigen::Vector2d& b2) {
  const Eigen::Vector2d da = a2 - a1;
  const Eigen::Vector2d db = b2 - b1;
  const double theta = std::atan2(da.y(), da.x()) - std::atan2(db.y(), db.x());
  const Pose2 rot(0, 0, theta);
  const Eigen::Vector2d ca = 0.5 * (a1 + a2);
  const Eigen::Vector2d cb = rot.transform(0.5 * (b1 + b2));
  return {ca.x() - cb.x(), ca.y() - cb.y(), theta};
}

namespace {

/// Least-squares rigid fit a_i ~ T * b_i.
Pose2 procrustes(const std::vector<Eigen::Vector2d>& a, const std::vector<Eigen::Vector2d>& b) {
  Eigen::Vector2d ca = Eigen::Vector2d::Zero(), cb = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca += a[i];
    cb += b[i];
  }
  ca /= static_cast<double>(a.size());
  cb /= static_cast<double>(b.size());
  double s_cos = 0, s_sin = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Eigen::Vector2d pa = a[i] - ca, pb = b[i] - cb;
    s_cos += pa.dot(pb);
    s_sin += pb.x() * pa.y() - pb.y() * pa.x();
  }
  const double theta = std::atan2(s_sin, s_cos);
  const Pose2 rot(0, 0, theta);
  const Eigen::Vector2d t = ca - rot.transform(cb);
  return {t.x(), t.y(), theta};
}

int count_with_grid(const PointGrid& grid, std::span<const Eigen::Vector2d> b, const Pose2& T,
                    double radius, double* sq_sum = nullptr, std::span<const Eigen::Vector2d> a = {}) {
  int n = 0;
  for (const auto& p : b) {
    const Eigen::Vector2d q = T.transform(p);
    const int j = grid.nearest(q, radius);
    if (j < 0) continue;
    ++n;
    if (sq_sum) *sq_sum += (a[static_cast<std::size_t>(j)] - q).squaredNorm();
  }
  return n;
}

int brute_nearest(std::span<const Eigen::Vector2d> a, const Eigen::Vector2d& q) {
  int best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d2 = (a[i] - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

int count_inliers(std::span<const Eigen::Vector2d> a, std::span<const Eigen::Vector2d> b,
                  const Pose2& transform, double radius) {
  if (a.empty() || b.empty()) return 0;
  const PointGrid grid(a, radius);
  return count_with_grid(grid, b, transform, radius);
}

RegistrationResult register_scans(const Scan& scan_a, const Scan& scan_b,
                                  const RegistrationConfig& cfg, Rng& rng) {
  if (cfg.min_inliers < 0 || !(cfg.inlier_radius > 0)) {
    throw std::invalid_argument("register_scans: need min_inliers >= 0 and inlier_radius > 0");
  }
  RegistrationResult result;
  result.b_points = static_cast<int>(scan_b.points.size());
  const auto& a = scan_a.points;
  const auto& b = scan_b.points;
  if (a.size() < 2 || b.size() < 2) return result;

  // Rotation seed from the best descriptor column shift: column j of a lines
  // up with column j + k of b, so b is rotated by +k sectors relative to a.
  const auto da = compute_descriptor(scan_a, cfg.rings, cfg.sectors, cfg.r_max);
  const auto db = compute_descriptor(scan_b, cfg.rings, cfg.sectors, cfg.r_max);
  const ShiftMatch shift = best_shift(da, db);
  const double sector_width = 2.0 * std::numbers::pi / cfg.sectors;
  Pose2 current(0, 0, -shift.shift * sector_width);

  const double cell = std::max(cfg.inlier_radius, cfg.icp_max_correspondence);
  const PointGrid grid(a, cell);

  int best_inliers = count_with_grid(grid, b, current, cfg.inlier_radius);
  // Coarse seeds: every sector rotation about the aligned centroids.
  Eigen::Vector2d mean_a = Eigen::Vector2d::Zero(), mean_b = Eigen::Vector2d::Zero();
  for (const auto& p : a) mean_a += p;
  for (const auto& p : b) mean_b += p;
  mean_a /= static_cast<double>(a.size());
  mean_b /= static_cast<double>(b.size());
  for (int k = 0; k < cfg.sectors; ++k) {
    const Pose2 rot(0, 0, -k * sector_width);
    const Eigen::Vector2d t = mean_a - rot.transform(mean_b);
    const Pose2 seed(t.x(), t.y(), rot.theta);
    const int n = count_with_grid(grid, b, seed, cfg.inlier_radius);
    if (n > best_inliers) {
      best_inliers = n;
      current = seed;
    }
  }
  for (int it = 0; it < cfg.ransac_iterations; ++it) {
    const auto i1 = static_cast<std::size_t>(rng.index(b.size()));
    auto i2 = static_cast<std::size_t>(rng.index(b.size() - 1));
    if (i2 >= i1) ++i2;
    if ((b[i1] - b[i2]).squaredNorm() < 1e-12) continue;
    const int j1 = brute_nearest(a, current.transform(b[i1]));
    const int j2 = brute_nearest(a, current.transform(b[i2]));
    if (j1 == j2) continue;
    const Pose2 hyp = fit_two_points(a[static_cast<std::size_t>(j1)], a[static_cast<std::size_t>(j2)], b[i1], b[i2]);
    const int n = count_with_grid(grid, b, hyp, cfg.inlier_radius);
    if (n > best_inliers) {
      best_inliers = n;
      current = hyp;
    }
  }

  // Point-to-point ICP from the best hypothesis.
  double prev_err = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Vector2d> ca, cb;
  ca.reserve(b.size());
  cb.reserve(b.size());
  for (int it = 0; it < cfg.icp_max_iterations; ++it) {
    ca.clear();
    cb.clear();
    for (const auto& p : b) {
      const int j = grid.nearest(current.transform(p), cfg.icp_max_correspondence);
      if (j < 0) continue;
      ca.push_back(a[static_cast<std::size_t>(j)]);
      cb.push_back(p);
    }
    if (ca.size() < 2) break;
    const Pose2 next = procrustes(ca, cb);
    double err = 0;
    for (std::size_t i = 0; i < ca.size(); ++i) err += (ca[i] - next.transform(cb[i])).squaredNorm();
    err /= static_cast<double>(ca.size());
    current = next;
    if (std::abs(prev_err - err) < cfg.icp_tolerance) break;
    prev_err = err;
  }

  double sq = 0;
  result.inliers = count_with_grid(grid, b, current, cfg.inlier_radius, &sq, a);
  result.rmse = result.inliers > 0 ? std::sqrt(sq / result.inliers) : 0.0;
  result.relative_pose = current;
  result.success = result.inliers >= cfg.min_inliers;
  return result;
}

}  // namespace cslam::frontend
