#pragma once

#include <vector>

#include <Eigen/Core>

#include "cslam/world.hpp"

namespace cslam::frontend {

struct KeyframeRef {
  RobotId robot = 0;
  int keyframe = 0;
  auto operator<=>(const KeyframeRef&) const = default;
};

/// Polar ring x sector occupancy summary of a planar scan.
class ScanDescriptor {
 public:
  ScanDescriptor() = default;
  ScanDescriptor(Eigen::MatrixXd cells, KeyframeRef ref);

  const Eigen::MatrixXd& cells() const { return cells_; }
  KeyframeRef ref() const { return ref_; }
  int rings() const { return static_cast<int>(cells_.rows()); }
  int sectors() const { return static_cast<int>(cells_.cols()); }
  double norm() const { return norm_; }
  bool is_zero() const { return norm_ == 0.0; }

  struct Entry {
    int sector;
    double value;
  };
  /// Nonzero cells of ring `r`, ordered by sector.
  const std::vector<Entry>& ring(int r) const { return sparse_[static_cast<std::size_t>(r)]; }

 private:
  Eigen::MatrixXd cells_;
  KeyframeRef ref_;
  double norm_ = 0.0;
  std::vector<std::vector<Entry>> sparse_;
};

ScanDescriptor compute_descriptor(const Scan& scan, int rings, int sectors, double r_max);

/// Cosine similarity after the best cyclic sector shift, in [0, 1]. Zero when
/// either descriptor is all-zero. Throws std::invalid_argument on shape mismatch.
double similarity(const ScanDescriptor& a, const ScanDescriptor& b);

/// Similarity together with the shift k that attains it, where column j of
/// `a` lines up with column (j + k) mod Ns of `b`.
struct ShiftMatch {
  double similarity = 0.0;
  int shift = 0;
};
ShiftMatch best_shift(const ScanDescriptor& a, const ScanDescriptor& b);

}  // namespace cslam::frontend
