#include "cslam/frontend/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cslam::frontend {

ScanDescriptor::ScanDescriptor(Eigen::MatrixXd cells, KeyframeRef ref)
    : cells_(std::move(cells)), ref_(ref), norm_(cells_.norm()) {
  sparse_.resize(static_cast<std::size_t>(cells_.rows()));
  for (Eigen::Index r = 0; r < cells_.rows(); ++r) {
    for (Eigen::Index s = 0; s < cells_.cols(); ++s) {
      if (cells_(r, s) != 0.0) sparse_[static_cast<std::size_t>(r)].push_back({static_cast<int>(s), cells_(r, s)});
    }
  }
}

ScanDescriptor compute_descriptor(const Scan& scan, int rings, int sectors, double r_max) {
  if (rings < 1 || sectors < 1 || !(r_max > 0)) {
    throw std::invalid_argument("compute_descriptor: need rings, sectors >= 1 and r_max > 0");
  }
  Eigen::MatrixXd cells = Eigen::MatrixXd::Zero(rings, sectors);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (const auto& p : scan.points) {
    const double r = p.norm();
    if (r >= r_max) continue;
    const double phi = std::atan2(p.y(), p.x());
    const int ring = std::min(rings - 1, static_cast<int>(std::floor(r / r_max * rings)));
    const int sector =
        std::clamp(static_cast<int>(std::floor((phi + std::numbers::pi) / kTwoPi * sectors)), 0, sectors - 1);
    cells(ring, sector) += 1.0;
  }
  const double peak = cells.maxCoeff();
  if (peak > 0) cells /= peak;
  return ScanDescriptor(std::move(cells), {scan.robot, scan.keyframe});
}

ShiftMatch best_shift(const ScanDescriptor& a, const ScanDescriptor& b) {
  if (a.rings() != b.rings() || a.sectors() != b.sectors()) {
    throw std::invalid_argument("similarity: descriptor shapes differ");
  }
  if (a.is_zero() || b.is_zero()) return {0.0, 0};
  const int ns = a.sectors();
  std::vector<double> dots(static_cast<std::size_t>(ns), 0.0);
  for (int r = 0; r < a.rings(); ++r) {
    for (const auto& ea : a.ring(r)) {
      for (const auto& eb : b.ring(r)) {
        const int k = ((eb.sector - ea.sector) % ns + ns) % ns;
        dots[static_cast<std::size_t>(k)] += ea.value * eb.value;
      }
    }
  }
  ShiftMatch best{-1.0, 0};
  for (int k = 0; k < ns; ++k) {
    if (dots[static_cast<std::size_t>(k)] > best.similarity) best = {dots[static_cast<std::size_t>(k)], k};
  }
  best.similarity = std::clamp(best.similarity / (a.norm() * b.norm()), 0.0, 1.0);
  return best;
}

double similarity(const ScanDescriptor& a, const ScanDescriptor& b) {
  return best_shift(a, b).similarity;
}

}  // namespace cslam::frontend
