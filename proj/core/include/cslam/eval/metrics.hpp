#pragma once

#include <map>
#include <vector>

#include "cslam/frontend/registration.hpp"
#include "cslam/world.hpp"

namespace cslam::eval {

/// Largest stamp difference accepted when pairing estimate and truth samples.
inline constexpr double kMaxAssociationGap = 0.5;

struct PosePair {
  Pose2 estimate;
  Pose2 truth;
};

/// Pairs each estimate sample with the truth sample of closest stamp,
/// skipping samples without a truth stamp within `max_gap`.
std::vector<PosePair> associate(const std::vector<TimedPose>& estimate, const std::vector<TimedPose>& truth,
                                double max_gap = kMaxAssociationGap);

/// Rigid transform T minimizing sum |T(estimate_i) - truth_i|^2 over positions.
/// Throws std::invalid_argument for fewer than 2 pairs.
Pose2 umeyama_align(const std::vector<PosePair>& pairs);
Pose2 umeyama_align(const std::vector<TimedPose>& estimate, const std::vector<TimedPose>& truth);

struct ErrorStats {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
};

struct AteResult {
  double mean = 0.0;
  double std = 0.0;
  std::map<RobotId, ErrorStats> per_robot;
  std::size_t n_samples = 0;
};

using TrajectorySet = std::map<RobotId, std::vector<TimedPose>>;

/// Translation error statistics over all paired samples. With `align`, one
/// rigid transform fitted jointly over every robot is applied first.
AteResult ate(const TrajectorySet& estimate, const TrajectorySet& truth, bool align);

/// Like ate(..., true) but with a separate alignment per robot; the team
/// figures pool the per-robot errors.
AteResult ate_per_robot_aligned(const TrajectorySet& estimate, const TrajectorySet& truth);

enum class LoopClass { Correct, Incorrect, Failed };
const char* to_string(LoopClass c);

/// Failed when registration failed; otherwise Correct iff the measured
/// translation is within tau_err of the ground-truth relative translation.
LoopClass classify_loop(bool registered, const Pose2& measurement, const Pose2& gt_relative, double tau_err);
LoopClass classify_loop(const frontend::RegistrationResult& result, const Pose2& gt_relative, double tau_err);

}  // namespace cslam::eval
