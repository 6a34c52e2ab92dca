#pragma once

#include <map>
#include <set>

#include "cslam/backend/optimizer.hpp"

namespace cslam::backend {

/// Robot with the largest graph; ties go to the lowest id. Robots missing
/// from `graph_sizes` count as empty.
RobotId elect(const std::set<RobotId>& connected, const std::map<RobotId, std::size_t>& graph_sizes);

/// Transform taking the robot's local odometry frame to the optimized frame,
/// computed at the latest keyframe present in both. Identity when there is
/// no such keyframe.
Pose2 apply_correction(const std::map<int, Pose2>& local_keyframes, const OptimizationResult& result,
                       RobotId self);

}  // namespace cslam::backend
