#include "cslam/backend/coordination.hpp"

#include <stdexcept>

namespace cslam::backend {

RobotId elect(const std::set<RobotId>& connected, const std::map<RobotId, std::size_t>& graph_sizes) {
  if (connected.empty()) throw std::invalid_argument("elect: empty connected set");
  RobotId best = *connected.begin();
  std::size_t best_size = 0;
  bool first = true;
  for (RobotId id : connected) {
    const auto it = graph_sizes.find(id);
    const std::size_t size = it == graph_sizes.end() ? 0 : it->second;
    if (first || size > best_size) {
      best = id;
      best_size = size;
      first = false;
    }
  }
  return best;
}

Pose2 apply_correction(const std::map<int, Pose2>& local_keyframes, const OptimizationResult& result,
                       RobotId self) {
  for (auto it = local_keyframes.rbegin(); it != local_keyframes.rend(); ++it) {
    const auto opt = result.poses.find(NodeKey{self, it->first});
    if (opt != result.poses.end()) return opt->second * it->second.inverse();
  }
  return Pose2::identity();
}

}  // namespace cslam::backend
