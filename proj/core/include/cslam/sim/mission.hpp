#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "cslam/backend/pose_graph.hpp"
#include "cslam/comms/link.hpp"
#include "cslam/comms/transport.hpp"
#include "cslam/eval/metrics.hpp"
#include "cslam/frontend/candidates.hpp"
#include "cslam/sim/scenario.hpp"

namespace cslam::sim {

/// Everything about a run that does not depend on the protocol: the world,
/// ground truth, and each robot's keyframe scans, descriptors and odometry.
struct Scenario {
  struct RobotData {
    RobotProfile profile;
    std::vector<std::size_t> keyframe_samples;
    std::vector<double> stamps;
    std::vector<Pose2> truth;
    /// odometry[k] measures keyframe k-1 to k; odometry[0] is the identity.
    std::vector<Pose2> odometry;
    std::vector<Scan> scans;
    std::vector<frontend::ScanDescriptor> descriptors;
  };

  ScenarioConfig config;
  World world;
  std::map<RobotId, Trajectory> truth;
  std::map<RobotId, RobotData> robots;
  std::optional<comms::Trace> trace;
  double duration = 0.0;
};

Scenario prepare_scenario(const ScenarioConfig& config);

/// Registration results keyed by keyframe pair, shared by runs of one
/// Scenario that differ only in thresholds and budget. Stored results ignore
/// min_inliers; callers re-derive success. Thread-safe.
class RegistrationCache {
 public:
  std::optional<frontend::RegistrationResult> find(const frontend::KeyframeRef& a, const frontend::KeyframeRef& b) const;
  void store(const frontend::KeyframeRef& a, const frontend::KeyframeRef& b, const frontend::RegistrationResult& r);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::pair<frontend::KeyframeRef, frontend::KeyframeRef>, frontend::RegistrationResult> results_;
};

struct LoopRecord {
  frontend::KeyframeRef a;
  frontend::KeyframeRef b;
  double similarity = 0.0;
  double time = 0.0;
  bool success = false;
  int inliers = 0;
  double rmse = 0.0;
  /// Pose of b's keyframe in a's keyframe frame, measured and true.
  Pose2 measurement;
  Pose2 truth;
  eval::LoopClass label = eval::LoopClass::Failed;
};

struct OptimizationRecord {
  double time = 0.0;
  RobotId robot = 0;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t loops = 0;
  std::size_t rejected_loops = 0;
  int iterations = 0;
  int lm_iterations = 0;
  double cost = 0.0;
  bool diverged = false;
};

struct LoopCounts {
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  std::size_t failed = 0;
  std::size_t accepted() const { return correct + incorrect; }
  std::size_t total() const { return correct + incorrect + failed; }
};

struct MissionResult {
  double duration = 0.0;
  std::map<RobotId, std::vector<TimedPose>> estimate;
  std::map<RobotId, std::vector<TimedPose>> odometry;
  std::map<RobotId, std::vector<TimedPose>> reference;
  std::vector<LoopRecord> loops;
  LoopCounts counts;
  std::size_t candidates_detected = 0;
  std::size_t candidates_selected = 0;
  std::vector<OptimizationRecord> optimizations;
  comms::CommReport comm;
  /// Largest graph held by any robot at the end (lowest id on ties).
  backend::PoseGraph graph;
  RobotId graph_owner = 0;
  eval::AteResult ate;
  eval::AteResult odometry_ate;
  double tau_err = 0.0;

  std::uint64_t front_end_bytes() const;
  std::uint64_t back_end_bytes() const;
  double kbytes_per_correct_loop() const;
};

/// Runs the decentralized protocol over `scenario`, with thresholds and
/// budget taken from `config` (which may differ from scenario.config only
/// in its frontend and eval sections). Deterministic.
MissionResult run_mission(const Scenario& scenario, const ScenarioConfig& config, RegistrationCache* cache = nullptr);
MissionResult run_mission(const Scenario& scenario);

}  // namespace cslam::sim
