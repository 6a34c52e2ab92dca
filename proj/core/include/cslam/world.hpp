#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "cslam/pose2.hpp"
#include "cslam/rng.hpp"

namespace cslam {

using RobotId = int;

struct Bounds {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 100.0;
  double max_y = 100.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  double area() const { return width() * height(); }
  Eigen::Vector2d center() const { return {0.5 * (min_x + max_x), 0.5 * (min_y + max_y)}; }
  bool contains(const Eigen::Vector2d& p) const {
    return p.x() >= min_x && p.x() <= max_x && p.y() >= min_y && p.y() <= max_y;
  }
  bool operator==(const Bounds&) const = default;
};

struct Landmark {
  double x = 0.0;
  double y = 0.0;
  double radius = 1.0;
  bool operator==(const Landmark&) const = default;
};

/// One placed copy of the shared motif cluster. `first_landmark` indexes the
/// copy's landmarks inside World::landmarks.
struct MotifStamp {
  int motif_id = 0;
  Pose2 placement;
  std::size_t first_landmark = 0;
  std::size_t landmark_count = 0;
  bool operator==(const MotifStamp&) const = default;
};

struct World {
  Bounds bounds;
  std::vector<Landmark> landmarks;
  std::vector<MotifStamp> motif_stamps;
  bool operator==(const World&) const = default;
};

/// Parameters for the synthetic field. `landmark_count` counts background
/// rocks only; motif landmarks come on top.
struct WorldConfig {
  Bounds bounds;
  int landmark_count = 150;
  double radius_min = 0.3;
  double radius_max = 1.2;
  double min_gap = 0.5;
  int motif_copies = 2;
  int motif_landmarks = 10;
  double motif_inner_radius = 2.5;
  double motif_radius = 7.0;
  double motif_clear_radius = 12.0;
  double min_motif_separation = 17.0;
  int max_attempts = 20000;
};

struct RobotProfile {
  RobotId id = 0;
  double odom_trans_sigma = 0.02;
  double odom_rot_sigma = 0.02;
  double scan_range_sigma = 0.02;
  double beam_dropout_prob = 0.05;
  double vibration_scale = 1.0;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct SensorConfig {
  int n_beams = 360;
  double max_range = 50.0;
};

struct Scan {
  RobotId robot = 0;
  int keyframe = 0;
  double stamp = 0.0;
  std::vector<Eigen::Vector2d> points;
  Pose2 origin_gt;
};

struct TimedPose {
  double stamp = 0.0;
  Pose2 pose;
};

struct Trajectory {
  RobotId robot = 0;
  std::vector<TimedPose> samples;
};

struct PlanConfig {
  double speed = 1.0;
  double dt = 0.1;
  /// Route radius as a fraction of the smaller bounds dimension.
  double route_radius_fraction = 0.25;
  int route_waypoints = 10;
  double route_jitter = 0.2;
  double max_lateral_offset = 0.3;
  double laps = 1.15;
  /// Start phase offset between consecutive robots, as a fraction of a lap.
  double start_phase_step = 0.12;
  double overlap_radius = 10.0;
  int max_attempts = 50;
  double keyframe_translation = 1.0;
  double keyframe_rotation = 0.5235987755982988;  // 30 deg
};

World generate_world(const WorldConfig& config, std::uint64_t seed);

std::vector<Trajectory> plan_trajectories(const World& world, int n_robots, double overlap,
                                          std::uint64_t seed, const PlanConfig& plan = {});

Scan simulate_scan(const World& world, const Pose2& pose, const SensorConfig& sensor,
                   const RobotProfile& profile, Rng& rng);

/// Relative pose prev^-1 * curr with motion-proportional Gaussian noise.
Pose2 odometry_measure(const Pose2& prev_gt, const Pose2& curr_gt, const RobotProfile& profile,
                       Rng& rng);

/// Indices of samples that become keyframes: the first sample, then each
/// sample whose motion since the last keyframe reaches either threshold.
std::vector<std::size_t> keyframe_indices(const Trajectory& trajectory, double translation,
                                          double rotation);

/// Fraction of `a`'s keyframe positions within `radius` of `b`'s path.
double trajectory_overlap(const Trajectory& a, const Trajectory& b, double radius,
                          double kf_translation = 1.0, double kf_rotation = 0.5235987755982988);

/// Ground truth resampled at `rate_hz` with isotropic Gaussian position noise.
std::vector<TimedPose> emulate_gps(const Trajectory& trajectory, double sigma, double rate_hz,
                                   Rng& rng);

void to_json(nlohmann::json& j, const World& w);
void from_json(const nlohmann::json& j, World& w);

}  // namespace cslam
