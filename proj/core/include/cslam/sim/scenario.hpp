#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cslam/backend/optimizer.hpp"
#include "cslam/comms/link.hpp"
#include "cslam/frontend/prioritize.hpp"
#include "cslam/frontend/registration.hpp"
#include "cslam/world.hpp"

namespace cslam::sim {

struct FrontendParams {
  int rings = 20;
  int sectors = 60;
  double r_max = 50.0;
  double tau_sim = 0.7;
  int min_inliers = 80;
  double inlier_radius = 0.5;
  int ransac_iterations = 40;
  int icp_max_iterations = 50;
  double icp_tolerance = 1e-6;
  double icp_max_correspondence = 1.5;
  frontend::Budget budget;

  frontend::RegistrationConfig registration() const;
};

struct BackendParams {
  backend::GncConfig gnc;
  double trigger_period = 10.0;
  /// Loop information is diag(xy, xy, theta) scaled by the inlier fraction.
  double loop_information_xy = 400.0;
  double loop_information_theta = 10000.0;
};

struct LinkParams {
  comms::LinkModelParams model;
  /// When set, links replay this trace instead of the distance model.
  std::optional<std::filesystem::path> trace;
};

struct EvalParams {
  /// Fixed loop classification threshold; the run's team ATE when unset.
  std::optional<double> tau_err;
  /// Score against emulated GPS instead of exact ground truth.
  bool gps = false;
  double gps_sigma = 0.2;
  double gps_rate_hz = 1.0;
};

struct ScenarioConfig {
  std::uint64_t seed = 7;
  /// Mission length in seconds; 0 runs until every trajectory ends.
  double duration = 0.0;
  double tick = 0.1;
  WorldConfig world;
  PlanConfig plan;
  double overlap = 0.8;
  std::vector<RobotProfile> robots = default_robots();
  SensorConfig sensor;
  LinkParams link;
  FrontendParams frontend;
  BackendParams backend;
  EvalParams eval;

  /// Robot 1 wheeled, robots 2 and 3 tracked with stronger vibration.
  static std::vector<RobotProfile> default_robots();
};

/// Parses a scenario; absent keys keep their defaults. Unknown keys and bad
/// values throw ConfigError naming the dotted key. Relative trace paths are
/// resolved against `base_dir`.
ScenarioConfig scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// Reads and parses a file; a missing file throws ConfigError keyed by the path.
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Every field, defaults included.
nlohmann::json scenario_to_json(const ScenarioConfig& config);

/// FNV-1a over the canonical JSON without the seed, plus the trace file
/// contents when a trace is used. 16 lowercase hex digits.
std::string config_hash(const ScenarioConfig& config);

/// `<hash>-s<seed>`.
std::string run_name(const ScenarioConfig& config);

}  // namespace cslam::sim
