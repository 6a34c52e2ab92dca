#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cslam/comms/transport.hpp"
#include "cslam/sim/mission.hpp"

namespace cslam::eval {

struct SweepRow {
  double tau_sim = 0.0;
  int min_inliers = 0;
  /// Matches per round; nullopt means unlimited.
  std::optional<std::size_t> budget;
  std::size_t candidates = 0;
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  std::size_t failed = 0;
  double ate_mean = 0.0;
  double tau_err = 0.0;
  std::uint64_t front_end_bytes = 0;
  std::uint64_t back_end_bytes = 0;
  double kbytes_per_correct_loop = 0.0;
  bool operator==(const SweepRow&) const = default;
};

/// Swept values; an empty list keeps the scenario's own value.
struct SweepGrid {
  std::vector<double> tau_sim;
  std::vector<int> min_inliers;
  std::vector<std::optional<std::size_t>> budget;
};

/// Parses {"tau_sim": [...], "min_inliers": [...], "budget": [null, 5, ...]}.
/// Throws ConfigError naming the offending key.
SweepGrid parse_grid(const std::string& json_text);

SweepRow make_row(const sim::ScenarioConfig& config, const sim::MissionResult& result);

/// One run per grid point (tau_sim outermost, then min_inliers, then
/// budget), all over the same prepared scenario. Rows come back in grid
/// order and do not depend on `threads`. Passing `cache` shares
/// registrations with other sweeps of the same scenario.
std::vector<SweepRow> sweep(const sim::Scenario& scenario, const SweepGrid& grid, unsigned threads = 1,
                            sim::RegistrationCache* cache = nullptr);

std::string sweep_csv(const std::vector<SweepRow>& rows);

struct SeriesSample {
  double t = 0.0;
  double capacity_mb = 0.0;
  double demand_mb = 0.0;
  double delivered_mb = 0.0;
};

struct CommSummary {
  std::vector<SeriesSample> series;
  std::uint64_t front_end_bytes = 0;
  std::uint64_t back_end_bytes = 0;
  std::uint64_t capacity_bytes = 0;
  std::size_t correct_loops = 0;
  double kbytes_per_correct_loop = 0.0;
};

/// Cumulative capacity, demand and delivered megabytes (1 MB = 1e6 bytes)
/// summed over pairs, plus the front/back split.
CommSummary comm_summary(const comms::CommReport& report, const sim::LoopCounts& counts);

}  // namespace cslam::eval
