#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cslam/eval/sweep.hpp"
#include "cslam/sim/mission.hpp"

namespace cslam::eval {

/// Shortest "%.9g" rendering; the one number format used by every writer.
std::string format_number(double v);

/// kind,robot,stamp,x,y,theta with kind one of estimate, odometry, reference.
std::string trajectories_csv(const sim::MissionResult& result);
std::string loops_csv(const sim::MissionResult& result);
std::string optimizations_csv(const sim::MissionResult& result);
/// t,capacity_mb,demand_mb,delivered_mb
std::string comm_series_csv(const CommSummary& summary);

nlohmann::json ate_json(const AteResult& ate);
nlohmann::json comm_summary_json(const CommSummary& summary);
nlohmann::json run_summary_json(const sim::ScenarioConfig& config, const sim::MissionResult& result);

struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<ChartSeries> series;
};

/// Fixed-layout SVG line chart. Identical input gives identical bytes.
std::string svg_line_chart(const Chart& chart);

/// Loop counts per class against tau_sim, one line per class.
Chart sweep_chart(const std::vector<SweepRow>& rows);
/// Cumulative capacity, demand and delivered megabytes over time.
Chart comm_chart(const CommSummary& summary);

/// Parses trajectories_csv output back into estimate, odometry and
/// reference sets. Throws std::invalid_argument on malformed input.
struct TrajectoryTables {
  TrajectorySet estimate;
  TrajectorySet odometry;
  TrajectorySet reference;
};
TrajectoryTables parse_trajectories_csv(const std::string& text);

/// Parses comm_series_csv output.
CommSummary parse_comm_series_csv(const std::string& text);

/// Parses sweep_csv output.
std::vector<SweepRow> parse_sweep_csv(const std::string& text);

/// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// config.json, summary.json, trajectories.csv, loops.csv,
/// optimizations.csv, comm_series.csv, comm_summary.json, graph.g2o and
/// comm.svg under `dir`.
void write_run(const std::filesystem::path& dir, const sim::ScenarioConfig& config, const sim::MissionResult& result);

}  // namespace cslam::eval
