#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "cslam/world.hpp"

namespace cslam::comms {

struct LinkState {
  bool connected = false;
  double latency_ms = 0.0;
  double throughput_mbps = 0.0;
  bool operator==(const LinkState&) const = default;
};

struct LinkModelParams {
  double range_m = 40.0;
  double latency_near_ms = 100.0;
  double latency_far_ms = 400.0;
  double throughput_near_mbps = 20.0;
  double throughput_far_mbps = 5.0;
};

/// Connected iff distance < range; latency and throughput interpolate
/// linearly between the near and far values.
LinkState link_state_model(double distance, const LinkModelParams& model = {});

struct TraceRecord {
  long long t_sec = 0;
  RobotId src = 0;
  RobotId dst = 0;
  double latency_ms = 0.0;
  double throughput_mbps = 0.0;
  bool connected = false;
};

/// Pairwise link measurements at 1 s resolution. Each record covers
/// [t_sec, t_sec + 1); a pair-second with no record is disconnected.
class Trace {
 public:
  explicit Trace(std::vector<TraceRecord> records);

  /// Parses `t_sec,src,dst,latency_ms,throughput_mbps,connected` CSV.
  static Trace parse(std::istream& is);
  static Trace load(const std::filesystem::path& path);

  /// Throws TraceExhausted when t is outside [start(), end()).
  LinkState at(RobotId src, RobotId dst, double t) const;

  long long start() const { return start_; }
  long long end() const { return end_; }
  std::set<RobotId> robots() const;
  const std::vector<TraceRecord>& records() const { return records_; }

 private:
  std::vector<TraceRecord> records_;
  std::map<std::tuple<RobotId, RobotId, long long>, std::size_t> index_;
  long long start_ = 0;
  long long end_ = 0;
};

LinkState link_state_trace(const Trace& trace, std::pair<RobotId, RobotId> pair, double t);

/// Link state per ordered (src, dst) pair.
using LinkMap = std::map<std::pair<RobotId, RobotId>, LinkState>;

/// Peers connected to `self` in both directions.
std::set<RobotId> neighbors(const LinkMap& links, RobotId self);

}  // namespace cslam::comms
