#include "cslam/comms/link.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cslam/error.hpp"

namespace cslam::comms {

LinkState link_state_model(double distance, const LinkModelParams& model) {
  if (!(distance >= 0)) throw std::invalid_argument("link_state_model: distance must be >= 0");
  if (distance >= model.range_m) return {};
  const double f = std::clamp(distance / model.range_m, 0.0, 1.0);
  return {true, std::lerp(model.latency_near_ms, model.latency_far_ms, f),
          std::lerp(model.throughput_near_mbps, model.throughput_far_mbps, f)};
}

Trace::Trace(std::vector<TraceRecord> records) : records_(std::move(records)) {
  if (records_.empty()) throw std::invalid_argument("trace has no records");
  start_ = records_.front().t_sec;
  end_ = records_.front().t_sec + 1;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.src == r.dst) throw std::invalid_argument("trace record with src == dst at t=" + std::to_string(r.t_sec));
    if (r.connected && !(r.latency_ms > 0 && r.throughput_mbps > 0)) {
      throw std::invalid_argument("trace record connected without positive latency and throughput at t=" +
                                  std::to_string(r.t_sec));
    }
    if (!index_.emplace(std::tuple{r.src, r.dst, r.t_sec}, i).second) {
      throw std::invalid_argument("duplicate trace record at t=" + std::to_string(r.t_sec));
    }
    start_ = std::min(start_, r.t_sec);
    end_ = std::max(end_, r.t_sec + 1);
  }
}

Trace Trace::parse(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("trace is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t_sec,src,dst,latency_ms,throughput_mbps,connected") {
    throw std::invalid_argument("trace header mismatch: " + line);
  }
  std::vector<TraceRecord> records;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    TraceRecord r;
    int connected = 0;
    std::string rest;
    if (!(ls >> r.t_sec >> r.src >> r.dst >> r.latency_ms >> r.throughput_mbps >> connected) || (ls >> rest) ||
        (connected != 0 && connected != 1)) {
      throw std::invalid_argument("malformed trace line " + std::to_string(line_no));
    }
    r.connected = connected == 1;
    records.push_back(r);
  }
  return Trace(std::move(records));
}

Trace Trace::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open trace " + path.string());
  return parse(in);
}

LinkState Trace::at(RobotId src, RobotId dst, double t) const {
  const auto sec = static_cast<long long>(std::floor(t));
  if (!(t >= static_cast<double>(start_)) || sec >= end_) {
    throw TraceExhausted("trace covers [" + std::to_string(start_) + ", " + std::to_string(end_) +
                         "), requested t=" + std::to_string(t));
  }
  const auto it = index_.find({src, dst, sec});
  if (it == index_.end()) return {};
  const auto& r = records_[it->second];
  if (!r.connected) return {};
  return {true, r.latency_ms, r.throughput_mbps};
}

std::set<RobotId> Trace::robots() const {
  std::set<RobotId> out;
  for (const auto& r : records_) {
    out.insert(r.src);
    out.insert(r.dst);
  }
  return out;
}

LinkState link_state_trace(const Trace& trace, std::pair<RobotId, RobotId> pair, double t) {
  return trace.at(pair.first, pair.second, t);
}

std::set<RobotId> neighbors(const LinkMap& links, RobotId self) {
  std::set<RobotId> out;
  for (const auto& [pair, state] : links) {
    if (pair.first != self || !state.connected) continue;
    const auto back = links.find({pair.second, self});
    if (back != links.end() && back->second.connected) out.insert(pair.second);
  }
  return out;
}

}  // namespace cslam::comms
