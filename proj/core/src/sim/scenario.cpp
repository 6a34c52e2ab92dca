#include "cslam/sim/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <type_traits>

#include "cslam/error.hpp"

namespace cslam::sim {

using nlohmann::json;

frontend::RegistrationConfig FrontendParams::registration() const {
  frontend::RegistrationConfig r;
  r.min_inliers = min_inliers;
  r.inlier_radius = inlier_radius;
  r.ransac_iterations = ransac_iterations;
  r.icp_max_iterations = icp_max_iterations;
  r.icp_tolerance = icp_tolerance;
  r.icp_max_correspondence = icp_max_correspondence;
  r.rings = rings;
  r.sectors = sectors;
  r.r_max = r_max;
  return r;
}

std::vector<RobotProfile> ScenarioConfig::default_robots() {
  return {
      {1, 0.01, 0.01, 0.02, 0.05, 1.0},
      {2, 0.12, 0.12, 0.02, 0.05, 2.0},
      {3, 0.04, 0.04, 0.02, 0.05, 1.6},
  };
}

namespace {

/// Reads the members of one JSON object, tracking which keys were used.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object at " + where());
  }

  std::string key(const std::string& name) const { return path_.empty() ? name : path_ + "." + name; }

  template <class T>
  void get(const std::string& name, T& out, std::type_identity_t<std::function<bool(const T&)>> ok = {},
           const char* rule = "") {
    if (!j_.contains(name)) return;
    seen_.insert(name);
    T value;
    try {
      value = j_.at(name).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(key(name), "bad value for " + key(name) + ": " + e.what());
    }
    if (ok && !ok(value)) throw ConfigError(key(name), "bad value for " + key(name) + ": must be " + rule);
    out = value;
  }

  /// Nested object, or nullptr when absent.
  const json* child(const std::string& name) {
    if (!j_.contains(name)) return nullptr;
    seen_.insert(name);
    return &j_.at(name);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(key(k), "unknown config key " + key(k));
    }
  }

 private:
  std::string where() const { return path_.empty() ? "top level" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class T>
std::function<bool(const T&)> positive() {
  return [](const T& v) { return v > 0; };
}
template <class T>
std::function<bool(const T&)> non_negative() {
  return [](const T& v) { return v >= 0; };
}
std::function<bool(const double&)> unit_interval() {
  return [](const double& v) { return v >= 0.0 && v <= 1.0; };
}

void read_world(const json& j, WorldConfig& w) {
  Reader r(j, "world");
  if (const json* b = r.child("bounds")) {
    Reader rb(*b, "world.bounds");
    rb.get("min_x", w.bounds.min_x);
    rb.get("min_y", w.bounds.min_y);
    rb.get("max_x", w.bounds.max_x);
    rb.get("max_y", w.bounds.max_y);
    rb.finish();
    if (!(w.bounds.width() > 0 && w.bounds.height() > 0)) {
      throw ConfigError("world.bounds", "world.bounds must have positive area");
    }
  }
  r.get("landmark_count", w.landmark_count, non_negative<int>(), ">= 0");
  r.get("radius_min", w.radius_min, positive<double>(), "> 0");
  r.get("radius_max", w.radius_max, positive<double>(), "> 0");
  r.get("min_gap", w.min_gap, non_negative<double>(), ">= 0");
  r.get("motif_copies", w.motif_copies, non_negative<int>(), ">= 0");
  r.get("motif_landmarks", w.motif_landmarks, non_negative<int>(), ">= 0");
  r.get("motif_inner_radius", w.motif_inner_radius, non_negative<double>(), ">= 0");
  r.get("motif_radius", w.motif_radius, positive<double>(), "> 0");
  r.get("motif_clear_radius", w.motif_clear_radius, non_negative<double>(), ">= 0");
  r.get("min_motif_separation", w.min_motif_separation, non_negative<double>(), ">= 0");
  r.get("max_attempts", w.max_attempts, positive<int>(), "> 0");
  r.finish();
  if (w.radius_max < w.radius_min) throw ConfigError("world.radius_max", "world.radius_max must be >= radius_min");
}

void read_plan(const json& j, PlanConfig& p) {
  Reader r(j, "plan");
  r.get("speed", p.speed, positive<double>(), "> 0");
  r.get("dt", p.dt, positive<double>(), "> 0");
  r.get("route_radius_fraction", p.route_radius_fraction, positive<double>(), "> 0");
  r.get("route_waypoints", p.route_waypoints, [](const int& v) { return v >= 3; }, ">= 3");
  r.get("route_jitter", p.route_jitter, non_negative<double>(), ">= 0");
  r.get("max_lateral_offset", p.max_lateral_offset, non_negative<double>(), ">= 0");
  r.get("laps", p.laps, positive<double>(), "> 0");
  r.get("start_phase_step", p.start_phase_step, non_negative<double>(), ">= 0");
  r.get("overlap_radius", p.overlap_radius, positive<double>(), "> 0");
  r.get("max_attempts", p.max_attempts, positive<int>(), "> 0");
  r.get("keyframe_translation", p.keyframe_translation, positive<double>(), "> 0");
  r.get("keyframe_rotation", p.keyframe_rotation, positive<double>(), "> 0");
  r.finish();
}

RobotProfile read_robot(const json& j, const std::string& path) {
  Reader r(j, path);
  RobotProfile p;
  if (!j.contains("id")) throw ConfigError(path + ".id", "missing " + path + ".id");
  r.get("id", p.id, non_negative<int>(), ">= 0");
  r.get("odom_trans_sigma", p.odom_trans_sigma, non_negative<double>(), ">= 0");
  r.get("odom_rot_sigma", p.odom_rot_sigma, non_negative<double>(), ">= 0");
  r.get("scan_range_sigma", p.scan_range_sigma, non_negative<double>(), ">= 0");
  r.get("beam_dropout_prob", p.beam_dropout_prob, unit_interval(), "in [0, 1]");
  r.get("vibration_scale", p.vibration_scale, [](const double& v) { return v >= 1.0; }, ">= 1");
  r.finish();
  return p;
}

void read_frontend(const json& j, FrontendParams& f) {
  Reader r(j, "frontend");
  r.get("rings", f.rings, positive<int>(), "> 0");
  r.get("sectors", f.sectors, positive<int>(), "> 0");
  r.get("r_max", f.r_max, positive<double>(), "> 0");
  r.get("tau_sim", f.tau_sim, unit_interval(), "in [0, 1]");
  r.get("min_inliers", f.min_inliers, non_negative<int>(), ">= 0");
  r.get("inlier_radius", f.inlier_radius, positive<double>(), "> 0");
  r.get("ransac_iterations", f.ransac_iterations, non_negative<int>(), ">= 0");
  r.get("icp_max_iterations", f.icp_max_iterations, non_negative<int>(), ">= 0");
  r.get("icp_tolerance", f.icp_tolerance, positive<double>(), "> 0");
  r.get("icp_max_correspondence", f.icp_max_correspondence, positive<double>(), "> 0");
  if (const json* b = r.child("budget")) {
    if (b->is_null()) {
      f.budget = frontend::Budget::unlimited();
    } else if (b->is_number_integer() && b->get<long long>() >= 0) {
      f.budget.max_matches_per_round = b->get<std::size_t>();
    } else {
      throw ConfigError("frontend.budget", "bad value for frontend.budget: must be null or an integer >= 0");
    }
  }
  r.finish();
}

void read_backend(const json& j, BackendParams& b) {
  Reader r(j, "backend");
  r.get("robust", b.gnc.robust);
  r.get("c", b.gnc.c, positive<double>(), "> 0");
  r.get("mu_update_factor", b.gnc.mu_update_factor, [](const double& v) { return v > 1.0; }, "> 1");
  r.get("max_outer_iterations", b.gnc.max_outer_iterations, positive<int>(), "> 0");
  r.get("weight_tolerance", b.gnc.weight_tolerance, positive<double>(), "> 0");
  r.get("max_lm_iterations", b.gnc.max_lm_iterations, positive<int>(), "> 0");
  r.get("lm_relative_tolerance", b.gnc.lm_relative_tolerance, positive<double>(), "> 0");
  r.get("trigger_period", b.trigger_period, positive<double>(), "> 0");
  r.get("loop_information_xy", b.loop_information_xy, positive<double>(), "> 0");
  r.get("loop_information_theta", b.loop_information_theta, positive<double>(), "> 0");
  r.finish();
}

void read_link(const json& j, LinkParams& l, const std::filesystem::path& base_dir) {
  Reader r(j, "link");
  r.get("range_m", l.model.range_m, positive<double>(), "> 0");
  r.get("latency_near_ms", l.model.latency_near_ms, positive<double>(), "> 0");
  r.get("latency_far_ms", l.model.latency_far_ms, positive<double>(), "> 0");
  r.get("throughput_near_mbps", l.model.throughput_near_mbps, positive<double>(), "> 0");
  r.get("throughput_far_mbps", l.model.throughput_far_mbps, positive<double>(), "> 0");
  if (const json* t = r.child("trace")) {
    if (t->is_null()) {
      l.trace.reset();
    } else if (t->is_string()) {
      std::filesystem::path p = t->get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      if (!std::filesystem::exists(p)) throw ConfigError("link.trace", "trace file not found: " + p.string());
      l.trace = p;
    } else {
      throw ConfigError("link.trace", "bad value for link.trace: must be null or a path");
    }
  }
  r.finish();
}

void read_eval(const json& j, EvalParams& e) {
  Reader r(j, "eval");
  if (const json* t = r.child("tau_err")) {
    if (t->is_null()) {
      e.tau_err.reset();
    } else if (t->is_number() && t->get<double>() > 0) {
      e.tau_err = t->get<double>();
    } else {
      throw ConfigError("eval.tau_err", "bad value for eval.tau_err: must be null or > 0");
    }
  }
  r.get("gps", e.gps);
  r.get("gps_sigma", e.gps_sigma, non_negative<double>(), ">= 0");
  r.get("gps_rate_hz", e.gps_rate_hz, positive<double>(), "> 0");
  r.finish();
}

}  // namespace

ScenarioConfig scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
  ScenarioConfig c;
  Reader r(j, "");
  r.get("seed", c.seed);
  r.get("duration", c.duration, non_negative<double>(), ">= 0");
  r.get("tick", c.tick, [](const double& v) { return v > 0 && v <= 1.0; }, "in (0, 1]");
  r.get("overlap", c.overlap, unit_interval(), "in [0, 1]");
  if (const json* w = r.child("world")) read_world(*w, c.world);
  if (const json* p = r.child("plan")) read_plan(*p, c.plan);
  if (const json* rb = r.child("robots")) {
    if (!rb->is_array() || rb->empty()) throw ConfigError("robots", "robots must be a non-empty array");
    c.robots.clear();
    std::set<RobotId> ids;
    for (std::size_t i = 0; i < rb->size(); ++i) {
      const std::string path = "robots[" + std::to_string(i) + "]";
      c.robots.push_back(read_robot((*rb)[i], path));
      if (!ids.insert(c.robots.back().id).second) throw ConfigError(path + ".id", "duplicate robot id in " + path);
    }
  }
  if (const json* s = r.child("sensor")) {
    Reader rs(*s, "sensor");
    rs.get("n_beams", c.sensor.n_beams, positive<int>(), "> 0");
    rs.get("max_range", c.sensor.max_range, positive<double>(), "> 0");
    rs.finish();
  }
  if (const json* l = r.child("link")) read_link(*l, c.link, base_dir);
  if (const json* f = r.child("frontend")) read_frontend(*f, c.frontend);
  if (const json* b = r.child("backend")) read_backend(*b, c.backend);
  if (const json* e = r.child("eval")) read_eval(*e, c.eval);
  r.finish();
  const double ticks_per_second = 1.0 / c.tick;
  if (std::abs(ticks_per_second - std::round(ticks_per_second)) > 1e-9) {
    throw ConfigError("tick", "tick must divide one second evenly");
  }
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), "cannot parse config file " + path.string() + ": " + e.what());
  }
  return scenario_from_json(j, path.parent_path());
}

json scenario_to_json(const ScenarioConfig& c) {
  json robots = json::array();
  for (const auto& p : c.robots) {
    robots.push_back({{"id", p.id},
                      {"odom_trans_sigma", p.odom_trans_sigma},
                      {"odom_rot_sigma", p.odom_rot_sigma},
                      {"scan_range_sigma", p.scan_range_sigma},
                      {"beam_dropout_prob", p.beam_dropout_prob},
                      {"vibration_scale", p.vibration_scale}});
  }
  const auto& w = c.world;
  const auto& pl = c.plan;
  const auto& f = c.frontend;
  const auto& b = c.backend;
  const auto& m = c.link.model;
  return {
      {"seed", c.seed},
      {"duration", c.duration},
      {"tick", c.tick},
      {"overlap", c.overlap},
      {"world",
       {{"bounds", {{"min_x", w.bounds.min_x}, {"min_y", w.bounds.min_y}, {"max_x", w.bounds.max_x}, {"max_y", w.bounds.max_y}}},
        {"landmark_count", w.landmark_count},
        {"radius_min", w.radius_min},
        {"radius_max", w.radius_max},
        {"min_gap", w.min_gap},
        {"motif_copies", w.motif_copies},
        {"motif_landmarks", w.motif_landmarks},
        {"motif_inner_radius", w.motif_inner_radius},
        {"motif_radius", w.motif_radius},
        {"motif_clear_radius", w.motif_clear_radius},
        {"min_motif_separation", w.min_motif_separation},
        {"max_attempts", w.max_attempts}}},
      {"plan",
       {{"speed", pl.speed},
        {"dt", pl.dt},
        {"route_radius_fraction", pl.route_radius_fraction},
        {"route_waypoints", pl.route_waypoints},
        {"route_jitter", pl.route_jitter},
        {"max_lateral_offset", pl.max_lateral_offset},
        {"laps", pl.laps},
        {"start_phase_step", pl.start_phase_step},
        {"overlap_radius", pl.overlap_radius},
        {"max_attempts", pl.max_attempts},
        {"keyframe_translation", pl.keyframe_translation},
        {"keyframe_rotation", pl.keyframe_rotation}}},
      {"robots", robots},
      {"sensor", {{"n_beams", c.sensor.n_beams}, {"max_range", c.sensor.max_range}}},
      {"link",
       {{"range_m", m.range_m},
        {"latency_near_ms", m.latency_near_ms},
        {"latency_far_ms", m.latency_far_ms},
        {"throughput_near_mbps", m.throughput_near_mbps},
        {"throughput_far_mbps", m.throughput_far_mbps},
        {"trace", c.link.trace ? json(c.link.trace->generic_string()) : json(nullptr)}}},
      {"frontend",
       {{"rings", f.rings},
        {"sectors", f.sectors},
        {"r_max", f.r_max},
        {"tau_sim", f.tau_sim},
        {"min_inliers", f.min_inliers},
        {"inlier_radius", f.inlier_radius},
        {"ransac_iterations", f.ransac_iterations},
        {"icp_max_iterations", f.icp_max_iterations},
        {"icp_tolerance", f.icp_tolerance},
        {"icp_max_correspondence", f.icp_max_correspondence},
        {"budget", f.budget.is_unlimited() ? json(nullptr) : json(f.budget.max_matches_per_round)}}},
      {"backend",
       {{"robust", b.gnc.robust},
        {"c", b.gnc.c},
        {"mu_update_factor", b.gnc.mu_update_factor},
        {"max_outer_iterations", b.gnc.max_outer_iterations},
        {"weight_tolerance", b.gnc.weight_tolerance},
        {"max_lm_iterations", b.gnc.max_lm_iterations},
        {"lm_relative_tolerance", b.gnc.lm_relative_tolerance},
        {"trigger_period", b.trigger_period},
        {"loop_information_xy", b.loop_information_xy},
        {"loop_information_theta", b.loop_information_theta}}},
      {"eval",
       {{"tau_err", c.eval.tau_err ? json(*c.eval.tau_err) : json(nullptr)},
        {"gps", c.eval.gps},
        {"gps_sigma", c.eval.gps_sigma},
        {"gps_rate_hz", c.eval.gps_rate_hz}}},
  };
}

namespace {

std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string config_hash(const ScenarioConfig& config) {
  json j = scenario_to_json(config);
  j.erase("seed");
  // The trace enters through its contents, not where it is stored.
  if (config.link.trace) j["link"]["trace"] = "<contents>";
  std::uint64_t h = fnv1a(0xcbf29ce484222325ULL, j.dump());
  if (config.link.trace) {
    std::ifstream in(*config.link.trace, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    h = fnv1a(h, ss.str());
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string run_name(const ScenarioConfig& config) {
  return config_hash(config) + "-s" + std::to_string(config.seed);
}

}  // namespace cslam::sim
