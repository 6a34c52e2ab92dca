#include "cslam/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace cslam {
namespace {

constexpr double kPi = std::numbers::pi;

bool overlaps(const std::vector<Landmark>& placed, const Landmark& c, double gap) {
  for (const auto& l : placed) {
    const double d = std::hypot(l.x - c.x, l.y - c.y);
    if (d < l.radius + c.radius + gap) return true;
  }
  return false;
}

std::vector<Landmark> make_motif_template(const WorldConfig& cfg, Rng& rng) {
  std::vector<Landmark> motif;
  int attempts = 0;
  while (static_cast<int>(motif.size()) < cfg.motif_landmarks) {
    if (++attempts > cfg.max_attempts) {
      throw std::runtime_error("generate_world: motif landmarks do not fit in motif_radius");
    }
    const double r = rng.uniform(cfg.radius_min, cfg.radius_max);
    const double rho = rng.uniform(cfg.motif_inner_radius + r, std::max(cfg.motif_inner_radius + r, cfg.motif_radius - r));
    const double phi = rng.uniform(-kPi, kPi);
    Landmark l{rho * std::cos(phi), rho * std::sin(phi), r};
    if (!overlaps(motif, l, cfg.min_gap)) motif.push_back(l);
  }
  return motif;
}

void validate(const WorldConfig& cfg) {
  if (!(cfg.bounds.width() > 0.0) || !(cfg.bounds.height() > 0.0)) {
    throw std::invalid_argument("generate_world: bounds must have positive area");
  }
  if (cfg.landmark_count < 0 || cfg.motif_copies < 0 || cfg.motif_landmarks < 0) {
    throw std::invalid_argument("generate_world: counts must be non-negative");
  }
  if (!(cfg.radius_min > 0.0) || cfg.radius_max < cfg.radius_min) {
    throw std::invalid_argument("generate_world: need 0 < radius_min <= radius_max");
  }
}

}  // namespace

void RobotProfile::validate() const {
  if (odom_trans_sigma < 0 || odom_rot_sigma < 0 || scan_range_sigma < 0) {
    throw std::invalid_argument("robot profile: sigmas must be >= 0");
  }
  if (beam_dropout_prob < 0 || beam_dropout_prob > 1) {
    throw std::invalid_argument("robot profile: beam_dropout_prob must be in [0, 1]");
  }
  if (vibration_scale < 1) {
    throw std::invalid_argument("robot profile: vibration_scale must be >= 1");
  }
}

World generate_world(const WorldConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  Rng rng(derive_seed(seed, {0x776f726c64}));
  World world;
  world.bounds = cfg.bounds;

  if (cfg.motif_copies > 0 && cfg.motif_landmarks > 0) {
    const auto motif = make_motif_template(cfg, rng);
    const double margin = cfg.motif_radius + cfg.min_gap;
    const double min_sep =
        std::max(cfg.min_motif_separation, 2.0 * cfg.motif_radius + cfg.min_gap);
    std::vector<Pose2> centers;
    int attempts = 0;
    while (static_cast<int>(centers.size()) < cfg.motif_copies) {
      if (++attempts > cfg.max_attempts) {
        throw std::runtime_error("generate_world: cannot place " +
                                 std::to_string(cfg.motif_copies) + " motif copies");
      }
      const Pose2 c(rng.uniform(cfg.bounds.min_x + margin, cfg.bounds.max_x - margin),
                    rng.uniform(cfg.bounds.min_y + margin, cfg.bounds.max_y - margin),
                    rng.uniform(-kPi, kPi));
      const bool too_close = std::any_of(centers.begin(), centers.end(), [&](const Pose2& o) {
        return std::hypot(o.x - c.x, o.y - c.y) < min_sep;
      });
      if (!too_close) centers.push_back(c);
    }
    for (const auto& c : centers) {
      MotifStamp stamp{0, c, world.landmarks.size(), motif.size()};
      for (const auto& m : motif) {
        const Eigen::Vector2d p = c.transform({m.x, m.y});
        world.landmarks.push_back({p.x(), p.y(), m.radius});
      }
      world.motif_stamps.push_back(stamp);
    }
  }

  for (int i = 0; i < cfg.landmark_count; ++i) {
    bool placed = false;
    for (int a = 0; a < cfg.max_attempts && !placed; ++a) {
      const double r = rng.uniform(cfg.radius_min, cfg.radius_max);
      const Landmark l{rng.uniform(cfg.bounds.min_x + r, cfg.bounds.max_x - r),
                       rng.uniform(cfg.bounds.min_y + r, cfg.bounds.max_y - r), r};
      const bool in_clear_zone =
          std::any_of(world.motif_stamps.begin(), world.motif_stamps.end(), [&](const MotifStamp& s) {
            return std::hypot(s.placement.x - l.x, s.placement.y - l.y) < cfg.motif_clear_radius + r;
          });
      if (in_clear_zone || overlaps(world.landmarks, l, cfg.min_gap)) continue;
      world.landmarks.push_back(l);
      placed = true;
    }
    if (!placed) {
      throw std::runtime_error("generate_world: landmark " + std::to_string(i) +
                               " does not fit without overlap");
    }
  }
  return world;
}

namespace {

struct Route {
  std::vector<Eigen::Vector2d> points;  // closed polyline, last != first
  std::vector<double> cumulative;       // arc length at each vertex, size points+1
  double length = 0.0;

  explicit Route(std::vector<Eigen::Vector2d> pts) : points(std::move(pts)) {
    cumulative.push_back(0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      length += (points[(i + 1) % points.size()] - points[i]).norm();
      cumulative.push_back(length);
    }
  }

  /// Position and unit tangent at arc length s (wrapped).
  std::pair<Eigen::Vector2d, Eigen::Vector2d> at(double s) const {
    s = std::fmod(s, length);
    if (s < 0) s += length;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
    std::size_t i = std::min<std::size_t>(std::distance(cumulative.begin(), it) - 1, points.size() - 1);
    const Eigen::Vector2d a = points[i];
    const Eigen::Vector2d b = points[(i + 1) % points.size()];
    const double seg = cumulative[i + 1] - cumulative[i];
    const double u = seg > 0 ? (s - cumulative[i]) / seg : 0.0;
    Eigen::Vector2d tangent = b - a;
    if (tangent.norm() > 0) tangent.normalize();
    return {a + u * (b - a), tangent};
  }
};

std::vector<Eigen::Vector2d> chaikin(const std::vector<Eigen::Vector2d>& pts, int iterations) {
  std::vector<Eigen::Vector2d> cur = pts;
  for (int k = 0; k < iterations; ++k) {
    std::vector<Eigen::Vector2d> next;
    next.reserve(cur.size() * 2);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const auto& a = cur[i];
      const auto& b = cur[(i + 1) % cur.size()];
      next.push_back(0.75 * a + 0.25 * b);
      next.push_back(0.25 * a + 0.75 * b);
    }
    cur = std::move(next);
  }
  return cur;
}

double distance_to_polyline(const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& line) {
  if (line.empty()) return std::numeric_limits<double>::infinity();
  if (line.size() == 1) return (p - line.front()).norm();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Eigen::Vector2d ab = line[i + 1] - line[i];
    const double len2 = ab.squaredNorm();
    const double u = len2 > 0 ? std::clamp((p - line[i]).dot(ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (p - (line[i] + u * ab)).norm());
  }
  return best;
}

}  // namespace

double trajectory_overlap(const Trajectory& a, const Trajectory& b, double radius,
                          double kf_translation, double kf_rotation) {
  const auto kf = keyframe_indices(a, kf_translation, kf_rotation);
  if (kf.empty()) return 0.0;
  std::vector<Eigen::Vector2d> path;
  path.reserve(b.samples.size());
  for (const auto& s : b.samples) path.push_back(s.pose.translation());
  std::size_t near = 0;
  for (auto i : kf) {
    if (distance_to_polyline(a.samples[i].pose.translation(), path) <= radius) ++near;
  }
  return static_cast<double>(near) / static_cast<double>(kf.size());
}

std::vector<Trajectory> plan_trajectories(const World& world, int n_robots, double overlap,
                                          std::uint64_t seed, const PlanConfig& plan) {
  if (n_robots < 1) throw std::invalid_argument("plan_trajectories: n_robots must be >= 1");
  if (overlap < 0 || overlap > 1) throw std::invalid_argument("plan_trajectories: overlap must be in [0, 1]");
  if (!(plan.speed > 0) || !(plan.dt > 0)) throw std::invalid_argument("plan_trajectories: speed and dt must be > 0");

  const Eigen::Vector2d center = world.bounds.center();
  const double base_radius =
      plan.route_radius_fraction * std::min(world.bounds.width(), world.bounds.height());
  const double margin = 2.0;

  for (int attempt = 0; attempt < plan.max_attempts; ++attempt) {
    Rng rng(derive_seed(seed, {0x706c616e, static_cast<std::uint64_t>(attempt)}));

    // Waypoints on a jittered loop around the field center; motif centers are
    // visited too so that aliased places lie on every robot's path.
    std::vector<std::pair<double, Eigen::Vector2d>> waypoints;
    for (int k = 0; k < plan.route_waypoints; ++k) {
      const double phi = -kPi + 2.0 * kPi * (k + rng.uniform(-0.25, 0.25)) / plan.route_waypoints;
      const double rho = base_radius * (1.0 + rng.uniform(-plan.route_jitter, plan.route_jitter));
      waypoints.emplace_back(phi, center + rho * Eigen::Vector2d(std::cos(phi), std::sin(phi)));
    }
    for (const auto& m : world.motif_stamps) {
      const Eigen::Vector2d c = m.placement.translation();
      const Eigen::Vector2d d = c - center;
      // Replace the angularly closest waypoint so the route stays a simple loop.
      const double phi = std::atan2(d.y(), d.x());
      auto closest = std::min_element(waypoints.begin(), waypoints.end(), [&](auto& a, auto& b) {
        return std::abs(normalize_angle(a.first - phi)) < std::abs(normalize_angle(b.first - phi));
      });
      *closest = {phi, c};
    }
    std::sort(waypoints.begin(), waypoints.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Eigen::Vector2d> polygon;
    for (const auto& w : waypoints) {
      Eigen::Vector2d p = w.second;
      p.x() = std::clamp(p.x(), world.bounds.min_x + margin, world.bounds.max_x - margin);
      p.y() = std::clamp(p.y(), world.bounds.min_y + margin, world.bounds.max_y - margin);
      polygon.push_back(p);
    }
    const Route route(chaikin(polygon, 3));

    std::vector<Trajectory> out;
    for (int r = 0; r < n_robots; ++r) {
      const double lateral = rng.uniform(-plan.max_lateral_offset, plan.max_lateral_offset);
      const double direction = (r % 2 == 0) ? 1.0 : -1.0;
      std::vector<Eigen::Vector2d> shifted;
      shifted.reserve(route.points.size());
      for (std::size_t i = 0; i < route.points.size(); ++i) {
        const auto& prev = route.points[(i + route.points.size() - 1) % route.points.size()];
        const auto& next = route.points[(i + 1) % route.points.size()];
        Eigen::Vector2d t = next - prev;
        if (t.norm() > 0) t.normalize();
        shifted.push_back(route.points[i] + lateral * Eigen::Vector2d(-t.y(), t.x()));
      }
      const Route path(std::move(shifted));
      const double start = plan.start_phase_step * r * path.length;
      const double total = plan.laps * path.length;
      const auto n_steps = static_cast<std::size_t>(std::floor(total / (plan.speed * plan.dt)));

      Trajectory traj;
      traj.robot = r;
      std::vector<Eigen::Vector2d> positions;
      positions.reserve(n_steps + 1);
      for (std::size_t i = 0; i <= n_steps; ++i) {
        const double s = start + direction * plan.speed * plan.dt * static_cast<double>(i);
        Eigen::Vector2d q = path.at(s).first;
        q.x() = std::clamp(q.x(), world.bounds.min_x, world.bounds.max_x);
        q.y() = std::clamp(q.y(), world.bounds.min_y, world.bounds.max_y);
        positions.push_back(q);
      }
      for (std::size_t i = 0; i < positions.size(); ++i) {
        const std::size_t j = i + 1 < positions.size() ? i + 1 : i;
        const std::size_t k = (i + 1 < positions.size() || i == 0) ? i : i - 1;
        const Eigen::Vector2d d = positions[j] - positions[k];
        double heading = std::atan2(d.y(), d.x());
        if (d.norm() == 0 && !traj.samples.empty()) heading = traj.samples.back().pose.theta;
        traj.samples.push_back({plan.dt * static_cast<double>(i), Pose2(positions[i].x(), positions[i].y(), heading)});
      }
      out.push_back(std::move(traj));
    }

    bool ok = true;
    for (int a = 0; a < n_robots && ok; ++a) {
      for (int b = 0; b < n_robots && ok; ++b) {
        if (a == b) continue;
        ok = trajectory_overlap(out[a], out[b], plan.overlap_radius, plan.keyframe_translation,
                                plan.keyframe_rotation) >= overlap;
      }
    }
    if (ok) return out;
  }
  throw std::runtime_error("plan_trajectories: overlap " + std::to_string(overlap) +
                           " unreachable within " + std::to_string(plan.max_attempts) + " attempts");
}

Scan simulate_scan(const World& world, const Pose2& pose, const SensorConfig& sensor,
                   const RobotProfile& profile, Rng& rng) {
  if (sensor.n_beams < 1 || !(sensor.max_range > 0)) {
    throw std::invalid_argument("simulate_scan: need n_beams >= 1 and max_range > 0");
  }
  Scan scan;
  scan.origin_gt = pose;
  const double sigma = profile.scan_range_sigma * profile.vibration_scale;
  const double dropout = std::min(1.0, profile.beam_dropout_prob * profile.vibration_scale);
  const double step = 2.0 * kPi / sensor.n_beams;
  const Eigen::Vector2d o = pose.translation();

  for (int b = 0; b < sensor.n_beams; ++b) {
    const double phi = -kPi + (b + 0.5) * step;
    const Eigen::Vector2d d(std::cos(pose.theta + phi), std::sin(pose.theta + phi));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& l : world.landmarks) {
      const Eigen::Vector2d f = o - Eigen::Vector2d(l.x, l.y);
      const double cc = f.squaredNorm() - l.radius * l.radius;
      if (cc <= 0) continue;  // sensor inside the disk
      const double bb = f.dot(d);
      if (bb >= 0) continue;  // disk behind the sensor
      const double disc = bb * bb - cc;
      if (disc < 0) continue;
      const double t = -bb - std::sqrt(disc);
      if (t > 0 && t < best) best = t;
    }
    // Fixed draw count per beam keeps the stream aligned across worlds.
    const bool dropped = rng.uniform() < dropout;
    const double noise = rng.normal() * sigma;
    if (dropped || best > sensor.max_range) continue;
    const double range = best + noise;
    if (range <= 0 || range > sensor.max_range) continue;
    scan.points.emplace_back(range * std::cos(phi), range * std::sin(phi));
  }
  return scan;
}

Pose2 odometry_measure(const Pose2& prev_gt, const Pose2& curr_gt, const RobotProfile& profile,
                       Rng& rng) {
  const Pose2 rel = prev_gt.between(curr_gt);
  const double trans = std::hypot(rel.x, rel.y);
  const double sxy = profile.odom_trans_sigma * trans;
  const double sth = profile.odom_rot_sigma * std::abs(rel.theta);
  const double nx = rng.normal() * sxy;
  const double ny = rng.normal() * sxy;
  const double nth = rng.normal() * sth;
  if (sxy == 0 && sth == 0) return rel;
  return {rel.x + nx, rel.y + ny, rel.theta + nth};
}

std::vector<std::size_t> keyframe_indices(const Trajectory& trajectory, double translation,
                                          double rotation) {
  std::vector<std::size_t> out;
  if (trajectory.samples.empty()) return out;
  out.push_back(0);
  for (std::size_t i = 1; i < trajectory.samples.size(); ++i) {
    const Pose2 rel = trajectory.samples[out.back()].pose.between(trajectory.samples[i].pose);
    if (std::hypot(rel.x, rel.y) >= translation || std::abs(rel.theta) >= rotation) out.push_back(i);
  }
  return out;
}

std::vector<TimedPose> emulate_gps(const Trajectory& trajectory, double sigma, double rate_hz,
                                   Rng& rng) {
  std::vector<TimedPose> out;
  if (trajectory.samples.empty() || !(rate_hz > 0)) return out;
  const double period = 1.0 / rate_hz;
  const double t0 = trajectory.samples.front().stamp;
  const double t1 = trajectory.samples.back().stamp;
  std::size_t j = 0;
  for (int k = 0;; ++k) {
    const double t = t0 + k * period;
    if (t > t1 + 1e-9) break;
    while (j + 1 < trajectory.samples.size() &&
           std::abs(trajectory.samples[j + 1].stamp - t) <= std::abs(trajectory.samples[j].stamp - t)) {
      ++j;
    }
    const Pose2& p = trajectory.samples[j].pose;
    const double nx = rng.normal() * sigma;
    const double ny = rng.normal() * sigma;
    out.push_back({t, Pose2(p.x + nx, p.y + ny, p.theta)});
  }
  return out;
}

void to_json(nlohmann::json& j, const World& w) {
  j = nlohmann::json::object();
  j["bounds"] = {{"min_x", w.bounds.min_x}, {"min_y", w.bounds.min_y},
                 {"max_x", w.bounds.max_x}, {"max_y", w.bounds.max_y}};
  auto& lm = j["landmarks"] = nlohmann::json::array();
  for (const auto& l : w.landmarks) lm.push_back({l.x, l.y, l.radius});
  auto& ms = j["motif_stamps"] = nlohmann::json::array();
  for (const auto& m : w.motif_stamps) {
    ms.push_back({{"motif_id", m.motif_id},
                  {"placement", {m.placement.x, m.placement.y, m.placement.theta}},
                  {"first_landmark", m.first_landmark},
                  {"landmark_count", m.landmark_count}});
  }
}

void from_json(const nlohmann::json& j, World& w) {
  const auto& b = j.at("bounds");
  w.bounds = {b.at("min_x").get<double>(), b.at("min_y").get<double>(), b.at("max_x").get<double>(),
              b.at("max_y").get<double>()};
  w.landmarks.clear();
  for (const auto& l : j.at("landmarks")) {
    w.landmarks.push_back({l.at(0).get<double>(), l.at(1).get<double>(), l.at(2).get<double>()});
  }
  w.motif_stamps.clear();
  for (const auto& m : j.at("motif_stamps")) {
    const auto& p = m.at("placement");
    MotifStamp s;
    s.motif_id = m.at("motif_id").get<int>();
    s.placement = Pose2(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
    s.first_landmark = m.at("first_landmark").get<std::size_t>();
    s.landmark_count = m.at("landmark_count").get<std::size_t>();
    w.motif_stamps.push_back(s);
  }
}

}  // namespace cslam
