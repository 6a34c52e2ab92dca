#include "cslam/sim/mission.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "cslam/backend/coordination.hpp"
#include "cslam/backend/optimizer.hpp"
#include "cslam/error.hpp"
#include "cslam/frontend/prioritize.hpp"
#include "cslam/frontend/registration.hpp"

namespace cslam::sim {

using backend::NodeKey;
using frontend::CandidateMatch;
using frontend::KeyframeRef;

namespace {

enum StreamTag : std::uint64_t { kWorld = 1, kPlan, kOdometry, kScan, kRegistration, kGps };

/// Smallest odometry standard deviations used for information matrices.
constexpr double kMinSigmaXy = 1e-3;
constexpr double kMinSigmaTheta = 1e-3;

Eigen::Matrix3d odometry_information(const Pose2& m, const RobotProfile& p) {
  const double s_xy = std::max(p.odom_trans_sigma * std::hypot(m.x, m.y), kMinSigmaXy);
  const double s_th = std::max(p.odom_rot_sigma * std::abs(m.theta), kMinSigmaTheta);
  return Eigen::Vector3d(1.0 / (s_xy * s_xy), 1.0 / (s_xy * s_xy), 1.0 / (s_th * s_th)).asDiagonal();
}

Pose2 pose_at(const Trajectory& t, double stamp) {
  auto it = std::lower_bound(t.samples.begin(), t.samples.end(), stamp - 1e-9,
                             [](const TimedPose& s, double v) { return s.stamp < v; });
  if (it == t.samples.end()) return t.samples.back().pose;
  return it->pose;
}

backend::VersionVector merge(backend::VersionVector a, const backend::VersionVector& b) {
  for (const auto& [id, v] : b) {
    auto& e = a[id];
    e.keyframe = std::max(e.keyframe, v.keyframe);
    e.edge_seq = std::max(e.edge_seq, v.edge_seq);
  }
  return a;
}

struct PeerState {
  std::set<KeyframeRef> descriptors_known;
  std::vector<KeyframeRef> descriptors_in_flight;
  bool descriptors_outstanding = false;
  backend::VersionVector believed;
  bool delta_outstanding = false;
  std::size_t graph_size = 0;
};

struct Agent {
  RobotId id = 0;
  const Scenario::RobotData* data = nullptr;
  int next_keyframe = 0;
  std::map<int, Pose2> local;
  backend::PoseGraph graph;
  frontend::DescriptorStore own;
  frontend::DescriptorStore foreign;
  std::set<KeyframeRef> processed_own;
  std::set<KeyframeRef> processed_foreign;
  std::vector<CandidateMatch> backlog;
  std::deque<CandidateMatch> to_request;
  std::map<std::pair<KeyframeRef, KeyframeRef>, CandidateMatch> awaiting;
  std::vector<comms::Message> retry;
  std::map<RobotId, PeerState> peers;
  std::set<RobotId> previous_neighbors;
  double last_optimization = -std::numeric_limits<double>::infinity();
  Pose2 correction;
  /// Graph size announced in the latest heartbeat; peers elect from these.
  std::size_t announced_size = 0;
};

class Mission {
 public:
  Mission(const Scenario& s, const ScenarioConfig& c, RegistrationCache* cache)
      : scenario_(s), config_(c), cache_(cache), registration_(c.frontend.registration()) {
    for (const auto& [id, data] : s.robots) {
      Agent& a = agents_[id];
      a.id = id;
      a.data = &data;
      for (const auto& [other, d] : s.robots) {
        if (other != id) a.peers[other];
      }
    }
    transport_.set_record_series(true);
  }

  MissionResult run() {
    const int ticks_per_round = static_cast<int>(std::lround(1.0 / config_.tick));
    const auto n_ticks = static_cast<long long>(std::llround(scenario_.duration / config_.tick));
    for (long long k = 0; k <= n_ticks; ++k) {
      now_ = static_cast<double>(k) * config_.tick;
      for (auto& [id, a] : agents_) create_keyframes(a);
      if (k % ticks_per_round == 0) {
        if (k < n_ticks || links_.empty()) update_links();
        for (auto& [id, a] : agents_) round(a);
      }
      if (k == n_ticks) break;
      for (auto& d : transport_.step(config_.tick, links_)) deliver(std::move(d.message));
      for (auto& m : transport_.take_dropped()) dropped(std::move(m));
    }
    return finish();
  }

 private:
  // Keyframes ---------------------------------------------------------------

  void create_keyframes(Agent& a) {
    const auto& d = *a.data;
    while (a.next_keyframe < static_cast<int>(d.stamps.size()) &&
           d.stamps[static_cast<std::size_t>(a.next_keyframe)] <= now_ + 1e-9) {
      const int kf = a.next_keyframe++;
      const auto idx = static_cast<std::size_t>(kf);
      if (kf == 0) {
        a.local[0] = Pose2::identity();
        a.graph.add_node({a.id, 0}, a.correction);
      } else {
        const Pose2& m = d.odometry[idx];
        a.local[kf] = a.local.at(kf - 1) * m;
        backend::Edge e;
        e.kind = backend::EdgeKind::Odometry;
        e.from = {a.id, kf - 1};
        e.to = {a.id, kf};
        e.measurement = m;
        e.information = odometry_information(m, d.profile);
        a.graph.insert_own(e, a.id);
      }
      a.own.emplace(KeyframeRef{a.id, kf}, d.descriptors[idx]);
    }
  }

  // Links -------------------------------------------------------------------

  void update_links() {
    links_.clear();
    for (const auto& [i, ai] : agents_) {
      for (const auto& [j, aj] : agents_) {
        if (i == j) continue;
        if (scenario_.trace) {
          links_[{i, j}] = scenario_.trace->at(i, j, now_ + static_cast<double>(scenario_.trace->start()));
        } else {
          const Pose2 pi = pose_at(scenario_.truth.at(i), now_);
          const Pose2 pj = pose_at(scenario_.truth.at(j), now_);
          links_[{i, j}] = comms::link_state_model(std::hypot(pi.x - pj.x, pi.y - pj.y), config_.link.model);
        }
      }
    }
  }

  // Rounds ------------------------------------------------------------------

  void send(RobotId src, RobotId dst, comms::Payload payload) {
    transport_.send(comms::make_message(src, dst, std::move(payload), now_));
  }

  void round(Agent& a) {
    const auto nbrs = comms::neighbors(links_, a.id);
    const std::size_t previous_announcement = a.announced_size;
    if (!nbrs.empty()) a.announced_size = a.graph.node_count();
    for (RobotId n : nbrs) {
      send(a.id, n, comms::ControlPayload{a.announced_size});
      auto& peer = a.peers.at(n);
      // Only the higher-id robot of a pair searches for candidates.
      if (n > a.id && !peer.descriptors_outstanding) {
        auto batch = frontend::missing_descriptors(a.own, peer.descriptors_known);
        if (!batch.descriptors.empty()) {
          peer.descriptors_in_flight.clear();
          for (const auto& dsc : batch.descriptors) peer.descriptors_in_flight.push_back(dsc.ref());
          peer.descriptors_outstanding = true;
          send(a.id, n, std::move(batch));
        }
      }
      if (!peer.delta_outstanding) {
        auto delta = a.graph.delta_for(peer.believed);
        if (!delta.empty()) {
          peer.delta_outstanding = true;
          send(a.id, n, std::move(delta));
        }
      }
    }

    detect(a);
    if (!nbrs.empty() && !a.backlog.empty()) {
      const auto chosen = frontend::prioritize(a.backlog, a.graph, config_.frontend.budget);
      selected_ += chosen.size();
      a.to_request.insert(a.to_request.end(), chosen.begin(), chosen.end());
      a.backlog.clear();
    }
    for (auto it = a.to_request.begin(); it != a.to_request.end();) {
      if (!nbrs.count(it->a.robot)) {
        ++it;
        continue;
      }
      a.awaiting.emplace(std::pair{it->a, it->b}, *it);
      send(a.id, it->a.robot, comms::ScanRequest{it->a, it->b});
      it = a.to_request.erase(it);
    }
    std::vector<comms::Message> keep;
    for (auto& m : a.retry) {
      if (nbrs.count(m.dst)) {
        m.enqueued_at = now_;
        transport_.send(std::move(m));
      } else {
        keep.push_back(std::move(m));
      }
    }
    a.retry = std::move(keep);

    if (!nbrs.empty()) {
      std::set<RobotId> group = nbrs;
      group.insert(a.id);
      std::map<RobotId, std::size_t> sizes{{a.id, previous_announcement}};
      for (RobotId n : nbrs) sizes[n] = a.peers.at(n).graph_size;
      const bool gained = !std::includes(a.previous_neighbors.begin(), a.previous_neighbors.end(), nbrs.begin(),
                                         nbrs.end());
      if (backend::elect(group, sizes) == a.id &&
          (gained || now_ - a.last_optimization >= config_.backend.trigger_period - 1e-9)) {
        optimize(a, nbrs);
      }
    }
    a.previous_neighbors = nbrs;
  }

  /// New inter-robot candidates against lower-id robots' descriptors.
  void detect(Agent& a) {
    std::vector<const frontend::ScanDescriptor*> new_own, old_own, new_foreign, all_foreign;
    for (const auto& [ref, d] : a.own) (a.processed_own.count(ref) ? old_own : new_own).push_back(&d);
    for (const auto& [ref, d] : a.foreign) {
      if (ref.robot >= a.id) continue;
      all_foreign.push_back(&d);
      if (!a.processed_foreign.count(ref)) new_foreign.push_back(&d);
    }
    if (new_own.empty() && new_foreign.empty()) return;
    const double tau = config_.frontend.tau_sim;
    auto found = frontend::detect_candidates(new_own, all_foreign, tau);
    auto more = frontend::detect_candidates(old_own, new_foreign, tau);
    found.insert(found.end(), more.begin(), more.end());
    detected_ += found.size();
    a.backlog.insert(a.backlog.end(), found.begin(), found.end());
    for (const auto* d : new_own) a.processed_own.insert(d->ref());
    for (const auto* d : new_foreign) a.processed_foreign.insert(d->ref());
  }

  // Messages ----------------------------------------------------------------

  void deliver(comms::Message m) {
    Agent& dst = agents_.at(m.dst);
    Agent& src = agents_.at(m.src);
    switch (m.kind) {
      case comms::MessageKind::DescriptorBatch: {
        for (const auto& d : std::get<comms::DescriptorBatch>(m.payload).descriptors) dst.foreign.emplace(d.ref(), d);
        auto& peer = src.peers.at(m.dst);
        peer.descriptors_known.insert(peer.descriptors_in_flight.begin(), peer.descriptors_in_flight.end());
        peer.descriptors_in_flight.clear();
        peer.descriptors_outstanding = false;
        break;
      }
      case comms::MessageKind::ScanRequest: {
        const auto& req = std::get<comms::ScanRequest>(m.payload);
        const auto& scan = dst.data->scans.at(static_cast<std::size_t>(req.wanted.keyframe));
        send(dst.id, src.id, comms::ScanPayload{scan, req.local});
        break;
      }
      case comms::MessageKind::ScanPayload: {
        const auto& p = std::get<comms::ScanPayload>(m.payload);
        register_pair(dst, p.scan, p.requester);
        break;
      }
      case comms::MessageKind::GraphDelta: {
        const auto& delta = std::get<backend::GraphDelta>(m.payload);
        dst.graph.apply_delta(delta);
        auto& back = dst.peers.at(m.src);
        back.believed = merge(back.believed, delta.sender_version);
        auto& peer = src.peers.at(m.dst);
        peer.believed = merge(peer.believed, delta.sender_version);
        peer.delta_outstanding = false;
        break;
      }
      case comms::MessageKind::EstimateBroadcast: {
        const auto& est = std::get<comms::EstimateBroadcast>(m.payload);
        apply_estimates(dst, est.poses);
        break;
      }
      case comms::MessageKind::Control:
        dst.peers.at(m.src).graph_size = std::get<comms::ControlPayload>(m.payload).graph_size;
        break;
    }
  }

  void dropped(comms::Message m) {
    Agent& src = agents_.at(m.src);
    switch (m.kind) {
      case comms::MessageKind::DescriptorBatch: {
        auto& peer = src.peers.at(m.dst);
        peer.descriptors_in_flight.clear();
        peer.descriptors_outstanding = false;
        break;
      }
      case comms::MessageKind::GraphDelta:
        src.peers.at(m.dst).delta_outstanding = false;
        break;
      case comms::MessageKind::ScanRequest:
      case comms::MessageKind::ScanPayload:
        src.retry.push_back(std::move(m));
        break;
      case comms::MessageKind::EstimateBroadcast:
      case comms::MessageKind::Control:
        break;
    }
  }

  void register_pair(Agent& a, const Scan& remote, const KeyframeRef& local) {
    const KeyframeRef ra{remote.robot, remote.keyframe};
    const auto it = a.awaiting.find({ra, local});
    if (it == a.awaiting.end()) return;
    const CandidateMatch cand = it->second;
    a.awaiting.erase(it);

    std::optional<frontend::RegistrationResult> res;
    if (cache_) res = cache_->find(ra, local);
    if (!res) {
      Rng rng(derive_seed(config_.seed, {kRegistration, static_cast<std::uint64_t>(ra.robot),
                                         static_cast<std::uint64_t>(ra.keyframe),
                                         static_cast<std::uint64_t>(local.robot),
                                         static_cast<std::uint64_t>(local.keyframe)}));
      res = frontend::register_scans(remote, a.data->scans.at(static_cast<std::size_t>(local.keyframe)),
                                     registration_, rng);
      if (cache_) cache_->store(ra, local, *res);
    }
    res->success = res->inliers >= registration_.min_inliers;

    LoopRecord rec;
    rec.a = ra;
    rec.b = local;
    rec.similarity = cand.similarity;
    rec.time = now_;
    rec.success = res->success;
    rec.inliers = res->inliers;
    rec.rmse = res->rmse;
    rec.measurement = res->relative_pose;
    rec.truth = remote.origin_gt.inverse() * a.data->scans.at(static_cast<std::size_t>(local.keyframe)).origin_gt;
    loops_.push_back(rec);
    if (!res->success) return;

    const double fraction = res->b_points > 0 ? static_cast<double>(res->inliers) / res->b_points : 0.0;
    const double scale = std::max(fraction, 1e-3);
    backend::Edge e;
    e.kind = backend::EdgeKind::InterRobotLoop;
    e.from = {ra.robot, ra.keyframe};
    e.to = {local.robot, local.keyframe};
    e.measurement = res->relative_pose;
    e.information = Eigen::Vector3d(config_.backend.loop_information_xy * scale,
                                    config_.backend.loop_information_xy * scale,
                                    config_.backend.loop_information_theta * scale)
                        .asDiagonal();
    a.graph.insert_own(e, a.id);
  }

  // Back-end ----------------------------------------------------------------

  void apply_estimates(Agent& a, const std::map<NodeKey, Pose2>& poses) {
    for (const auto& [k, p] : poses) {
      if (a.graph.has_node(k)) a.graph.set_estimate(k, p);
    }
    backend::OptimizationResult view;
    int last_kf = -1;
    for (const auto& [k, p] : poses) {
      if (k.robot != a.id) continue;
      view.poses[k] = p;
      last_kf = std::max(last_kf, k.keyframe);
    }
    if (last_kf < 0) return;
    a.correction = backend::apply_correction(a.local, view, a.id);
    for (auto it = a.local.upper_bound(last_kf); it != a.local.end(); ++it) {
      a.graph.set_estimate({a.id, it->first}, a.correction * it->second);
    }
  }

  void optimize(Agent& a, const std::set<RobotId>& nbrs) {
    a.last_optimization = now_;
    const NodeKey anchor{a.id, 0};
    backend::PoseGraph sub;
    const auto comps = a.graph.components();
    const backend::PoseGraph* g = &a.graph;
    if (comps.size() > 1) {
      for (const auto& c : comps) {
        if (std::binary_search(c.begin(), c.end(), anchor)) {
          sub = a.graph.subgraph(std::set<NodeKey>(c.begin(), c.end()));
          break;
        }
      }
      g = &sub;
    }
    const auto loops = std::count_if(g->edges().begin(), g->edges().end(), [](const auto& e) { return e.is_loop(); });
    if (loops == 0) return;

    OptimizationRecord rec;
    rec.time = now_;
    rec.robot = a.id;
    rec.nodes = g->node_count();
    rec.edges = g->edges().size();
    rec.loops = static_cast<std::size_t>(loops);
    backend::OptimizationResult result;
    try {
      result = backend::optimize(*g, config_.backend.gnc, anchor);
    } catch (const SolverDiverged&) {
      rec.diverged = true;
      optimizations_.push_back(rec);
      return;
    }
    rec.iterations = result.iterations;
    rec.lm_iterations = result.lm_iterations;
    rec.cost = result.final_cost;
    for (const auto& [idx, w] : result.loop_weights) rec.rejected_loops += w < 0.5 ? 1 : 0;
    optimizations_.push_back(rec);

    apply_estimates(a, result.poses);
    for (RobotId n : nbrs) {
      comms::EstimateBroadcast b;
      b.optimizer = a.id;
      for (const auto& [k, p] : result.poses) {
        if (k.robot == n) b.poses.emplace(k, p);
      }
      if (!b.poses.empty()) send(a.id, n, std::move(b));
    }
  }

  // Results -----------------------------------------------------------------

  MissionResult finish() {
    MissionResult r;
    r.duration = scenario_.duration;
    for (const auto& [id, a] : agents_) {
      auto& est = r.estimate[id];
      auto& odo = r.odometry[id];
      for (const auto& [kf, local] : a.local) {
        const double stamp = a.data->stamps[static_cast<std::size_t>(kf)];
        est.push_back({stamp, *a.graph.estimate({id, kf})});
        odo.push_back({stamp, local});
      }
      const auto& truth = scenario_.truth.at(id);
      if (config_.eval.gps) {
        Rng rng(derive_seed(config_.seed, {kGps, static_cast<std::uint64_t>(id)}));
        r.reference[id] = emulate_gps(truth, config_.eval.gps_sigma, config_.eval.gps_rate_hz, rng);
      } else {
        r.reference[id] = truth.samples;
      }
    }
    r.ate = eval::ate(r.estimate, r.reference, true);
    r.odometry_ate = eval::ate_per_robot_aligned(r.odometry, r.reference);
    r.tau_err = config_.eval.tau_err.value_or(r.ate.mean);
    r.loops = std::move(loops_);
    for (auto& l : r.loops) {
      l.label = eval::classify_loop(l.success, l.measurement, l.truth, r.tau_err);
      switch (l.label) {
        case eval::LoopClass::Correct: ++r.counts.correct; break;
        case eval::LoopClass::Incorrect: ++r.counts.incorrect; break;
        case eval::LoopClass::Failed: ++r.counts.failed; break;
      }
    }
    r.candidates_detected = detected_;
    r.candidates_selected = selected_;
    r.optimizations = std::move(optimizations_);
    r.comm = transport_.report();
    const Agent* biggest = nullptr;
    for (const auto& [id, a] : agents_) {
      if (!biggest || a.graph.node_count() > biggest->graph.node_count()) biggest = &a;
    }
    if (biggest) {
      r.graph = biggest->graph;
      r.graph_owner = biggest->id;
    }
    return r;
  }

  const Scenario& scenario_;
  const ScenarioConfig& config_;
  RegistrationCache* cache_;
  frontend::RegistrationConfig registration_;
  std::map<RobotId, Agent> agents_;
  comms::Transport transport_;
  comms::LinkMap links_;
  double now_ = 0.0;
  std::vector<LoopRecord> loops_;
  std::vector<OptimizationRecord> optimizations_;
  std::size_t detected_ = 0;
  std::size_t selected_ = 0;
};

}  // namespace

Scenario prepare_scenario(const ScenarioConfig& config) {
  Scenario s;
  s.config = config;
  s.world = generate_world(config.world, derive_seed(config.seed, {kWorld}));
  const auto plans = plan_trajectories(s.world, static_cast<int>(config.robots.size()), config.overlap,
                                       derive_seed(config.seed, {kPlan}), config.plan);
  double end = 0.0;
  for (const auto& t : plans) end = std::max(end, t.samples.back().stamp);
  s.duration = config.duration > 0 ? config.duration : end;
  for (std::size_t i = 0; i < config.robots.size(); ++i) {
    const RobotProfile& profile = config.robots[i];
    profile.validate();
    Trajectory t = plans[i];
    t.robot = profile.id;

    auto& d = s.robots[profile.id];
    d.profile = profile;
    d.keyframe_samples = keyframe_indices(t, config.plan.keyframe_translation, config.plan.keyframe_rotation);
    std::erase_if(d.keyframe_samples, [&](std::size_t j) { return t.samples[j].stamp > s.duration + 1e-9; });
    Rng odo(derive_seed(config.seed, {kOdometry, static_cast<std::uint64_t>(profile.id)}));
    Rng scan_rng(derive_seed(config.seed, {kScan, static_cast<std::uint64_t>(profile.id)}));
    for (std::size_t k = 0; k < d.keyframe_samples.size(); ++k) {
      const auto& sample = t.samples[d.keyframe_samples[k]];
      d.stamps.push_back(sample.stamp);
      d.truth.push_back(sample.pose);
      d.odometry.push_back(k == 0 ? Pose2::identity() : odometry_measure(d.truth[k - 1], sample.pose, profile, odo));
      Scan scan = simulate_scan(s.world, sample.pose, config.sensor, profile, scan_rng);
      scan.robot = profile.id;
      scan.keyframe = static_cast<int>(k);
      scan.stamp = sample.stamp;
      d.descriptors.push_back(
          frontend::compute_descriptor(scan, config.frontend.rings, config.frontend.sectors, config.frontend.r_max));
      d.scans.push_back(std::move(scan));
    }
    s.truth.emplace(profile.id, std::move(t));
  }
  if (config.link.trace) s.trace = comms::Trace::load(*config.link.trace);
  return s;
}

std::optional<frontend::RegistrationResult> RegistrationCache::find(const KeyframeRef& a, const KeyframeRef& b) const {
  std::lock_guard lock(mutex_);
  const auto it = results_.find({a, b});
  if (it == results_.end()) return std::nullopt;
  return it->second;
}

void RegistrationCache::store(const KeyframeRef& a, const KeyframeRef& b, const frontend::RegistrationResult& r) {
  std::lock_guard lock(mutex_);
  results_.emplace(std::pair{a, b}, r);
}

std::size_t RegistrationCache::size() const {
  std::lock_guard lock(mutex_);
  return results_.size();
}

std::uint64_t MissionResult::front_end_bytes() const { return comm.total(comms::Category::FrontEnd).bytes_sent; }

std::uint64_t MissionResult::back_end_bytes() const { return comm.total(comms::Category::BackEnd).bytes_sent; }

double MissionResult::kbytes_per_correct_loop() const {
  return static_cast<double>(front_end_bytes()) / 1000.0 / static_cast<double>(std::max<std::size_t>(1, counts.correct));
}

MissionResult run_mission(const Scenario& scenario, const ScenarioConfig& config, RegistrationCache* cache) {
  return Mission(scenario, config, cache).run();
}

MissionResult run_mission(const Scenario& scenario) { return run_mission(scenario, scenario.config, nullptr); }

}  // namespace cslam::sim
