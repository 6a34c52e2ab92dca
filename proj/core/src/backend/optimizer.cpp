#include "cslam/backend/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "cslam/backend/residual.hpp"
#include "cslam/error.hpp"

namespace cslam::backend {

double tls_weight(double residual_sq, double c, double mu) {
  const double c2 = c * c;
  if (residual_sq >= (mu + 1.0) / mu * c2) return 0.0;
  if (residual_sq <= mu / (mu + 1.0) * c2) return 1.0;
  return std::clamp(c / std::sqrt(residual_sq) * std::sqrt(mu * (mu + 1.0)) - mu, 0.0, 1.0);
}

double graph_cost(const PoseGraph& graph, const std::map<NodeKey, Pose2>& poses,
                  const std::map<std::size_t, double>& loop_weights) {
  double cost = 0.0;
  const auto& edges = graph.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    const auto w_it = loop_weights.find(i);
    const double w = (e.is_loop() && w_it != loop_weights.end()) ? w_it->second : 1.0;
    const Eigen::Vector3d r = edge_residual(poses.at(e.from), poses.at(e.to), e.measurement);
    cost += w * r.dot(e.information * r);
  }
  return cost;
}

namespace {

struct Segment {
  std::vector<NodeKey> nodes;
  std::map<NodeKey, Pose2> local;
};

/// Odometry-connected pieces of each robot's chain.
std::vector<Segment> odometry_segments(const PoseGraph& graph, std::map<NodeKey, int>& segment_of) {
  std::map<NodeKey, const Edge*> next;
  std::set<NodeKey> has_prev;
  for (const auto& e : graph.edges()) {
    if (e.kind != EdgeKind::Odometry) continue;
    if (!next.count(e.from)) next[e.from] = &e;
    has_prev.insert(e.to);
  }
  std::vector<Segment> segments;
  for (const auto& [key, pose] : graph.nodes()) {
    if (has_prev.count(key)) continue;
    Segment s;
    NodeKey cur = key;
    Pose2 p;
    while (true) {
      s.nodes.push_back(cur);
      s.local[cur] = p;
      segment_of[cur] = static_cast<int>(segments.size());
      auto it = next.find(cur);
      if (it == next.end()) break;
      p = p * it->second->measurement;
      cur = it->second->to;
    }
    segments.push_back(std::move(s));
  }
  return segments;
}

bool frames_agree(const Pose2& a, const Pose2& b, const Eigen::Vector2d& probe) {
  const double dtheta = std::abs(normalize_angle(a.theta - b.theta));
  return dtheta < 0.15 && (a.transform(probe) - b.transform(probe)).norm() < 2.0;
}

}  // namespace

std::map<NodeKey, Pose2> initial_guess(const PoseGraph& graph, NodeKey anchor) {
  std::map<NodeKey, int> segment_of;
  const auto segments = odometry_segments(graph, segment_of);
  const auto anchor_pose = graph.estimate(anchor);
  if (!anchor_pose) throw std::invalid_argument("initial_guess: anchor is not in the graph");

  std::vector<std::optional<Pose2>> frame(segments.size());
  const int anchor_seg = segment_of.at(anchor);
  frame[static_cast<std::size_t>(anchor_seg)] = *anchor_pose * segments[static_cast<std::size_t>(anchor_seg)].local.at(anchor).inverse();

  std::vector<Eigen::Vector2d> centroid(segments.size(), Eigen::Vector2d::Zero());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    for (const auto& k : segments[s].nodes) centroid[s] += segments[s].local.at(k).translation();
    centroid[s] /= static_cast<double>(segments[s].nodes.size());
  }

  struct Hyp {
    int target;
    std::size_t edge;
    Pose2 frame;
  };
  while (true) {
    std::map<int, std::vector<Hyp>> hyps;
    const auto& edges = graph.edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const auto& e = edges[i];
      if (!e.is_loop()) continue;
      const int sa = segment_of.at(e.from), sb = segment_of.at(e.to);
      const auto& fa = frame[static_cast<std::size_t>(sa)];
      const auto& fb = frame[static_cast<std::size_t>(sb)];
      const Pose2 pa = segments[static_cast<std::size_t>(sa)].local.at(e.from);
      const Pose2 pb = segments[static_cast<std::size_t>(sb)].local.at(e.to);
      if (fa && !fb) hyps[sb].push_back({sb, i, *fa * pa * e.measurement * pb.inverse()});
      if (fb && !fa) hyps[sa].push_back({sa, i, *fb * pb * e.measurement.inverse() * pa.inverse()});
    }
    if (hyps.empty()) break;
    const Hyp* best = nullptr;
    int best_support = -1;
    for (const auto& [target, list] : hyps) {
      for (const auto& h : list) {
        int support = 0;
        for (const auto& o : list) {
          if (frames_agree(h.frame, o.frame, centroid[static_cast<std::size_t>(target)])) ++support;
        }
        if (support > best_support) {
          best_support = support;
          best = &h;
        }
      }
    }
    frame[static_cast<std::size_t>(best->target)] = best->frame;
  }

  std::map<NodeKey, Pose2> out;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    for (const auto& k : segments[s].nodes) {
      // Segments unreachable from the anchor keep their stored estimates.
      out[k] = frame[s] ? *frame[s] * segments[s].local.at(k) : *graph.estimate(k);
    }
  }
  return out;
}

namespace {

class LevenbergMarquardt {
 public:
  LevenbergMarquardt(const PoseGraph& graph, NodeKey anchor, const GncConfig& cfg)
      : graph_(graph), cfg_(cfg) {
    int idx = 0;
    for (const auto& [k, p] : graph.nodes()) {
      keys_.push_back(k);
      index_[k] = k == anchor ? -1 : idx++;
    }
    n_vars_ = 3 * idx;
    for (const auto& e : graph.edges()) {
      from_.push_back(index_.at(e.from));
      to_.push_back(index_.at(e.to));
    }
  }

  const std::map<NodeKey, int>& index() const { return index_; }

  double cost(const std::vector<Pose2>& x, const std::vector<double>& w) const {
    double c = 0;
    const auto& edges = graph_.edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const Eigen::Vector3d r = edge_residual(x[slot(i, true)], x[slot(i, false)], edges[i].measurement);
      c += w[i] * r.dot(edges[i].information * r);
    }
    return c;
  }

  /// Minimizes the weighted cost in place; returns iterations used.
  int solve(std::vector<Pose2>& x, const std::vector<double>& w) {
    if (n_vars_ == 0) return 0;
    const auto& edges = graph_.edges();
    double lambda = 1e-4;
    double current = cost(x, w);
    int iterations = 0;
    for (; iterations < cfg_.max_lm_iterations; ++iterations) {
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(edges.size() * 36 + static_cast<std::size_t>(n_vars_));
      Eigen::VectorXd g = Eigen::VectorXd::Zero(n_vars_);
      for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto lin = linearize_edge(x[slot(i, true)], x[slot(i, false)], edges[i].measurement);
        const Eigen::Matrix3d omega = w[i] * edges[i].information;
        const int a = from_[i], b = to_[i];
        const Eigen::Matrix<double, 3, 3> ja = lin.jac_from, jb = lin.jac_to;
        auto add_block = [&](int r, int c, const Eigen::Matrix3d& m) {
          for (int u = 0; u < 3; ++u)
            for (int v = 0; v < 3; ++v) trip.emplace_back(3 * r + u, 3 * c + v, m(u, v));
        };
        if (a >= 0) {
          add_block(a, a, ja.transpose() * omega * ja);
          g.segment<3>(3 * a) += ja.transpose() * omega * lin.residual;
        }
        if (b >= 0) {
          add_block(b, b, jb.transpose() * omega * jb);
          g.segment<3>(3 * b) += jb.transpose() * omega * lin.residual;
        }
        if (a >= 0 && b >= 0) {
          const Eigen::Matrix3d hab = ja.transpose() * omega * jb;
          add_block(a, b, hab);
          add_block(b, a, hab.transpose());
        }
      }
      Eigen::SparseMatrix<double> h(n_vars_, n_vars_);
      h.setFromTriplets(trip.begin(), trip.end());
      if (!analyzed_) {
        solver_.analyzePattern(h);
        analyzed_ = true;
      }
      Eigen::VectorXd diag = h.diagonal();
      for (int i = 0; i < n_vars_; ++i) diag(i) = std::max(diag(i), 1e-9);

      bool accepted = false;
      bool converged = false;
      for (int retry = 0; retry < 10; ++retry) {
        Eigen::SparseMatrix<double> damped = h;
        for (int i = 0; i < n_vars_; ++i) damped.coeffRef(i, i) += lambda * diag(i);
        solver_.factorize(damped);
        if (solver_.info() != Eigen::Success) {
          lambda *= 10;
          continue;
        }
        const Eigen::VectorXd delta = -solver_.solve(g);
        std::vector<Pose2> trial = x;
        for (std::size_t k = 0; k < trial.size(); ++k) {
          const int idx = var_of_slot_[k];
          if (idx < 0) continue;
          auto& p = trial[k];
          p = Pose2(p.x + delta(3 * idx), p.y + delta(3 * idx + 1), p.theta + delta(3 * idx + 2));
        }
        const double next = cost(trial, w);
        const double predicted = -g.dot(delta) - 0.5 * delta.dot(h * delta);
        if (std::isfinite(next) && next < current) {
          const double rel = (current - next) / std::max(current, 1e-300);
          x = std::move(trial);
          current = next;
          lambda = std::max(lambda / 10.0, 1e-12);
          accepted = true;
          converged = rel < cfg_.lm_relative_tolerance || delta.lpNorm<Eigen::Infinity>() < 1e-12;
          break;
        }
        if (!(predicted > 1e-12 * std::max(current, 1e-300)) || current < 1e-300) {
          converged = true;  // stationary to working precision
          break;
        }
        lambda *= 10;
      }
      if (converged) return iterations + 1;
      if (!accepted) {
        if (!std::isfinite(current)) throw SolverDiverged("optimize: cost is not finite");
        std::ostringstream os;
        os << "optimize: cost did not decrease over 10 damped retries (cost " << current << ")";
        throw SolverDiverged(os.str());
      }
    }
    return iterations;
  }

  void set_positions() {
    int i = 0;
    var_of_slot_.clear();
    for (const auto& k : keys_) {
      position_[k] = i++;
      var_of_slot_.push_back(index_.at(k));
    }
    edge_slots_.clear();
    for (const auto& e : graph_.edges()) edge_slots_.emplace_back(position_.at(e.from), position_.at(e.to));
  }

  const std::vector<NodeKey>& keys() const { return keys_; }

 private:
  std::size_t slot(std::size_t edge, bool from) const {
    return static_cast<std::size_t>(from ? edge_slots_[edge].first : edge_slots_[edge].second);
  }

  const PoseGraph& graph_;
  const GncConfig& cfg_;
  std::vector<NodeKey> keys_;
  std::map<NodeKey, int> index_;
  std::map<NodeKey, int> position_;
  std::vector<std::pair<int, int>> edge_slots_;
  std::vector<int> from_, to_;
  std::vector<int> var_of_slot_;
  int n_vars_ = 0;
  bool analyzed_ = false;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

}  // namespace

OptimizationResult optimize(const PoseGraph& graph, const GncConfig& gnc, NodeKey anchor) {
  if (!(gnc.c > 0) || !(gnc.mu_update_factor > 1)) {
    throw std::invalid_argument("optimize: need c > 0 and mu_update_factor > 1");
  }
  if (!graph.has_node(anchor)) throw std::invalid_argument("optimize: anchor is not in the graph");
  const auto comps = graph.components();
  if (comps.size() > 1) {
    std::ostringstream os;
    os << "optimize: pose graph has " << comps.size() << " components:";
    for (const auto& c : comps) {
      os << " [robot " << c.front().robot << " kf " << c.front().keyframe << ", " << c.size() << " nodes]";
    }
    throw DisconnectedGraph(os.str());
  }

  LevenbergMarquardt lm(graph, anchor, gnc);
  lm.set_positions();
  const auto init = initial_guess(graph, anchor);
  std::vector<Pose2> x;
  x.reserve(init.size());
  for (const auto& k : lm.keys()) x.push_back(init.at(k));

  const auto& edges = graph.edges();
  std::vector<double> w(edges.size(), 1.0);
  OptimizationResult result;
  result.lm_iterations += lm.solve(x, w);
  result.iterations = 1;

  auto loop_residual_sq = [&](std::size_t i) {
    const auto& e = edges[i];
    const auto& keys = lm.keys();
    const auto pos_from = std::lower_bound(keys.begin(), keys.end(), e.from) - keys.begin();
    const auto pos_to = std::lower_bound(keys.begin(), keys.end(), e.to) - keys.begin();
    const Eigen::Vector3d r = edge_residual(x[static_cast<std::size_t>(pos_from)], x[static_cast<std::size_t>(pos_to)], e.measurement);
    return r.dot(e.information * r);
  };

  std::vector<std::size_t> loops;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].is_loop()) loops.push_back(i);
  }

  if (gnc.robust && !loops.empty()) {
    const double c2 = gnc.c * gnc.c;
    double r_max_sq = 0.0;
    for (auto i : loops) r_max_sq = std::max(r_max_sq, loop_residual_sq(i));
    const double denom = 2.0 * r_max_sq - c2;
    if (denom > 0) {
      double mu = c2 / denom;
      for (int outer = 0; outer < gnc.max_outer_iterations; ++outer) {
        bool binary = true;
        for (auto i : loops) {
          w[i] = tls_weight(loop_residual_sq(i), gnc.c, mu);
          if (std::min(w[i], 1.0 - w[i]) > gnc.weight_tolerance) binary = false;
        }
        result.lm_iterations += lm.solve(x, w);
        ++result.iterations;
        if (binary) break;
        mu *= gnc.mu_update_factor;
      }
    }
  }

  for (std::size_t k = 0; k < x.size(); ++k) result.poses[lm.keys()[k]] = x[k];
  for (auto i : loops) result.loop_weights[i] = w[i];
  result.final_cost = lm.cost(x, w);
  return result;
}

OptimizationResult optimize(const PoseGraph& graph, const GncConfig& gnc) {
  if (graph.nodes().empty()) return {};
  return optimize(graph, gnc, graph.nodes().begin()->first);
}

}  // namespace cslam::backend
