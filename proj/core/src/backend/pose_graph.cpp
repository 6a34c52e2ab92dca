#include "cslam/backend/pose_graph.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>

namespace cslam::backend {

const char* to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Odometry: return "odometry";
    case EdgeKind::InterRobotLoop: return "inter_robot_loop";
    case EdgeKind::IntraRobotLoop: return "intra_robot_loop";
  }
  return "unknown";
}

bool is_spd(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) return false;
  if (!m.isApprox(m.transpose(), 1e-12)) return false;
  Eigen::LLT<Eigen::Matrix3d> llt(m);
  return llt.info() == Eigen::Success;
}

bool PoseGraph::add_node(NodeKey key, const Pose2& estimate) {
  const bool inserted = nodes_.emplace(key, estimate).second;
  if (inserted && key.keyframe == 0) {
    auto& v = version_[key.robot];
    v.keyframe = std::max(v.keyframe, 0);
  }
  return inserted;
}

std::optional<Pose2> PoseGraph::estimate(NodeKey k) const {
  auto it = nodes_.find(k);
  if (it == nodes_.end()) return std::nullopt;
  return it->second;
}

void PoseGraph::set_estimate(NodeKey k, const Pose2& p) {
  auto it = nodes_.find(k);
  if (it == nodes_.end()) throw std::out_of_range("set_estimate: unknown node");
  it->second = p;
}

void PoseGraph::mark_known(RobotId owner, std::uint64_t seq) {
  if (seq == 0) return;
  auto& v = version_[owner];
  if (seq <= v.edge_seq) return;
  auto& pending = pending_seqs_[owner];
  pending.insert(seq);
  while (!pending.empty() && *pending.begin() == v.edge_seq + 1) {
    v.edge_seq = *pending.begin();
    pending.erase(pending.begin());
  }
}

bool PoseGraph::insert_measurement(Edge edge) {
  if (!is_spd(edge.information)) {
    throw std::invalid_argument("insert_measurement: information matrix is not symmetric positive definite");
  }
  switch (edge.kind) {
    case EdgeKind::Odometry:
      if (edge.from.robot != edge.to.robot || edge.to.keyframe != edge.from.keyframe + 1) {
        throw std::invalid_argument("insert_measurement: odometry edges must join consecutive keyframes of one robot");
      }
      break;
    case EdgeKind::InterRobotLoop:
      if (edge.from.robot == edge.to.robot) {
        throw std::invalid_argument("insert_measurement: inter-robot loop must join distinct robots");
      }
      break;
    case EdgeKind::IntraRobotLoop:
      if (edge.from.robot != edge.to.robot || edge.from == edge.to) {
        throw std::invalid_argument("insert_measurement: intra-robot loop must join two keyframes of one robot");
      }
      break;
  }
  if (edge.seq > 0) {
    const auto vit = version_.find(edge.owner);
    const bool seq_known = (vit != version_.end() && edge.seq <= vit->second.edge_seq) ||
                           (pending_seqs_.count(edge.owner) && pending_seqs_.at(edge.owner).count(edge.seq));
    if (seq_known) return false;
  }
  const bool duplicate = std::any_of(edges_.begin(), edges_.end(),
                                     [&](const Edge& e) { return e.same_constraint(edge); });
  if (duplicate) {
    mark_known(edge.owner, edge.seq);
    return false;
  }

  const bool has_from = has_node(edge.from);
  const bool has_to = has_node(edge.to);
  if (!has_from && !has_to) {
    throw std::invalid_argument("insert_measurement: neither endpoint is in the graph");
  }
  if (!has_to) nodes_.emplace(edge.to, nodes_.at(edge.from) * edge.measurement);
  if (!has_from) nodes_.emplace(edge.from, nodes_.at(edge.to) * edge.measurement.inverse());

  if (edge.kind == EdgeKind::Odometry) {
    auto& v = version_[edge.to.robot];
    v.keyframe = std::max(v.keyframe, edge.to.keyframe);
  }
  mark_known(edge.owner, edge.seq);
  edges_.push_back(std::move(edge));
  return true;
}

bool PoseGraph::insert_own(Edge edge, RobotId owner) {
  auto& next = next_seq_[owner];
  const auto vit = version_.find(owner);
  const std::uint64_t known = vit == version_.end() ? 0 : vit->second.edge_seq;
  edge.owner = owner;
  edge.seq = std::max(next, known) + 1;
  const bool inserted = insert_measurement(edge);
  if (inserted) next = edge.seq;
  return inserted;
}

GraphDelta PoseGraph::delta_for(const VersionVector& peer) const {
  GraphDelta d;
  d.sender_version = version_;
  d.sender_node_count = nodes_.size();
  auto known_seq = [&](RobotId r) -> std::uint64_t {
    auto it = peer.find(r);
    return it == peer.end() ? 0 : it->second.edge_seq;
  };
  for (const auto& e : edges_) {
    if (e.seq == 0 || e.seq <= known_seq(e.owner)) continue;
    d.edges.push_back(e);
    d.nodes.emplace(e.from, nodes_.at(e.from));
    d.nodes.emplace(e.to, nodes_.at(e.to));
  }
  for (const auto& [key, pose] : nodes_) {
    if (key.keyframe == 0 && !peer.count(key.robot)) d.nodes.emplace(key, pose);
  }
  std::sort(d.edges.begin(), d.edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.owner, a.seq) < std::tie(b.owner, b.seq);
  });
  return d;
}

void PoseGraph::apply_delta(const GraphDelta& delta) {
  for (const auto& [key, pose] : delta.nodes) add_node(key, pose);
  for (const auto& e : delta.edges) insert_measurement(e);
}

GraphDelta graph_delta(const PoseGraph& graph, const VersionVector& peer) {
  return graph.delta_for(peer);
}

std::vector<NodeKey> PoseGraph::nodes_of(RobotId robot) const {
  std::vector<NodeKey> out;
  for (auto it = nodes_.lower_bound({robot, std::numeric_limits<int>::min()});
       it != nodes_.end() && it->first.robot == robot; ++it) {
    out.push_back(it->first);
  }
  return out;
}

std::set<RobotId> PoseGraph::robots() const {
  std::set<RobotId> out;
  for (const auto& [k, p] : nodes_) out.insert(k.robot);
  return out;
}

std::vector<std::vector<NodeKey>> PoseGraph::components() const {
  std::map<NodeKey, std::vector<NodeKey>> adj;
  for (const auto& [k, p] : nodes_) adj[k];
  for (const auto& e : edges_) {
    adj[e.from].push_back(e.to);
    adj[e.to].push_back(e.from);
  }
  std::set<NodeKey> seen;
  std::vector<std::vector<NodeKey>> out;
  for (const auto& [k, nbrs] : adj) {
    if (seen.count(k)) continue;
    std::vector<NodeKey> comp;
    std::queue<NodeKey> q;
    q.push(k);
    seen.insert(k);
    while (!q.empty()) {
      const NodeKey u = q.front();
      q.pop();
      comp.push_back(u);
      for (const auto& v : adj[u]) {
        if (seen.insert(v).second) q.push(v);
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

PoseGraph PoseGraph::subgraph(const std::set<NodeKey>& keep) const {
  PoseGraph g;
  for (const auto& k : keep) {
    auto it = nodes_.find(k);
    if (it != nodes_.end()) g.nodes_.emplace(k, it->second);
  }
  for (const auto& e : edges_) {
    if (keep.count(e.from) && keep.count(e.to)) g.edges_.push_back(e);
  }
  return g;
}

}  // namespace cslam::backend
