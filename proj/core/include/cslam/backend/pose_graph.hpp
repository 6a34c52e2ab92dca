#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include <Eigen/Core>

#include "cslam/pose2.hpp"
#include "cslam/world.hpp"

namespace cslam::backend {

struct NodeKey {
  RobotId robot = 0;
  int keyframe = 0;
  auto operator<=>(const NodeKey&) const = default;
};

/// g2o-style integer id: robot * 10^6 + keyframe.
inline std::int64_t encode_node_id(NodeKey k) {
  return static_cast<std::int64_t>(k.robot) * 1'000'000 + k.keyframe;
}
inline NodeKey decode_node_id(std::int64_t id) {
  return {static_cast<RobotId>(id / 1'000'000), static_cast<int>(id % 1'000'000)};
}

enum class EdgeKind { Odometry, InterRobotLoop, IntraRobotLoop };

const char* to_string(EdgeKind kind);

struct Edge {
  EdgeKind kind = EdgeKind::Odometry;
  NodeKey from;
  NodeKey to;
  /// Pose of `to` expressed in the frame of `from`.
  Pose2 measurement;
  Eigen::Matrix3d information = Eigen::Matrix3d::Identity();
  /// Robot that created the edge and its per-robot sequence number (1-based).
  RobotId owner = 0;
  std::uint64_t seq = 0;

  bool is_loop() const { return kind != EdgeKind::Odometry; }
  bool same_constraint(const Edge& o) const {
    return kind == o.kind && from == o.from && to == o.to && measurement == o.measurement;
  }
};

/// Per robot: highest keyframe of its odometry chain known here, and the
/// highest contiguous sequence number of edges it owns known here.
struct VersionEntry {
  int keyframe = -1;
  std::uint64_t edge_seq = 0;
  bool operator==(const VersionEntry&) const = default;
};
using VersionVector = std::map<RobotId, VersionEntry>;

/// Nodes and edges exchanged between robots. Node poses are the sender's
/// estimates and only seed nodes the receiver does not have yet.
struct GraphDelta {
  std::map<NodeKey, Pose2> nodes;
  std::vector<Edge> edges;
  VersionVector sender_version;
  std::size_t sender_node_count = 0;

  bool empty() const { return nodes.empty() && edges.empty(); }
  /// 64 bytes per edge plus 40 bytes per node.
  std::size_t size_bytes() const { return 64 * edges.size() + 40 * nodes.size(); }
};

class PoseGraph {
 public:
  /// Adds a node if absent; returns false when it already exists.
  bool add_node(NodeKey key, const Pose2& estimate);

  /// Appends an edge. Missing endpoints are created from the other endpoint
  /// and the measurement. Returns false for an exact duplicate. Throws
  /// std::invalid_argument for a non-SPD information matrix, an edge with no
  /// known endpoint, or an edge that breaks the kind's topology.
  bool insert_measurement(Edge edge);

  /// Creates an edge owned by `owner` with the next free sequence number.
  bool insert_own(Edge edge, RobotId owner);

  GraphDelta delta_for(const VersionVector& peer) const;
  void apply_delta(const GraphDelta& delta);

  const std::map<NodeKey, Pose2>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const VersionVector& version() const { return version_; }
  std::size_t node_count() const { return nodes_.size(); }
  bool has_node(NodeKey k) const { return nodes_.count(k) > 0; }
  std::optional<Pose2> estimate(NodeKey k) const;
  void set_estimate(NodeKey k, const Pose2& p);

  std::vector<NodeKey> nodes_of(RobotId robot) const;
  std::set<RobotId> robots() const;

  /// Connected components, each sorted; components ordered by first key.
  std::vector<std::vector<NodeKey>> components() const;
  /// Induced subgraph on `keep`; version bookkeeping is not carried over.
  PoseGraph subgraph(const std::set<NodeKey>& keep) const;

 private:
  void mark_known(RobotId owner, std::uint64_t seq);

  std::map<NodeKey, Pose2> nodes_;
  std::vector<Edge> edges_;
  VersionVector version_;
  std::map<RobotId, std::set<std::uint64_t>> pending_seqs_;
  std::map<RobotId, std::uint64_t> next_seq_;
};

GraphDelta graph_delta(const PoseGraph& graph, const VersionVector& peer);

/// True when `m` is symmetric and Cholesky succeeds.
bool is_spd(const Eigen::Matrix3d& m);

}  // namespace cslam::backend
