#pragma once

#include <cstdint>
#include <map>
#include <variant>
#include <vector>

#include "cslam/backend/pose_graph.hpp"
#include "cslam/frontend/descriptor.hpp"
#include "cslam/world.hpp"

namespace cslam::comms {

enum class MessageKind { DescriptorBatch, ScanRequest, ScanPayload, GraphDelta, EstimateBroadcast, Control };
enum class Category { FrontEnd, BackEnd, Control };

const char* to_string(MessageKind kind);
const char* to_string(Category category);
Category category_of(MessageKind kind);

struct DescriptorBatch {
  std::vector<frontend::ScanDescriptor> descriptors;
};

/// Asks the owner of `wanted` for its scan to register against `local`.
struct ScanRequest {
  frontend::KeyframeRef wanted;
  frontend::KeyframeRef local;
};

struct ScanPayload {
  Scan scan;
  frontend::KeyframeRef requester;
};

/// Estimates computed by `optimizer`, plus the version of the graph it used.
struct EstimateBroadcast {
  RobotId optimizer = 0;
  std::map<backend::NodeKey, Pose2> poses;
};

/// Heartbeat carrying the sender's graph size for election.
struct ControlPayload {
  std::size_t graph_size = 0;
};

using Payload = std::variant<DescriptorBatch, ScanRequest, ScanPayload, backend::GraphDelta, EstimateBroadcast,
                             ControlPayload>;

MessageKind kind_of(const Payload& payload);

/// Byte-size model: descriptors 16 + 4*Nr*Ns each, scans 24 + 8 per point,
/// requests 32, graph deltas 64 per edge + 40 per node, estimates 40 per
/// pose, control 16.
std::size_t payload_size(const Payload& payload);

struct Message {
  RobotId src = 0;
  RobotId dst = 0;
  MessageKind kind = MessageKind::Control;
  Payload payload;
  std::size_t size_bytes = 0;
  double enqueued_at = 0.0;
  /// Transport-assigned sequence number, unique per transport.
  std::uint64_t id = 0;
};

Message make_message(RobotId src, RobotId dst, Payload payload, double now);

}  // namespace cslam::comms
