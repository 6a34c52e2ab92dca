#include "cslam/comms/message.hpp"

namespace cslam::comms {

const char* to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::DescriptorBatch: return "descriptor_batch";
    case MessageKind::ScanRequest: return "scan_request";
    case MessageKind::ScanPayload: return "scan_payload";
    case MessageKind::GraphDelta: return "graph_delta";
    case MessageKind::EstimateBroadcast: return "estimate_broadcast";
    case MessageKind::Control: return "control";
  }
  return "unknown";
}

const char* to_string(Category category) {
  switch (category) {
    case Category::FrontEnd: return "front_end";
    case Category::BackEnd: return "back_end";
    case Category::Control: return "control";
  }
  return "unknown";
}

Category category_of(MessageKind kind) {
  switch (kind) {
    case MessageKind::DescriptorBatch:
    case MessageKind::ScanRequest:
    case MessageKind::ScanPayload: return Category::FrontEnd;
    case MessageKind::GraphDelta:
    case MessageKind::EstimateBroadcast: return Category::BackEnd;
    case MessageKind::Control: return Category::Control;
  }
  return Category::Control;
}

MessageKind kind_of(const Payload& payload) {
  return static_cast<MessageKind>(payload.index());
}

std::size_t payload_size(const Payload& payload) {
  struct Visitor {
    std::size_t operator()(const DescriptorBatch& b) const {
      std::size_t n = 0;
      for (const auto& d : b.descriptors) n += 16 + 4 * static_cast<std::size_t>(d.rings() * d.sectors());
      return n;
    }
    std::size_t operator()(const ScanRequest&) const { return 32; }
    std::size_t operator()(const ScanPayload& s) const { return 24 + 8 * s.scan.points.size(); }
    std::size_t operator()(const backend::GraphDelta& d) const { return d.size_bytes(); }
    std::size_t operator()(const EstimateBroadcast& e) const { return 40 * e.poses.size(); }
    std::size_t operator()(const ControlPayload&) const { return 16; }
  };
  return std::visit(Visitor{}, payload);
}

Message make_message(RobotId src, RobotId dst, Payload payload, double now) {
  Message m;
  m.src = src;
  m.dst = dst;
  m.kind = kind_of(payload);
  m.size_bytes = payload_size(payload);
  m.payload = std::move(payload);
  m.enqueued_at = now;
  return m;
}

}  // namespace cslam::comms
