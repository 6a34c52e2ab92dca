#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <utility>
#include <vector>

#include "cslam/comms/link.hpp"
#include "cslam/comms/message.hpp"

namespace cslam::comms {

using Pair = std::pair<RobotId, RobotId>;

struct TrafficStats {
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_delivered = 0;
  std::uint64_t bytes_dropped = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_delivered = 0;
  std::uint64_t messages_dropped = 0;

  TrafficStats& operator+=(const TrafficStats& o);
  std::uint64_t bytes_in_flight() const { return bytes_sent - bytes_delivered - bytes_dropped; }
};

struct SeriesPoint {
  double t = 0.0;
  /// Cumulative bytes the links could have carried, summed over pairs.
  double capacity = 0.0;
  /// Cumulative bytes handed to the transport.
  double demand = 0.0;
  double delivered = 0.0;
};

struct CommReport {
  std::map<Pair, std::map<Category, TrafficStats>> traffic;
  std::map<Pair, double> capacity_bytes;
  std::vector<SeriesPoint> series;

  TrafficStats total(Category category) const;
  TrafficStats total() const;
  double total_capacity() const;
};

/// Delivered message with its arrival time.
struct Delivery {
  Message message;
  double delivered_at = 0.0;
};

/// Per ordered pair FIFO links with bandwidth gating and store-and-forward
/// latency. Losing the link while a message is partially transmitted drops
/// it; the sender learns about it through take_dropped().
class Transport {
 public:
  /// Queues a message. Throws std::invalid_argument when src == dst.
  void send(Message msg);

  /// Advances time by dt under `links`; pairs missing from `links` are down.
  /// Returns messages whose delivery time falls in this step, ordered by
  /// delivery time.
  std::vector<Delivery> step(double dt, const LinkMap& links);

  /// Messages dropped since the last call, in drop order.
  std::vector<Message> take_dropped();

  double now() const { return now_; }
  std::size_t queued(const Pair& pair) const;
  /// Bytes of messages not yet delivered nor dropped for the pair and category.
  std::uint64_t bytes_in_flight(const Pair& pair, Category category) const;
  const CommReport& report() const { return report_; }
  void set_record_series(bool on) { record_series_ = on; }

 private:
  struct Queued {
    Message msg;
    double remaining = 0.0;
  };
  struct Pending {
    double deliver_at = 0.0;
    Message msg;
  };

  double now_ = 0.0;
  std::uint64_t next_id_ = 1;
  std::map<Pair, std::deque<Queued>> queues_;
  std::map<Pair, double> last_delivery_;
  std::vector<Pending> pending_;
  std::vector<Message> dropped_;
  CommReport report_;
  double demand_ = 0.0;
  double capacity_ = 0.0;
  double delivered_ = 0.0;
  bool record_series_ = true;
};

}  // namespace cslam::comms
