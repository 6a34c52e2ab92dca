#include "cslam/comms/transport.hpp"

#include <algorithm>
#include <stdexcept>

namespace cslam::comms {

TrafficStats& TrafficStats::operator+=(const TrafficStats& o) {
  bytes_sent += o.bytes_sent;
  bytes_delivered += o.bytes_delivered;
  bytes_dropped += o.bytes_dropped;
  messages_sent += o.messages_sent;
  messages_delivered += o.messages_delivered;
  messages_dropped += o.messages_dropped;
  return *this;
}

TrafficStats CommReport::total(Category category) const {
  TrafficStats out;
  for (const auto& [pair, cats] : traffic) {
    const auto it = cats.find(category);
    if (it != cats.end()) out += it->second;
  }
  return out;
}

TrafficStats CommReport::total() const {
  TrafficStats out;
  for (const auto& [pair, cats] : traffic) {
    for (const auto& [c, s] : cats) out += s;
  }
  return out;
}

double CommReport::total_capacity() const {
  double sum = 0.0;
  for (const auto& [pair, c] : capacity_bytes) sum += c;
  return sum;
}

void Transport::send(Message msg) {
  if (msg.src == msg.dst) throw std::invalid_argument("send: src == dst");
  msg.id = next_id_++;
  auto& stats = report_.traffic[{msg.src, msg.dst}][category_of(msg.kind)];
  stats.bytes_sent += msg.size_bytes;
  ++stats.messages_sent;
  demand_ += static_cast<double>(msg.size_bytes);
  const double size = static_cast<double>(msg.size_bytes);
  queues_[{msg.src, msg.dst}].push_back({std::move(msg), size});
}

std::vector<Delivery> Transport::step(double dt, const LinkMap& links) {
  if (!(dt > 0)) throw std::invalid_argument("step: dt must be > 0");
  const double t0 = now_;
  const double t1 = now_ + dt;

  for (const auto& [pair, state] : links) {
    if (!state.connected) continue;
    const double cap = state.throughput_mbps * 125000.0 * dt;
    report_.capacity_bytes[pair] += cap;
    capacity_ += cap;
  }

  for (auto& [pair, queue] : queues_) {
    const auto lit = links.find(pair);
    const bool up = lit != links.end() && lit->second.connected;
    if (!up) {
      if (!queue.empty() && queue.front().remaining < static_cast<double>(queue.front().msg.size_bytes)) {
        Message m = std::move(queue.front().msg);
        queue.pop_front();
        auto& stats = report_.traffic[pair][category_of(m.kind)];
        stats.bytes_dropped += m.size_bytes;
        ++stats.messages_dropped;
        dropped_.push_back(std::move(m));
      }
      continue;
    }
    const double rate = lit->second.throughput_mbps * 125000.0;
    const double budget = rate * dt;
    double used = 0.0;
    while (!queue.empty()) {
      auto& head = queue.front();
      if (used + head.remaining > budget) {
        head.remaining -= budget - used;
        break;
      }
      used += head.remaining;
      const double t_done = t0 + used / rate;
      double& last = last_delivery_[pair];
      const double at = std::max(t_done + lit->second.latency_ms / 1000.0, last);
      last = at;
      pending_.push_back({at, std::move(head.msg)});
      queue.pop_front();
    }
  }

  std::vector<Pending> ready;
  auto split = std::stable_partition(pending_.begin(), pending_.end(),
                                     [&](const Pending& p) { return p.deliver_at > t1; });
  std::move(split, pending_.end(), std::back_inserter(ready));
  pending_.erase(split, pending_.end());
  std::stable_sort(ready.begin(), ready.end(), [](const Pending& a, const Pending& b) {
    return a.deliver_at != b.deliver_at ? a.deliver_at < b.deliver_at : a.msg.id < b.msg.id;
  });
  std::vector<Delivery> out;
  out.reserve(ready.size());
  for (auto& p : ready) {
    auto& stats = report_.traffic[{p.msg.src, p.msg.dst}][category_of(p.msg.kind)];
    stats.bytes_delivered += p.msg.size_bytes;
    ++stats.messages_delivered;
    delivered_ += static_cast<double>(p.msg.size_bytes);
    out.push_back({std::move(p.msg), p.deliver_at});
  }

  now_ = t1;
  if (record_series_) report_.series.push_back({now_, capacity_, demand_, delivered_});
  return out;
}

std::vector<Message> Transport::take_dropped() {
  std::vector<Message> out;
  out.swap(dropped_);
  return out;
}

std::size_t Transport::queued(const Pair& pair) const {
  const auto it = queues_.find(pair);
  return it == queues_.end() ? 0 : it->second.size();
}

std::uint64_t Transport::bytes_in_flight(const Pair& pair, Category category) const {
  std::uint64_t n = 0;
  const auto it = queues_.find(pair);
  if (it != queues_.end()) {
    for (const auto& q : it->second) {
      if (category_of(q.msg.kind) == category) n += q.msg.size_bytes;
    }
  }
  for (const auto& p : pending_) {
    if (p.msg.src == pair.first && p.msg.dst == pair.second && category_of(p.msg.kind) == category) {
      n += p.msg.size_bytes;
    }
  }
  return n;
}

}  // namespace cslam::comms
