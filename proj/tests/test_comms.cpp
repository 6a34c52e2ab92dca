#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "cslam/comms/link.hpp"
#include "cslam/comms/message.hpp"
#include "cslam/comms/transport.hpp"
#include "cslam/error.hpp"
#include "cslam/frontend/candidates.hpp"

using namespace cslam;
using namespace cslam::comms;

namespace {

Message raw(RobotId src, RobotId dst, std::size_t bytes, MessageKind kind = MessageKind::Control) {
  Message m;
  m.src = src;
  m.dst = dst;
  m.kind = kind;
  m.payload = ControlPayload{};
  m.size_bytes = bytes;
  return m;
}

LinkMap up(RobotId a, RobotId b, double mbps, double latency_ms) {
  return {{{a, b}, {true, latency_ms, mbps}}};
}

std::vector<Delivery> run_for(Transport& t, int steps, const LinkMap& links, double dt = 0.1) {
  std::vector<Delivery> out;
  for (int i = 0; i < steps; ++i) {
    for (auto& d : t.step(dt, links)) out.push_back(std::move(d));
  }
  return out;
}

frontend::ScanDescriptor descriptor(RobotId robot, int kf, double fill) {
  Eigen::MatrixXd cells = Eigen::MatrixXd::Zero(4, 6);
  cells(kf % 4, kf % 6) = fill;
  return frontend::ScanDescriptor(cells, {robot, kf});
}

}  // namespace

TEST(LinkModel, MidpointInterpolates) {
  const LinkState s = link_state_model(20.0);
  EXPECT_TRUE(s.connected);
  EXPECT_DOUBLE_EQ(s.latency_ms, 250.0);
  EXPECT_DOUBLE_EQ(s.throughput_mbps, 12.5);
}

TEST(LinkModel, EndpointsAndRange) {
  EXPECT_EQ(link_state_model(0.0), (LinkState{true, 100.0, 20.0}));
  EXPECT_FALSE(link_state_model(40.0).connected);
  EXPECT_FALSE(link_state_model(75.0).connected);
  EXPECT_TRUE(link_state_model(39.999).connected);
  EXPECT_THROW(link_state_model(-1.0), std::invalid_argument);
}

TEST(Trace, LeftClosedIntervalsAndMissingRows) {
  std::istringstream in(
      "t_sec,src,dst,latency_ms,throughput_mbps,connected\n"
      "0,1,2,100,5,1\n"
      "1,1,2,300,15,1\n"
      "2,1,2,300,15,0\n"
      "2,2,1,150,8,1\n");
  const Trace t = Trace::parse(in);
  EXPECT_EQ(t.start(), 0);
  EXPECT_EQ(t.end(), 3);
  EXPECT_EQ(t.at(1, 2, 0.0), (LinkState{true, 100, 5}));
  EXPECT_EQ(t.at(1, 2, 0.999), (LinkState{true, 100, 5}));
  EXPECT_EQ(t.at(1, 2, 1.0), (LinkState{true, 300, 15}));
  EXPECT_FALSE(t.at(1, 2, 2.5).connected);
  EXPECT_FALSE(t.at(2, 1, 0.5).connected);  // no row
  EXPECT_TRUE(t.at(2, 1, 2.0).connected);
  EXPECT_EQ(link_state_trace(t, {2, 1}, 2.0), t.at(2, 1, 2.0));
  EXPECT_EQ(t.robots(), (std::set<RobotId>{1, 2}));
}

TEST(Trace, OutOfRangeIsExhausted) {
  std::istringstream in("t_sec,src,dst,latency_ms,throughput_mbps,connected\n5,1,2,100,5,1\n");
  const Trace t = Trace::parse(in);
  EXPECT_THROW(t.at(1, 2, 4.99), TraceExhausted);
  EXPECT_THROW(t.at(1, 2, 6.0), TraceExhausted);
  EXPECT_NO_THROW(t.at(1, 2, 5.5));
}

TEST(Trace, RejectsMalformedInput) {
  const auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return Trace::parse(in);
  };
  const std::string h = "t_sec,src,dst,latency_ms,throughput_mbps,connected\n";
  EXPECT_THROW(parse(""), std::invalid_argument);
  EXPECT_THROW(parse("t,src,dst\n0,1,2\n"), std::invalid_argument);
  EXPECT_THROW(parse(h + "0,1,2,100,5\n"), std::invalid_argument);
  EXPECT_THROW(parse(h + "0,1,2,100,5,2\n"), std::invalid_argument);
  EXPECT_THROW(parse(h + "0,1,1,100,5,1\n"), std::invalid_argument);
  EXPECT_THROW(parse(h + "0,1,2,100,5,1\n0,1,2,100,5,1\n"), std::invalid_argument);
  EXPECT_THROW(parse(h + "0,1,2,0,5,1\n"), std::invalid_argument);
  EXPECT_THROW(parse(h), std::invalid_argument);
  EXPECT_NO_THROW(parse(h + "0,1,2,100,5,1\r\n\n"));
}

TEST(Neighbors, Rules) {
  EXPECT_TRUE(neighbors({}, 1).empty());
  LinkMap down = {{{1, 2}, {}}, {{2, 1}, {}}};
  EXPECT_TRUE(neighbors(down, 1).empty());
  LinkMap one_way = {{{1, 2}, {true, 100, 10}}, {{2, 1}, {}}};
  EXPECT_TRUE(neighbors(one_way, 1).empty());
  EXPECT_TRUE(neighbors(one_way, 2).empty());
}

TEST(Neighbors, ThreeCloseRobotsUnderDistanceModel) {
  const std::map<RobotId, Eigen::Vector2d> pos = {{1, {0, 0}}, {2, {6, 0}}, {3, {3, 5}}};
  LinkMap links;
  for (const auto& [i, pi] : pos) {
    for (const auto& [j, pj] : pos) {
      if (i != j) links[{i, j}] = link_state_model((pi - pj).norm());
    }
  }
  for (RobotId r : {1, 2, 3}) EXPECT_EQ(neighbors(links, r).size(), 2u);
}

TEST(Message, SizeModel) {
  using frontend::ScanDescriptor;
  DescriptorBatch batch;
  batch.descriptors = {descriptor(1, 0, 1.0), descriptor(1, 1, 1.0)};
  EXPECT_EQ(payload_size(batch), 2u * (16 + 4 * 24));
  ScanPayload sp;
  sp.scan.points.resize(100);
  EXPECT_EQ(payload_size(sp), 24u + 800u);
  EXPECT_EQ(payload_size(ScanRequest{}), 32u);
  backend::GraphDelta d;
  d.nodes[{1, 0}] = Pose2();
  d.edges.resize(3);
  EXPECT_EQ(payload_size(d), 3u * 64 + 40);
  EstimateBroadcast e;
  e.poses[{1, 0}] = Pose2();
  e.poses[{1, 1}] = Pose2();
  EXPECT_EQ(payload_size(e), 80u);
  EXPECT_EQ(payload_size(ControlPayload{}), 16u);
}

TEST(Message, Categories) {
  EXPECT_EQ(category_of(MessageKind::DescriptorBatch), Category::FrontEnd);
  EXPECT_EQ(category_of(MessageKind::ScanRequest), Category::FrontEnd);
  EXPECT_EQ(category_of(MessageKind::ScanPayload), Category::FrontEnd);
  EXPECT_EQ(category_of(MessageKind::GraphDelta), Category::BackEnd);
  EXPECT_EQ(category_of(MessageKind::EstimateBroadcast), Category::BackEnd);
  EXPECT_EQ(category_of(MessageKind::Control), Category::Control);
  const Message m = make_message(1, 2, ScanRequest{}, 3.5);
  EXPECT_EQ(m.kind, MessageKind::ScanRequest);
  EXPECT_EQ(m.size_bytes, 32u);
  EXPECT_EQ(m.enqueued_at, 3.5);
}

TEST(Transport, OneMegabyteAtEightMbps) {
  Transport t;
  t.send(raw(1, 2, 1'000'000));
  const auto d = run_for(t, 20, up(1, 2, 8.0, 100.0));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NEAR(d[0].delivered_at, 1.1, 1e-9);
}

TEST(Transport, FifoWithoutInterleaving) {
  Transport t;
  t.send(raw(1, 2, 500'000));
  t.send(raw(1, 2, 500'000));
  const auto d = run_for(t, 20, up(1, 2, 8.0, 100.0));
  ASSERT_EQ(d.size(), 2u);
  EXPECT_NEAR(d[0].delivered_at, 0.6, 1e-9);
  EXPECT_NEAR(d[1].delivered_at - d[0].delivered_at, 0.5, 1e-9);
  EXPECT_LT(d[0].message.id, d[1].message.id);
}

TEST(Transport, DisconnectMidTransmissionNeedsFullResend) {
  Transport t;
  t.send(raw(1, 2, 1'000'000));
  EXPECT_TRUE(run_for(t, 5, up(1, 2, 8.0, 100.0)).empty());  // 50% sent
  EXPECT_TRUE(run_for(t, 3, {}).empty());
  auto dropped = t.take_dropped();
  ASSERT_EQ(dropped.size(), 1u);
  EXPECT_EQ(t.queued({1, 2}), 0u);
  const double resend_at = t.now();
  t.send(std::move(dropped[0]));
  const auto d = run_for(t, 20, up(1, 2, 8.0, 100.0));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NEAR(d[0].delivered_at - resend_at, 1.1, 1e-9);
  const auto s = t.report().total(Category::Control);
  EXPECT_EQ(s.bytes_dropped, 1'000'000u);
  EXPECT_EQ(s.bytes_delivered, 1'000'000u);
  EXPECT_EQ(s.bytes_sent, 2'000'000u);
}

TEST(Transport, QueuedWhileDisconnectedIsKept) {
  Transport t;
  t.send(raw(1, 2, 1000));
  run_for(t, 10, {});
  EXPECT_TRUE(t.take_dropped().empty());
  EXPECT_EQ(t.queued({1, 2}), 1u);
  EXPECT_EQ(run_for(t, 5, up(1, 2, 8.0, 100.0)).size(), 1u);
}

TEST(Transport, RejectsSelfSendAndBadStep) {
  Transport t;
  EXPECT_THROW(t.send(raw(1, 1, 10)), std::invalid_argument);
  EXPECT_THROW(t.step(0.0, {}), std::invalid_argument);
}

TEST(Transport, RandomizedInvariants) {
  Transport t;
  Rng rng(2024);
  const std::vector<RobotId> ids = {1, 2, 3};
  const std::vector<MessageKind> kinds = {MessageKind::DescriptorBatch, MessageKind::ScanPayload,
                                          MessageKind::GraphDelta, MessageKind::Control};
  const double dt = 0.1;
  const int steps = 10'000;
  LinkMap links;
  for (RobotId a : ids) {
    for (RobotId b : ids) {
      if (a != b) links[{a, b}] = {};
    }
  }
  std::map<Pair, std::uint64_t> last_id;
  std::map<Pair, std::vector<double>> delivered_per_step, capacity_per_step;
  std::size_t max_msg = 0;
  for (int k = 0; k < steps; ++k) {
    for (auto& [pair, s] : links) {
      if (rng.bernoulli(0.05)) {
        s = rng.bernoulli(0.6) ? LinkState{true, rng.uniform(100, 400), rng.uniform(5, 20)} : LinkState{};
      }
    }
    const int sends = static_cast<int>(rng.index(3));
    for (int q = 0; q < sends; ++q) {
      const RobotId a = ids[rng.index(3)];
      RobotId b = ids[rng.index(3)];
      if (a == b) b = a % 3 + 1;
      const std::size_t bytes = 16 + rng.index(400'000);
      max_msg = std::max(max_msg, bytes);
      t.send(raw(a, b, bytes, kinds[rng.index(kinds.size())]));
    }
    std::map<Pair, double> delivered_now;
    for (const auto& d : t.step(dt, links)) {
      const Pair p{d.message.src, d.message.dst};
      ASSERT_GT(d.message.id, last_id[p]) << "FIFO violated at step " << k;
      last_id[p] = d.message.id;
      ASSERT_LE(d.delivered_at, t.now() + 1e-12);
      delivered_now[p] += static_cast<double>(d.message.size_bytes);
    }
    t.take_dropped();
    for (const auto& [p, s] : links) {
      delivered_per_step[p].push_back(delivered_now[p]);
      capacity_per_step[p].push_back(s.connected ? s.throughput_mbps * 125000.0 * dt : 0.0);
    }
    for (const auto& [pair, cats] : t.report().traffic) {
      for (const auto& [cat, st] : cats) {
        ASSERT_EQ(st.bytes_delivered + t.bytes_in_flight(pair, cat) + st.bytes_dropped, st.bytes_sent)
            << "conservation violated at step " << k;
      }
    }
  }
  // Capacity bound over sliding windows; capacity counted from 5 steps earlier
  // to cover the largest latency, plus one message of slack.
  const int window = 100;
  for (const auto& [p, del] : delivered_per_step) {
    const auto& cap = capacity_per_step.at(p);
    double total_del = 0, total_cap = 0;
    for (int k = 0; k < steps; ++k) {
      total_del += del[static_cast<std::size_t>(k)];
      total_cap += cap[static_cast<std::size_t>(k)];
      ASSERT_LE(total_del, total_cap + 1e-6);
      if (k + 1 < window) continue;
      double d = 0, c = 0;
      for (int m = k + 1 - window; m <= k; ++m) d += del[static_cast<std::size_t>(m)];
      for (int m = std::max(0, k + 1 - window - 5); m <= k; ++m) c += cap[static_cast<std::size_t>(m)];
      ASSERT_LE(d, c + static_cast<double>(max_msg));
    }
    EXPECT_NEAR(t.report().capacity_bytes.count(p) ? t.report().capacity_bytes.at(p) : 0.0, total_cap, 1e-3);
  }
  const auto& series = t.report().series;
  ASSERT_EQ(series.size(), static_cast<std::size_t>(steps));
  for (std::size_t k = 1; k < series.size(); ++k) {
    EXPECT_GE(series[k].capacity, series[k - 1].capacity);
    EXPECT_GE(series[k].demand, series[k - 1].demand);
    EXPECT_GE(series[k].delivered, series[k - 1].delivered);
    EXPECT_LE(series[k].delivered, series[k].demand);
  }
  EXPECT_GT(t.report().total().messages_delivered, 1000u);
  EXPECT_GT(t.report().total().messages_dropped, 10u);
}

TEST(Transport, FixtureTraceCapacityMatchesHandIntegral) {
  const std::string path = std::string(CSLAM_SOURCE_DIR) + "/fixtures/trace_3robots.csv";
  // Integral straight from the CSV: throughput [Mbps] x 1 s / 8 per connected row.
  std::map<Pair, double> expected;
  {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ls(line);
      long long ts;
      int src, dst, connected;
      double lat, mbps;
      ls >> ts >> src >> dst >> lat >> mbps >> connected;
      if (connected) expected[{src, dst}] += mbps * 1e6 / 8;
    }
  }
  ASSERT_EQ(expected.size(), 6u);
  for (const auto& [p, v] : expected) EXPECT_EQ(v, 75e6);

  const Trace trace = Trace::load(path);
  Transport t;
  for (int k = 0; k < 600; ++k) {
    LinkMap links;
    for (RobotId a : {1, 2, 3}) {
      for (RobotId b : {1, 2, 3}) {
        if (a != b) links[{a, b}] = trace.at(a, b, 0.1 * k);
      }
    }
    t.step(0.1, links);
  }
  for (const auto& [p, v] : expected) EXPECT_EQ(t.report().capacity_bytes.at(p), v);
  EXPECT_EQ(t.report().total_capacity(), 450e6);
}

TEST(DescriptorSync, ResyncAfterDropReemitsSameBatch) {
  frontend::DescriptorStore store;
  for (int k = 0; k < 200; ++k) store.emplace(frontend::KeyframeRef{1, k}, descriptor(1, k, 1.0 + k));
  const std::set<frontend::KeyframeRef> peer_known = {{1, 0}, {1, 1}};

  const Message first = frontend::sync_descriptors(store, peer_known, 1, 2, 0.0);
  ASSERT_EQ(std::get<DescriptorBatch>(first.payload).descriptors.size(), 198u);
  Transport t;
  t.send(first);
  run_for(t, 1, up(1, 2, 0.1, 100.0));
  run_for(t, 1, {});
  const auto dropped = t.take_dropped();
  ASSERT_EQ(dropped.size(), 1u);

  const Message again = frontend::sync_descriptors(store, peer_known, 1, 2, t.now());
  const auto& a = std::get<DescriptorBatch>(dropped[0].payload).descriptors;
  const auto& b = std::get<DescriptorBatch>(again.payload).descriptors;
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].ref(), b[i].ref());
    EXPECT_EQ(a[i].cells(), b[i].cells());
  }
  EXPECT_EQ(again.size_bytes, dropped[0].size_bytes);
}

TEST(DescriptorSync, EmptyAndFullBatches) {
  frontend::DescriptorStore store;
  std::set<frontend::KeyframeRef> all;
  for (int k = 0; k < 5; ++k) {
    store.emplace(frontend::KeyframeRef{1, k}, descriptor(1, k, 1.0));
    all.insert({1, k});
  }
  EXPECT_TRUE(frontend::missing_descriptors(store, all).descriptors.empty());
  EXPECT_EQ(frontend::missing_descriptors(store, {}).descriptors.size(), store.size());
}
