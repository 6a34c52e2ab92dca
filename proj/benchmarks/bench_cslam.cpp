#include <benchmark/benchmark.h>

#include "cslam/backend/optimizer.hpp"
#include "cslam/comms/transport.hpp"
#include "cslam/frontend/descriptor.hpp"
#include "cslam/frontend/prioritize.hpp"
#include "cslam/frontend/registration.hpp"
#include "cslam/sim/mission.hpp"

using namespace cslam;

namespace {

Scan noiseless_scan(const World& world, const Pose2& pose) {
  RobotProfile p;
  p.odom_trans_sigma = p.odom_rot_sigma = p.scan_range_sigma = p.beam_dropout_prob = 0;
  Rng rng(1);
  return simulate_scan(world, pose, SensorConfig{}, p, rng);
}

backend::Edge edge(backend::EdgeKind kind, backend::NodeKey from, backend::NodeKey to, const Pose2& z) {
  backend::Edge e;
  e.kind = kind;
  e.from = from;
  e.to = to;
  e.measurement = z;
  e.information = Eigen::Matrix3d::Identity() * 100.0;
  return e;
}

/// Three noisy loops of `n` keyframes each, joined by inter-robot loops.
backend::PoseGraph team_graph(int n) {
  backend::PoseGraph g;
  Rng rng(3);
  for (RobotId r = 1; r <= 3; ++r) {
    g.add_node({r, 0}, Pose2(0, 2.0 * r, 0));
    for (int k = 1; k < n; ++k) {
      const Pose2 z(1.0 + rng.normal(0, 0.02), rng.normal(0, 0.02), 2 * 3.14159265 / n + rng.normal(0, 0.01));
      g.insert_own(edge(backend::EdgeKind::Odometry, {r, k - 1}, {r, k}, z), r);
    }
  }
  for (int k = 0; k < n; k += 5) {
    g.insert_own(edge(backend::EdgeKind::InterRobotLoop, {1, k}, {2, k}, Pose2(0, 2, 0)), 2);
    g.insert_own(edge(backend::EdgeKind::InterRobotLoop, {2, k}, {3, k}, Pose2(0, 2, 0)), 3);
  }
  return g;
}

}  // namespace

static void BM_DescriptorSimilarity(benchmark::State& state) {
  const World w = generate_world(WorldConfig{}, 5);
  const auto a = frontend::compute_descriptor(noiseless_scan(w, Pose2(40, 40, 0)), 20, 60, 50.0);
  const auto b = frontend::compute_descriptor(noiseless_scan(w, Pose2(42, 41, 1.0)), 20, 60, 50.0);
  for (auto _ : state) benchmark::DoNotOptimize(frontend::similarity(a, b));
}
BENCHMARK(BM_DescriptorSimilarity);

static void BM_ComputeDescriptor(benchmark::State& state) {
  const World w = generate_world(WorldConfig{}, 5);
  const Scan s = noiseless_scan(w, Pose2(40, 40, 0));
  for (auto _ : state) benchmark::DoNotOptimize(frontend::compute_descriptor(s, 20, 60, 50.0));
}
BENCHMARK(BM_ComputeDescriptor);

static void BM_Registration(benchmark::State& state) {
  const World w = generate_world(WorldConfig{}, 5);
  const Scan a = noiseless_scan(w, Pose2(40, 40, 0));
  const Scan b = noiseless_scan(w, Pose2(41.5, 40.5, 0.4));
  for (auto _ : state) {
    Rng rng(7);
    benchmark::DoNotOptimize(frontend::register_scans(a, b, frontend::RegistrationConfig{}, rng));
  }
}
BENCHMARK(BM_Registration);

static void BM_Prioritize(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const backend::PoseGraph g = team_graph(n);
  std::vector<frontend::CandidateMatch> cands;
  Rng rng(11);
  for (int i = 0; i < 40; ++i) {
    cands.push_back({{1, static_cast<int>(rng.index(static_cast<std::uint64_t>(n)))},
                     {3, static_cast<int>(rng.index(static_cast<std::uint64_t>(n)))},
                     rng.uniform(0.5, 1.0)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(frontend::prioritize(cands, g, frontend::Budget{5}));
}
BENCHMARK(BM_Prioritize)->Arg(20)->Arg(60)->Arg(120);

static void BM_Optimize(benchmark::State& state) {
  const backend::PoseGraph g = team_graph(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(backend::optimize(g, backend::GncConfig{}, {1, 0}));
}
BENCHMARK(BM_Optimize)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_TransportStep(benchmark::State& state) {
  comms::LinkMap links;
  for (RobotId a = 1; a <= 3; ++a) {
    for (RobotId b = 1; b <= 3; ++b) {
      if (a != b) links[{a, b}] = {true, 200.0, 10.0};
    }
  }
  for (auto _ : state) {
    state.PauseTiming();
    comms::Transport t;
    for (int i = 0; i < 100; ++i) {
      comms::Message m;
      m.src = static_cast<RobotId>(1 + i % 3);
      m.dst = static_cast<RobotId>(1 + (i + 1) % 3);
      m.kind = comms::MessageKind::Control;
      m.payload = comms::ControlPayload{};
      m.size_bytes = 5000;
      t.send(std::move(m));
    }
    state.ResumeTiming();
    for (int k = 0; k < 20; ++k) benchmark::DoNotOptimize(t.step(0.1, links));
  }
}
BENCHMARK(BM_TransportStep);

static void BM_Mission(benchmark::State& state) {
  sim::ScenarioConfig c;
  c.duration = 60;
  const auto s = sim::prepare_scenario(c);
  for (auto _ : state) benchmark::DoNotOptimize(sim::run_mission(s));
}
BENCHMARK(BM_Mission)->Unit(benchmark::kMillisecond)->Iterations(3);
BENCHMARK_MAIN();
