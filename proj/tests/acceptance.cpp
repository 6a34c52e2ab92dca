// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cslam/backend/optimizer.hpp"
#include "cslam/backend/residual.hpp"
#include "cslam/comms/transport.hpp"
#include "cslam/eval/report.hpp"
#include "cslam/eval/sweep.hpp"
#include "cslam/frontend/prioritize.hpp"
#include "cslam/frontend/registration.hpp"
#include "cslam/sim/mission.hpp"
#include "oracles.hpp"

using namespace cslam;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string source(const std::string& rel) { return std::string(CSLAM_SOURCE_DIR) + "/" + rel; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

bool non_increasing(const std::vector<std::size_t>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[i - 1]) return false;
  }
  return true;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (auto x : v) s += (s.empty() ? "" : " ") + std::to_string(x);
  return s;
}

eval::SweepGrid grid_file(const std::string& rel) { return eval::parse_grid(eval::read_text(source(rel))); }

/// Shared default-scenario state.
struct Defaults {
  sim::Scenario scenario;
  sim::MissionResult result;
  double seconds = 0;
};

Defaults& defaults() {
  static Defaults d = [] {
    Defaults out;
    const auto t0 = std::chrono::steady_clock::now();
    out.scenario = sim::prepare_scenario(sim::load_scenario(source("configs/default.json")));
    out.result = sim::run_mission(out.scenario);
    out.seconds = seconds_since(t0);
    return out;
  }();
  return d;
}

/// Shared aliased-scenario state: one registration cache for both sweeps.
struct Aliased {
  sim::Scenario scenario;
  sim::RegistrationCache cache;
};

Aliased& aliased() {
  static Aliased a{sim::prepare_scenario(sim::load_scenario(source("configs/aliased.json"))), {}};
  return a;
}

// 1 -------------------------------------------------------------------------

Verdict end_to_end() {
  const auto& d = defaults();
  const double ratio = d.result.ate.mean / d.result.odometry_ate.mean;
  return {ratio <= 0.7 && d.seconds < 120,
          fmt("ATE %.4f m vs odometry %.4f m (ratio %.3f <= 0.7), runtime %.1f s < 120 s", d.result.ate.mean,
              d.result.odometry_ate.mean, ratio, d.seconds)};
}

// 2 -------------------------------------------------------------------------

Verdict noise_ordering() {
  auto cfg = sim::load_scenario(source("configs/default.json"));
  int ok = 0;
  std::string fails;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    cfg.seed = seed;
    const auto r = sim::run_mission(sim::prepare_scenario(cfg));
    const auto& p = r.odometry_ate.per_robot;
    const double r1 = p.at(1).mean, r2 = p.at(2).mean, r3 = p.at(3).mean;
    if (r1 < r3 && r3 <= r2) {
      ++ok;
    } else {
      fails += fmt(" seed %llu (%.3f/%.3f/%.3f)", static_cast<unsigned long long>(seed), r1, r2, r3);
    }
  }
  return {ok >= 9, fmt("R1 < R3 <= R2 in %d/10 seeds (need >= 9)", ok) + (fails.empty() ? "" : ";" + fails)};
}

// 3 -------------------------------------------------------------------------

Verdict similarity_sweep() {
  auto& a = aliased();
  const auto rows = eval::sweep(a.scenario, grid_file("configs/grid_tau.json"), 1, &a.cache);
  std::vector<std::size_t> accepted;
  std::vector<double> tau, incorrect;
  double kb02 = -1, kb08 = -1;
  for (const auto& r : rows) {
    accepted.push_back(r.correct + r.incorrect);
    tau.push_back(r.tau_sim);
    incorrect.push_back(static_cast<double>(r.incorrect));
    if (std::abs(r.tau_sim - 0.2) < 1e-9) kb02 = r.kbytes_per_correct_loop;
    if (std::abs(r.tau_sim - 0.8) < 1e-9) kb08 = r.kbytes_per_correct_loop;
  }
  const double rho = spearman(tau, incorrect);
  const bool mono = non_increasing(accepted);
  return {rows.size() == 9 && mono && rho <= -0.8 && kb08 >= 0 && kb08 < kb02,
          fmt("accepted loops over tau 0.1..0.9: [%s] %s; Spearman(tau, incorrect) %.3f <= -0.8; "
              "kB/correct loop %.2f at 0.8 < %.2f at 0.2",
              join(accepted).c_str(), mono ? "non-increasing" : "NOT monotone", rho, kb08, kb02)};
}

// 4 -------------------------------------------------------------------------

Verdict inlier_sweep() {
  auto& a = aliased();
  const auto grid = grid_file("configs/grid_inliers.json");
  const auto rows = eval::sweep(a.scenario, grid, 1, &a.cache);
  std::vector<std::size_t> accepted;
  for (const auto& r : rows) accepted.push_back(r.correct + r.incorrect);
  const bool mono = non_increasing(accepted);

  // Loop records of each grid point; registrations come from the shared cache.
  int best_min = 0, best_inliers = 0;
  std::size_t strong = 0;
  for (int m : grid.min_inliers) {
    auto cfg = a.scenario.config;
    cfg.frontend.tau_sim = grid.tau_sim.at(0);
    cfg.frontend.min_inliers = m;
    const auto r = sim::run_mission(a.scenario, cfg, &a.cache);
    for (const auto& l : r.loops) {
      if (l.label != eval::LoopClass::Incorrect || l.inliers <= 2 * m) continue;
      ++strong;
      if (l.inliers - 2 * m > best_inliers - 2 * best_min) {
        best_min = m;
        best_inliers = l.inliers;
      }
    }
  }
  return {mono && strong > 0,
          fmt("accepted loops over min_inliers: [%s] %s; %zu incorrect loops with inliers > 2 x min_inliers "
              "(e.g. %d inliers at min_inliers %d)",
              join(accepted).c_str(), mono ? "non-increasing" : "NOT monotone", strong, best_inliers, best_min)};
}

// 5 -------------------------------------------------------------------------

Verdict front_end_dominance() {
  const auto& r = defaults().result;
  return {r.front_end_bytes() > r.back_end_bytes(),
          fmt("front-end %llu B > back-end %llu B", static_cast<unsigned long long>(r.front_end_bytes()),
              static_cast<unsigned long long>(r.back_end_bytes()))};
}

// 6 -------------------------------------------------------------------------

Verdict budget_tradeoff() {
  const auto& d = defaults();
  auto cfg = d.scenario.config;
  cfg.frontend.budget = frontend::Budget{5};
  const auto r = sim::run_mission(d.scenario, cfg);
  const double ate_ratio = r.ate.mean / d.result.ate.mean;
  const double byte_ratio =
      static_cast<double>(r.front_end_bytes()) / static_cast<double>(d.result.front_end_bytes());
  return {ate_ratio <= 1.25 && byte_ratio <= 0.5,
          fmt("budget 5: ATE %.4f vs %.4f m (ratio %.3f <= 1.25), front-end bytes %llu vs %llu (ratio %.3f <= 0.5)",
              r.ate.mean, d.result.ate.mean, ate_ratio, static_cast<unsigned long long>(r.front_end_bytes()),
              static_cast<unsigned long long>(d.result.front_end_bytes()), byte_ratio)};
}

// 7 -------------------------------------------------------------------------

double graph_ate(const sim::Scenario& sc, const std::map<backend::NodeKey, Pose2>& poses) {
  eval::TrajectorySet est, truth;
  for (const auto& [k, p] : poses) {
    const auto& rd = sc.robots.at(k.robot);
    const auto i = static_cast<std::size_t>(k.keyframe);
    est[k.robot].push_back({rd.stamps.at(i), p});
    truth[k.robot].push_back({rd.stamps.at(i), rd.truth.at(i)});
  }
  return eval::ate(est, truth, true).mean;
}

Verdict gnc_robustness() {
  const auto& d = defaults();
  const auto& g = d.result.graph;
  std::size_t loops = 0;
  Eigen::Matrix3d info = Eigen::Matrix3d::Identity();
  for (const auto& e : g.edges()) {
    if (e.is_loop()) {
      ++loops;
      info = e.information;
    }
  }
  // Outliers make up 30% of the final loop set.
  const auto n_out = static_cast<std::size_t>(std::llround(0.3 * static_cast<double>(loops) / 0.7));
  const std::vector<std::pair<backend::NodeKey, Pose2>> nodes(g.nodes().begin(), g.nodes().end());
  backend::PoseGraph dirty = g;
  Rng rng(derive_seed(d.scenario.config.seed, {0x6f75746c}));
  std::size_t added = 0;
  while (added < n_out) {
    const auto a = nodes[rng.index(nodes.size())].first;
    const auto b = nodes[rng.index(nodes.size())].first;
    if (a.robot == b.robot) continue;
    backend::Edge e;
    e.kind = backend::EdgeKind::InterRobotLoop;
    e.from = a;
    e.to = b;
    e.measurement = Pose2(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-std::numbers::pi, std::numbers::pi));
    e.information = info;
    if (dirty.insert_own(e, a.robot)) ++added;
  }
  backend::GncConfig ls;
  ls.robust = false;
  const backend::GncConfig gnc;
  const double ls_clean = graph_ate(d.scenario, backend::optimize(g, ls).poses);
  const double ls_dirty = graph_ate(d.scenario, backend::optimize(dirty, ls).poses);
  const auto robust = backend::optimize(dirty, gnc);
  const double gnc_clean = graph_ate(d.scenario, backend::optimize(g, gnc).poses);
  const double gnc_dirty = graph_ate(d.scenario, robust.poses);
  double max_w = 0;
  for (std::size_t i = g.edges().size(); i < dirty.edges().size(); ++i) max_w = std::max(max_w, robust.loop_weights.at(i));
  const bool pass = ls_dirty >= 3 * ls_clean && gnc_dirty <= 1.2 * gnc_clean && max_w < 0.01;
  return {pass, fmt("%zu outliers on %zu loops: least squares %.4f -> %.4f m (x%.1f >= 3), GNC %.4f -> %.4f m "
                    "(x%.3f <= 1.2), max injected weight %.2g < 0.01",
                    n_out, loops, ls_clean, ls_dirty, ls_dirty / ls_clean, gnc_clean, gnc_dirty,
                    gnc_dirty / gnc_clean, max_w)};
}

// 8 -------------------------------------------------------------------------

backend::PoseGraph chains(const std::vector<int>& lengths) {
  backend::PoseGraph g;
  for (std::size_t r = 0; r < lengths.size(); ++r) {
    const RobotId id = static_cast<RobotId>(r + 1);
    g.add_node({id, 0}, Pose2());
    for (int k = 1; k < lengths[r]; ++k) {
      backend::Edge e;
      e.from = {id, k - 1};
      e.to = {id, k};
      e.measurement = Pose2(1, 0, 0);
      g.insert_own(e, id);
    }
  }
  return g;
}

std::string selection_oracle(int& fixtures) {
  Rng rng(derive_seed(8, {1}));
  fixtures = 0;
  // Path 1-2-3: chord beats the duplicate.
  {
    const auto g = chains({3});
    const frontend::CandidateMatch chord{{1, 0}, {1, 2}, 0.5}, dup{{1, 0}, {1, 1}, 0.9};
    const auto pick = frontend::prioritize({dup, chord}, g, frontend::Budget{1});
    ++fixtures;
    if (pick.size() != 1 || !(pick[0] == chord)) return "path fixture picked the duplicate";
  }
  for (int f = 0; f < 400; ++f) {
    const int nr = 2 + static_cast<int>(rng.index(2));
    std::vector<int> len;
    for (int r = 0; r < nr; ++r) len.push_back(2 + static_cast<int>(rng.index(5)));
    const auto g = chains(len);
    std::vector<frontend::CandidateMatch> c;
    const int nc = 1 + static_cast<int>(rng.index(8));
    for (int t = 0; t < nc; ++t) {
      int ra = 1 + static_cast<int>(rng.index(nr)), rb = 1 + static_cast<int>(rng.index(nr));
      if (ra == rb) rb = ra % nr + 1;
      if (ra > rb) std::swap(ra, rb);
      const frontend::CandidateMatch m{{ra, static_cast<int>(rng.index(len[ra - 1]))},
                                       {rb, static_cast<int>(rng.index(len[rb - 1]))}, rng.uniform()};
      if (std::none_of(c.begin(), c.end(), [&](const auto& x) { return x.a == m.a && x.b == m.b; })) c.push_back(m);
    }
    const auto sg = frontend::selection_graph(g, c);
    const int n = static_cast<int>(sg.index.size());
    oracle::EdgeList cand;
    for (const auto& m : c) cand.emplace_back(sg.index.at(m.a), sg.index.at(m.b));
    for (std::size_t k = 1; k <= c.size(); ++k) {
      oracle::EdgeList e = sg.edges;
      for (const auto& m : frontend::prioritize(c, g, frontend::Budget{k})) {
        e.emplace_back(sg.index.at(m.a), sg.index.at(m.b));
      }
      const double got = oracle::lambda2(oracle::laplacian(n, e));
      const double best = oracle::best_subset_lambda2(n, sg.edges, cand, k);
      ++fixtures;
      if (got < best - 1e-9) return fmt("fixture %d budget %zu: %.6f < optimum %.6f", f, k, got, best);
    }
  }
  return "";
}

std::string registration_oracle(int& recovered) {
  RobotProfile clean;
  clean.scan_range_sigma = 0;
  clean.beam_dropout_prob = 0;
  Rng rng(derive_seed(8, {2}));
  recovered = 0;
  std::string first_fail;
  for (int i = 0; i < 50; ++i) {
    const World w = generate_world(WorldConfig{}, 3 + static_cast<std::uint64_t>(i % 5));
    Rng scan_rng(static_cast<std::uint64_t>(i));
    const Pose2 at(rng.uniform(25, 75), rng.uniform(25, 75), rng.uniform(-std::numbers::pi, std::numbers::pi));
    const Scan a = simulate_scan(w, at, SensorConfig{}, clean, scan_rng);
    const Pose2 t(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-std::numbers::pi, std::numbers::pi));
    Scan b = a;
    for (auto& p : b.points) p = t.transform(p);
    Rng reg(static_cast<std::uint64_t>(i));
    const auto r = frontend::register_scans(a, b, frontend::RegistrationConfig{}, reg);
    const Pose2 e = t.inverse();
    const bool ok = r.success && std::abs(r.relative_pose.x - e.x) < 1e-3 && std::abs(r.relative_pose.y - e.y) < 1e-3 &&
                    std::abs(normalize_angle(r.relative_pose.theta - e.theta)) < 1e-3;
    recovered += ok;
    if (!ok && first_fail.empty()) first_fail = fmt("transform %d not recovered", i);
  }
  return first_fail;
}

std::string alignment_oracle(double& worst) {
  Rng rng(derive_seed(8, {3}));
  worst = -1e300;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TimedPose> est, truth;
    std::vector<Eigen::Vector2d> pe, pt;
    const Pose2 t(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-std::numbers::pi, std::numbers::pi));
    for (int k = 0; k < 40; ++k) {
      const double s = rng.uniform(-10, 10);
      const Pose2 p = trial % 2 == 0 ? Pose2(s, 0.5 * s, 0) : Pose2(s, rng.uniform(-10, 10), 0);
      const Pose2 q = t * p;
      truth.push_back({static_cast<double>(k), p});
      est.push_back({static_cast<double>(k), Pose2(q.x + rng.normal(0, 0.5), q.y + rng.normal(0, 0.5), 0)});
      pe.push_back(est.back().pose.translation());
      pt.push_back(p.translation());
    }
    const double mine = oracle::alignment_cost(pe, pt, eval::umeyama_align(est, truth));
    const double grid = oracle::grid_alignment_cost(pe, pt, 1e-4);
    worst = std::max(worst, mine - grid);
  }
  return worst > 1e-6 ? fmt("umeyama loses by %.3g", worst) : "";
}

std::string jacobian_oracle(double& worst) {
  Rng rng(derive_seed(8, {4}));
  worst = 0;
  for (int t = 0; t < 500; ++t) {
    const Pose2 xi(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-3, 3));
    const Pose2 xj(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-3, 3));
    const Pose2 z = xi.between(xj) * Pose2(rng.normal(0, 0.3), rng.normal(0, 0.3), rng.normal(0, 0.3));
    const auto lin = backend::linearize_edge(xi, xj, z);
    const auto ji = oracle::numeric_jacobian([&](const Pose2& p) { return backend::edge_residual(p, xj, z); }, xi);
    const auto jj = oracle::numeric_jacobian([&](const Pose2& p) { return backend::edge_residual(xi, p, z); }, xj);
    worst = std::max({worst, (lin.jac_from - ji).cwiseAbs().maxCoeff(), (lin.jac_to - jj).cwiseAbs().maxCoeff()});
  }
  return worst > 1e-5 ? fmt("Jacobian error %.3g", worst) : "";
}

Verdict oracles() {
  int fixtures = 0, recovered = 0;
  double align_gap = 0, jac = 0;
  const std::string a = selection_oracle(fixtures);
  const std::string b = registration_oracle(recovered);
  const std::string c = alignment_oracle(align_gap);
  const std::string d = jacobian_oracle(jac);
  std::string problems;
  for (const auto& s : {a, b, c, d}) {
    if (!s.empty()) problems += "; " + s;
  }
  return {problems.empty(),
          fmt("(a) selection equals exhaustive optimum on %d fixtures, (b) %d/50 transforms recovered to 1e-3, "
              "(c) umeyama minus grid cost %.3g <= 1e-6, (d) max Jacobian error %.3g <= 1e-5",
              fixtures, recovered, align_gap, jac) +
              problems};
}

// 9 -------------------------------------------------------------------------

std::string transport_fuzz(std::uint64_t& delivered, std::uint64_t& dropped) {
  comms::Transport t;
  Rng rng(derive_seed(9, {1}));
  const std::vector<comms::MessageKind> kinds = {comms::MessageKind::DescriptorBatch, comms::MessageKind::ScanPayload,
                                                 comms::MessageKind::GraphDelta, comms::MessageKind::Control};
  comms::LinkMap links;
  for (RobotId a = 1; a <= 3; ++a) {
    for (RobotId b = 1; b <= 3; ++b) {
      if (a != b) links[{a, b}] = {};
    }
  }
  std::map<comms::Pair, std::uint64_t> last_id;
  std::map<comms::Pair, double> delivered_bytes, capacity;
  for (int k = 0; k < 10'000; ++k) {
    for (auto& [p, s] : links) {
      if (rng.bernoulli(0.05)) {
        s = rng.bernoulli(0.6) ? comms::LinkState{true, rng.uniform(100, 400), rng.uniform(5, 20)} : comms::LinkState{};
      }
      if (s.connected) capacity[p] += s.throughput_mbps * 125000.0 * 0.1;
    }
    for (int q = static_cast<int>(rng.index(3)); q > 0; --q) {
      comms::Message m;
      m.src = 1 + static_cast<RobotId>(rng.index(3));
      m.dst = (m.src + static_cast<RobotId>(rng.index(2))) % 3 + 1;
      m.kind = kinds[rng.index(kinds.size())];
      m.payload = comms::ControlPayload{};
      m.size_bytes = 16 + rng.index(400'000);
      t.send(std::move(m));
    }
    for (const auto& d : t.step(0.1, links)) {
      const comms::Pair p{d.message.src, d.message.dst};
      if (d.message.id <= last_id[p]) return fmt("FIFO violated at step %d", k);
      last_id[p] = d.message.id;
      delivered_bytes[p] += static_cast<double>(d.message.size_bytes);
      if (delivered_bytes[p] > capacity[p] + 1e-6) return fmt("capacity exceeded at step %d", k);
    }
    t.take_dropped();
    for (const auto& [p, cats] : t.report().traffic) {
      for (const auto& [c, s] : cats) {
        if (s.bytes_delivered + t.bytes_in_flight(p, c) + s.bytes_dropped != s.bytes_sent) {
          return fmt("conservation violated at step %d", k);
        }
      }
    }
  }
  delivered = t.report().total().messages_delivered;
  dropped = t.report().total().messages_dropped;
  return "";
}

Verdict transport() {
  std::uint64_t delivered = 0, dropped = 0;
  const std::string fuzz = transport_fuzz(delivered, dropped);
  const auto trace = comms::Trace::load(source("fixtures/trace_3robots.csv"));
  comms::Transport t;
  for (int k = 0; k < 600; ++k) {
    comms::LinkMap links;
    for (RobotId a = 1; a <= 3; ++a) {
      for (RobotId b = 1; b <= 3; ++b) {
        if (a != b) links[{a, b}] = trace.at(a, b, 0.1 * k);
      }
    }
    t.step(0.1, links);
  }
  bool exact = t.report().capacity_bytes.size() == 6;
  for (const auto& [p, c] : t.report().capacity_bytes) exact = exact && c == 75e6;
  return {fuzz.empty() && exact,
          fmt("10^4-step fuzz: conservation, FIFO and capacity held (%llu delivered, %llu dropped)%s; fixture "
              "capacity %s 75 MB per pair (total %.0f B)",
              static_cast<unsigned long long>(delivered), static_cast<unsigned long long>(dropped),
              fuzz.empty() ? "" : (" FAILED: " + fuzz).c_str(), exact ? "exactly" : "NOT", t.report().total_capacity())};
}

// 10 ------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

int shell(const std::string& cmd) {
  const int s = std::system(cmd.c_str());
  return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
}

Verdict determinism() {
  const fs::path root = fs::absolute("acceptance_cli");
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream(root / "grid.json") << R"({"tau_sim": [0.6, 0.8], "budget": [null, 5]})";
  }
  const std::string cli = std::string("'") + CSLAM_CLI + "'";
  const std::string def = source("configs/default.json");
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-world", "gen-world --config " + def + " --out OUT"},
      {"run", "run --config " + def + " --seed 7 --out OUT"},
      {"replay", "replay --trace " + source("fixtures/trace_3robots.csv") + " --config " +
                     source("configs/replay_60s.json") + " --out OUT"},
      {"sweep", "sweep --config " + source("configs/replay_60s.json") + " --grid " + (root / "grid.json").string() +
                    " --out OUT"},
  };
  std::vector<std::string> checked, differing;
  for (const auto& [name, args] : commands) {
    std::map<std::string, std::string> first;
    bool same = true;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = root / (name + std::to_string(rep));
      std::string a = args;
      a.replace(a.find("OUT"), 3, out.string());
      if (shell(cli + " " + a + " > " + (root / "log.txt").string() + " 2>&1") != 0) {
        differing.push_back(name + " (exit status)");
        same = false;
        break;
      }
      const auto files = tree(out);
      if (rep == 0) {
        first = files;
      } else {
        same = !files.empty() && files == first;
      }
    }
    checked.push_back(name);
    if (!same) differing.push_back(name);
  }
  // eval and plot read a run directory in place; compare their outputs across repeats.
  for (const std::string name : {"eval", "plot"}) {
    const fs::path run = root / "run0";
    std::vector<std::map<std::string, std::string>> states;
    for (int rep = 0; rep < 2; ++rep) {
      for (const auto& e : fs::directory_iterator(run)) {
        if (shell(cli + " " + name + " --run " + e.path().string() + " > " + (root / "log.txt").string() + " 2>&1") !=
            0) {
          differing.push_back(name + " (exit status)");
        }
      }
      states.push_back(tree(run));
    }
    checked.push_back(name);
    if (states[0] != states[1]) differing.push_back(name);
  }
  std::string list;
  for (const auto& c : checked) list += (list.empty() ? "" : ", ") + c;
  std::string bad;
  for (const auto& c : differing) bad += " " + c;
  return {differing.empty(),
          "byte-identical outputs across repeated invocations of " + list + (bad.empty() ? "" : "; differing:" + bad)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"end-to-end improvement", end_to_end},
      {"per-robot noise ordering", noise_ordering},
      {"similarity threshold sweep", similarity_sweep},
      {"inlier threshold sweep", inlier_sweep},
      {"front-end dominance", front_end_dominance},
      {"budget trade-off", budget_tradeoff},
      {"GNC robustness", gnc_robustness},
      {"oracle equivalence", oracles},
      {"transport conservation and capacity", transport},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("[%s] %zu. %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                v.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
