// Command line entry point: gen-world, run, replay, sweep, eval, plot.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cslam/error.hpp"
#include "cslam/eval/report.hpp"
#include "cslam/eval/sweep.hpp"
#include "cslam/sim/mission.hpp"

namespace fs = std::filesystem;
using namespace cslam;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "runs";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Scenario JSON (defaults when omitted)");
  cmd->add_option("--seed", c.seed, "Override the scenario seed");
  cmd->add_option("--out", c.out, "Output root; results go to <out>/<config-hash>-s<seed>")->capture_default_str();
}

sim::ScenarioConfig load(const Common& c) {
  sim::ScenarioConfig cfg = c.config.empty() ? sim::ScenarioConfig{} : sim::load_scenario(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

fs::path run_dir(const Common& c, const sim::ScenarioConfig& cfg) { return fs::path(c.out) / sim::run_name(cfg); }

std::string truth_csv(const sim::Scenario& s) {
  std::string out = "robot,stamp,x,y,theta\n";
  for (const auto& [id, t] : s.truth) {
    for (const auto& p : t.samples) {
      out += std::to_string(id) + ',' + eval::format_number(p.stamp) + ',' + eval::format_number(p.pose.x) + ',' +
             eval::format_number(p.pose.y) + ',' + eval::format_number(p.pose.theta) + '\n';
    }
  }
  return out;
}

int gen_world(const Common& c) {
  const auto cfg = load(c);
  const auto scenario = sim::prepare_scenario(cfg);
  const auto dir = run_dir(c, cfg);
  eval::write_text(dir / "config.json", sim::scenario_to_json(cfg).dump(2) + "\n");
  eval::write_text(dir / "world.json", nlohmann::json(scenario.world).dump(2) + "\n");
  eval::write_text(dir / "truth.csv", truth_csv(scenario));
  std::cout << dir.string() << "\n";
  return 0;
}

int run(const Common& c, const std::string& trace) {
  auto cfg = load(c);
  if (!trace.empty()) {
    if (!fs::exists(trace)) throw ConfigError("trace", "trace file not found: " + trace);
    cfg.link.trace = fs::absolute(trace).lexically_normal();
  }
  const auto scenario = sim::prepare_scenario(cfg);
  const auto result = sim::run_mission(scenario);
  const auto dir = run_dir(c, cfg);
  eval::write_run(dir, cfg, result);
  std::cerr << "ATE " << result.ate.mean << " m (odometry " << result.odometry_ate.mean << " m), loops "
            << result.counts.correct << "/" << result.counts.incorrect << "/" << result.counts.failed
            << " correct/incorrect/failed\n";
  std::cout << dir.string() << "\n";
  return 0;
}

int sweep(const Common& c, const std::string& grid_path, unsigned threads) {
  const auto cfg = load(c);
  if (!fs::exists(grid_path)) throw ConfigError("grid", "grid file not found: " + grid_path);
  const auto grid = eval::parse_grid(eval::read_text(grid_path));
  const auto scenario = sim::prepare_scenario(cfg);
  const auto rows = eval::sweep(scenario, grid, threads);
  const auto dir = run_dir(c, cfg);
  eval::write_text(dir / "config.json", sim::scenario_to_json(cfg).dump(2) + "\n");
  eval::write_text(dir / "sweep.csv", eval::sweep_csv(rows));
  eval::write_text(dir / "sweep.svg", eval::svg_line_chart(eval::sweep_chart(rows)));
  std::cout << dir.string() << "\n";
  return 0;
}

int evaluate(const std::string& dir) {
  const auto tables = eval::parse_trajectories_csv(eval::read_text(fs::path(dir) / "trajectories.csv"));
  const nlohmann::json out = {
      {"ate", eval::ate_json(eval::ate(tables.estimate, tables.reference, true))},
      {"ate_unaligned", eval::ate_json(eval::ate(tables.estimate, tables.reference, false))},
      {"ate_per_robot_aligned", eval::ate_json(eval::ate_per_robot_aligned(tables.estimate, tables.reference))},
      {"odometry_ate", eval::ate_json(eval::ate_per_robot_aligned(tables.odometry, tables.reference))}};
  eval::write_text(fs::path(dir) / "eval.json", out.dump(2) + "\n");
  std::cout << (fs::path(dir) / "eval.json").string() << "\n";
  return 0;
}

int plot(const std::string& dir) {
  bool any = false;
  if (fs::exists(fs::path(dir) / "comm_series.csv")) {
    const auto s = eval::parse_comm_series_csv(eval::read_text(fs::path(dir) / "comm_series.csv"));
    eval::write_text(fs::path(dir) / "comm.svg", eval::svg_line_chart(eval::comm_chart(s)));
    std::cout << (fs::path(dir) / "comm.svg").string() << "\n";
    any = true;
  }
  if (fs::exists(fs::path(dir) / "sweep.csv")) {
    const auto rows = eval::parse_sweep_csv(eval::read_text(fs::path(dir) / "sweep.csv"));
    eval::write_text(fs::path(dir) / "sweep.svg", eval::svg_line_chart(eval::sweep_chart(rows)));
    std::cout << (fs::path(dir) / "sweep.svg").string() << "\n";
    any = true;
  }
  if (!any) throw ConfigError("run", "no comm_series.csv or sweep.csv in " + dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic multi-robot collaborative SLAM simulator"};
  app.require_subcommand(1);

  Common gen_opts, run_opts, replay_opts, sweep_opts;
  std::string trace, grid, eval_dir, plot_dir;
  unsigned threads = 1;

  auto* gen_cmd = app.add_subcommand("gen-world", "Generate the world and ground-truth trajectories");
  add_common(gen_cmd, gen_opts);
  auto* run_cmd = app.add_subcommand("run", "Run a mission");
  add_common(run_cmd, run_opts);
  auto* replay_cmd = app.add_subcommand("replay", "Run a mission with links replayed from a trace");
  add_common(replay_cmd, replay_opts);
  replay_cmd->add_option("--trace", trace, "Link trace CSV")->required();
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a threshold/budget grid");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--grid", grid, "Grid JSON")->required();
  sweep_cmd->add_option("--threads", threads, "Worker threads")->capture_default_str();
  auto* eval_cmd = app.add_subcommand("eval", "Recompute trajectory metrics for a run directory");
  eval_cmd->add_option("--run", eval_dir, "Run directory")->required();
  auto* plot_cmd = app.add_subcommand("plot", "Render SVG charts for a run or sweep directory");
  plot_cmd->add_option("--run", plot_dir, "Run or sweep directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*gen_cmd) return gen_world(gen_opts);
    if (*run_cmd) return run(run_opts, "");
    if (*replay_cmd) return run(replay_opts, trace);
    if (*sweep_cmd) return sweep(sweep_opts, grid, threads);
    if (*eval_cmd) return evaluate(eval_dir);
    if (*plot_cmd) return plot(plot_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error [" << e.key() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
