#include "cslam/eval/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "cslam/error.hpp"

namespace cslam::eval {

using json = nlohmann::json;

namespace {

struct Point {
  double tau_sim;
  int min_inliers;
  std::optional<std::size_t> budget;
};

std::optional<std::size_t> budget_of(const frontend::Budget& b) {
  if (b.is_unlimited()) return std::nullopt;
  return b.max_matches_per_round;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

SweepGrid parse_grid(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("grid", std::string("grid: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("grid", "grid: expected an object");
  SweepGrid g;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_array()) throw ConfigError(key, "grid." + key + ": expected an array");
    if (key == "tau_sim") {
      for (const auto& v : value) {
        if (!v.is_number() || v.get<double>() < 0 || v.get<double>() > 1) {
          throw ConfigError(key, "grid.tau_sim: values must be numbers in [0, 1]");
        }
        g.tau_sim.push_back(v.get<double>());
      }
    } else if (key == "min_inliers") {
      for (const auto& v : value) {
        if (!v.is_number_integer() || v.get<long long>() < 0) {
          throw ConfigError(key, "grid.min_inliers: values must be integers >= 0");
        }
        g.min_inliers.push_back(v.get<int>());
      }
    } else if (key == "budget") {
      for (const auto& v : value) {
        if (v.is_null()) {
          g.budget.emplace_back(std::nullopt);
        } else if (v.is_number_integer() && v.get<long long>() >= 0) {
          g.budget.emplace_back(v.get<std::size_t>());
        } else {
          throw ConfigError(key, "grid.budget: values must be null or integers >= 0");
        }
      }
    } else {
      throw ConfigError(key, "grid: unknown key '" + key + "'");
    }
  }
  return g;
}

SweepRow make_row(const sim::ScenarioConfig& config, const sim::MissionResult& result) {
  SweepRow row;
  row.tau_sim = config.frontend.tau_sim;
  row.min_inliers = config.frontend.min_inliers;
  row.budget = budget_of(config.frontend.budget);
  row.candidates = result.candidates_detected;
  row.correct = result.counts.correct;
  row.incorrect = result.counts.incorrect;
  row.failed = result.counts.failed;
  row.ate_mean = result.ate.mean;
  row.tau_err = result.tau_err;
  row.front_end_bytes = result.front_end_bytes();
  row.back_end_bytes = result.back_end_bytes();
  row.kbytes_per_correct_loop = result.kbytes_per_correct_loop();
  return row;
}

std::vector<SweepRow> sweep(const sim::Scenario& scenario, const SweepGrid& grid, unsigned threads,
                            sim::RegistrationCache* cache) {
  const auto& base = scenario.config;
  const auto taus = grid.tau_sim.empty() ? std::vector<double>{base.frontend.tau_sim} : grid.tau_sim;
  const auto inliers = grid.min_inliers.empty() ? std::vector<int>{base.frontend.min_inliers} : grid.min_inliers;
  const auto budgets = grid.budget.empty() ? std::vector<std::optional<std::size_t>>{budget_of(base.frontend.budget)}
                                           : grid.budget;
  std::vector<Point> points;
  for (double t : taus)
    for (int m : inliers)
      for (const auto& b : budgets) points.push_back({t, m, b});

  std::vector<SweepRow> rows(points.size());
  sim::RegistrationCache own_cache;
  if (!cache) cache = &own_cache;
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        auto cfg = base;
        cfg.frontend.tau_sim = points[i].tau_sim;
        cfg.frontend.min_inliers = points[i].min_inliers;
        cfg.frontend.budget = points[i].budget ? frontend::Budget{*points[i].budget} : frontend::Budget::unlimited();
        rows[i] = make_row(cfg, sim::run_mission(scenario, cfg, cache));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(points.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < n; ++k) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "tau_sim,min_inliers,budget,candidates,correct,incorrect,failed,ate_mean,tau_err,front_end_bytes,"
        "back_end_bytes,kbytes_per_correct_loop\n";
  for (const auto& r : rows) {
    os << fmt(r.tau_sim) << ',' << r.min_inliers << ',' << (r.budget ? std::to_string(*r.budget) : "unlimited") << ','
       << r.candidates << ',' << r.correct << ',' << r.incorrect << ',' << r.failed << ',' << fmt(r.ate_mean) << ','
       << fmt(r.tau_err) << ',' << r.front_end_bytes << ',' << r.back_end_bytes << ','
       << fmt(r.kbytes_per_correct_loop) << '\n';
  }
  return os.str();
}

CommSummary comm_summary(const comms::CommReport& report, const sim::LoopCounts& counts) {
  CommSummary s;
  for (const auto& p : report.series) s.series.push_back({p.t, p.capacity / 1e6, p.demand / 1e6, p.delivered / 1e6});
  s.front_end_bytes = report.total(comms::Category::FrontEnd).bytes_sent;
  s.back_end_bytes = report.total(comms::Category::BackEnd).bytes_sent;
  s.capacity_bytes = static_cast<std::uint64_t>(std::llround(report.total_capacity()));
  s.correct_loops = counts.correct;
  s.kbytes_per_correct_loop =
      static_cast<double>(s.front_end_bytes) / 1000.0 / static_cast<double>(std::max<std::size_t>(1, counts.correct));
  return s;
}

}  // namespace cslam::eval
