#include "cslam/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cslam/backend/g2o.hpp"

namespace cslam::eval {

using json = nlohmann::json;

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, int line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

long long to_int(const std::string& s, int line_no) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("line " + std::to_string(line_no) + ": bad integer '" + s + "'");
  }
}

/// Calls `row` for every data line after checking the header.
template <typename F>
void for_rows(const std::string& text, const std::string& header, std::size_t columns, F row) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != header) throw std::invalid_argument("unexpected header: " + line);
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != columns) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                                  " columns");
    }
    row(cells, line_no);
  }
}

constexpr const char* kTrajectoryHeader = "kind,robot,stamp,x,y,theta";
constexpr const char* kCommHeader = "t,capacity_mb,demand_mb,delivered_mb";
constexpr const char* kSweepHeader =
    "tau_sim,min_inliers,budget,candidates,correct,incorrect,failed,ate_mean,tau_err,front_end_bytes,"
    "back_end_bytes,kbytes_per_correct_loop";

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// 1, 2 or 5 times a power of ten, at least span / 6.
double tick_step(double span) {
  if (!(span > 0)) return 1.0;
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

std::string trajectories_csv(const sim::MissionResult& result) {
  std::ostringstream os;
  os << kTrajectoryHeader << '\n';
  auto emit = [&](const char* kind, const TrajectorySet& set) {
    for (const auto& [robot, poses] : set) {
      for (const auto& p : poses) {
        os << kind << ',' << robot << ',' << format_number(p.stamp) << ',' << format_number(p.pose.x) << ','
           << format_number(p.pose.y) << ',' << format_number(p.pose.theta) << '\n';
      }
    }
  };
  emit("estimate", result.estimate);
  emit("odometry", result.odometry);
  emit("reference", result.reference);
  return os.str();
}

TrajectoryTables parse_trajectories_csv(const std::string& text) {
  TrajectoryTables t;
  for_rows(text, kTrajectoryHeader, 6, [&](const std::vector<std::string>& c, int n) {
    TrajectorySet* set = c[0] == "estimate"    ? &t.estimate
                         : c[0] == "odometry"  ? &t.odometry
                         : c[0] == "reference" ? &t.reference
                                               : nullptr;
    if (!set) throw std::invalid_argument("line " + std::to_string(n) + ": unknown kind '" + c[0] + "'");
    (*set)[static_cast<RobotId>(to_int(c[1], n))].push_back(
        {to_double(c[2], n), Pose2(to_double(c[3], n), to_double(c[4], n), to_double(c[5], n))});
  });
  return t;
}

std::string loops_csv(const sim::MissionResult& result) {
  std::ostringstream os;
  os << "time,robot_a,kf_a,robot_b,kf_b,similarity,success,inliers,rmse,meas_x,meas_y,meas_theta,true_x,true_y,"
        "true_theta,label\n";
  for (const auto& l : result.loops) {
    os << format_number(l.time) << ',' << l.a.robot << ',' << l.a.keyframe << ',' << l.b.robot << ','
       << l.b.keyframe << ',' << format_number(l.similarity) << ',' << (l.success ? 1 : 0) << ',' << l.inliers
       << ',' << format_number(l.rmse) << ',' << format_number(l.measurement.x) << ','
       << format_number(l.measurement.y) << ',' << format_number(l.measurement.theta) << ','
       << format_number(l.truth.x) << ',' << format_number(l.truth.y) << ',' << format_number(l.truth.theta) << ','
       << to_string(l.label) << '\n';
  }
  return os.str();
}

std::string optimizations_csv(const sim::MissionResult& result) {
  std::ostringstream os;
  os << "time,robot,nodes,edges,loops,rejected_loops,gnc_iterations,lm_iterations,cost,diverged\n";
  for (const auto& o : result.optimizations) {
    os << format_number(o.time) << ',' << o.robot << ',' << o.nodes << ',' << o.edges << ',' << o.loops << ','
       << o.rejected_loops << ',' << o.iterations << ',' << o.lm_iterations << ',' << format_number(o.cost) << ','
       << (o.diverged ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string comm_series_csv(const CommSummary& summary) {
  std::ostringstream os;
  os << kCommHeader << '\n';
  for (const auto& s : summary.series) {
    os << format_number(s.t) << ',' << format_number(s.capacity_mb) << ',' << format_number(s.demand_mb) << ','
       << format_number(s.delivered_mb) << '\n';
  }
  return os.str();
}

CommSummary parse_comm_series_csv(const std::string& text) {
  CommSummary s;
  for_rows(text, kCommHeader, 4, [&](const std::vector<std::string>& c, int n) {
    s.series.push_back({to_double(c[0], n), to_double(c[1], n), to_double(c[2], n), to_double(c[3], n)});
  });
  return s;
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
  std::vector<SweepRow> rows;
  for_rows(text, kSweepHeader, 12, [&](const std::vector<std::string>& c, int n) {
    SweepRow r;
    r.tau_sim = to_double(c[0], n);
    r.min_inliers = static_cast<int>(to_int(c[1], n));
    if (c[2] != "unlimited") r.budget = static_cast<std::size_t>(to_int(c[2], n));
    r.candidates = static_cast<std::size_t>(to_int(c[3], n));
    r.correct = static_cast<std::size_t>(to_int(c[4], n));
    r.incorrect = static_cast<std::size_t>(to_int(c[5], n));
    r.failed = static_cast<std::size_t>(to_int(c[6], n));
    r.ate_mean = to_double(c[7], n);
    r.tau_err = to_double(c[8], n);
    r.front_end_bytes = static_cast<std::uint64_t>(to_int(c[9], n));
    r.back_end_bytes = static_cast<std::uint64_t>(to_int(c[10], n));
    r.kbytes_per_correct_loop = to_double(c[11], n);
    rows.push_back(r);
  });
  return rows;
}

json ate_json(const AteResult& ate) {
  json per_robot = json::object();
  for (const auto& [id, s] : ate.per_robot) per_robot[std::to_string(id)] = {{"mean", s.mean}, {"std", s.std}, {"n", s.n}};
  return {{"mean", ate.mean}, {"std", ate.std}, {"n_samples", ate.n_samples}, {"per_robot", per_robot}};
}

json comm_summary_json(const CommSummary& s) {
  return {{"front_end_bytes", s.front_end_bytes},
          {"back_end_bytes", s.back_end_bytes},
          {"capacity_bytes", s.capacity_bytes},
          {"capacity_mb", s.series.empty() ? 0.0 : s.series.back().capacity_mb},
          {"demand_mb", s.series.empty() ? 0.0 : s.series.back().demand_mb},
          {"delivered_mb", s.series.empty() ? 0.0 : s.series.back().delivered_mb},
          {"correct_loops", s.correct_loops},
          {"kbytes_per_correct_loop", s.kbytes_per_correct_loop}};
}

json run_summary_json(const sim::ScenarioConfig& config, const sim::MissionResult& r) {
  json traffic = json::object();
  for (const auto& [pair, cats] : r.comm.traffic) {
    json by_cat = json::object();
    for (const auto& [cat, st] : cats) {
      by_cat[comms::to_string(cat)] = {{"bytes_sent", st.bytes_sent},
                                       {"bytes_delivered", st.bytes_delivered},
                                       {"bytes_dropped", st.bytes_dropped},
                                       {"messages_sent", st.messages_sent},
                                       {"messages_delivered", st.messages_delivered},
                                       {"messages_dropped", st.messages_dropped}};
    }
    traffic[std::to_string(pair.first) + "->" + std::to_string(pair.second)] = by_cat;
  }
  std::size_t diverged = 0;
  for (const auto& o : r.optimizations) diverged += o.diverged ? 1 : 0;
  return {{"run", sim::run_name(config)},
          {"config_hash", sim::config_hash(config)},
          {"seed", config.seed},
          {"duration", r.duration},
          {"ate", ate_json(r.ate)},
          {"odometry_ate", ate_json(r.odometry_ate)},
          {"tau_err", r.tau_err},
          {"candidates_detected", r.candidates_detected},
          {"candidates_selected", r.candidates_selected},
          {"loops", {{"correct", r.counts.correct}, {"incorrect", r.counts.incorrect}, {"failed", r.counts.failed}}},
          {"optimizations", r.optimizations.size()},
          {"diverged_optimizations", diverged},
          {"graph_owner", r.graph_owner},
          {"graph_nodes", r.graph.node_count()},
          {"graph_edges", r.graph.edges().size()},
          {"front_end_bytes", r.front_end_bytes()},
          {"back_end_bytes", r.back_end_bytes()},
          {"kbytes_per_correct_loop", r.kbytes_per_correct_loop()},
          {"traffic", traffic}};
}

std::string svg_line_chart(const Chart& chart) {
  constexpr double kWidth = 640, kHeight = 400;
  constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
  static const char* kColors[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = 0.0, y1 = -x0;
  for (const auto& s : chart.series) {
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y1 = 1;
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - y0) / (y1 - y0) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << escape_xml(chart.title) << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  const double xs = tick_step(x1 - x0), ys = tick_step(y1 - y0);
  for (double t = std::ceil(x0 / xs) * xs; t <= x1 + 1e-9 * xs; t += xs) {
    os << "<line x1=\"" << format_number(px(t)) << "\" y1=\"" << kTop + ph << "\" x2=\"" << format_number(px(t))
       << "\" y2=\"" << kTop + ph + 4 << "\" stroke=\"black\"/><text x=\"" << format_number(px(t)) << "\" y=\""
       << kTop + ph + 16 << "\" text-anchor=\"middle\">" << format_number(std::abs(t) < 1e-12 ? 0.0 : t)
       << "</text>\n";
  }
  for (double t = std::ceil(y0 / ys) * ys; t <= y1 + 1e-9 * ys; t += ys) {
    os << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << format_number(py(t)) << "\" x2=\"" << kLeft << "\" y2=\""
       << format_number(py(t)) << "\" stroke=\"black\"/><text x=\"" << kLeft - 6 << "\" y=\""
       << format_number(py(t) + 4) << "\" text-anchor=\"end\">" << format_number(std::abs(t) < 1e-12 ? 0.0 : t)
       << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
     << escape_xml(chart.x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << kTop + ph / 2 << ")\">" << escape_xml(chart.y_label) << "</text>\n";
  for (std::size_t i = 0; i < chart.series.size(); ++i) {
    const auto& s = chart.series[i];
    const char* color = kColors[i % std::size(kColors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < s.points.size(); ++k) {
      os << (k ? " " : "") << format_number(px(s.points[k].first)) << ',' << format_number(py(s.points[k].second));
    }
    os << "\"/>\n";
    const double ly = kTop + 10 + 18 * static_cast<double>(i);
    os << "<line x1=\"" << kLeft + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 30 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\"" << kLeft + pw + 34 << "\" y=\"" << ly + 4
       << "\">" << escape_xml(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

Chart sweep_chart(const std::vector<SweepRow>& rows) {
  Chart c;
  c.title = "Loop closures per class";
  c.x_label = "similarity threshold";
  c.y_label = "loop closures";
  ChartSeries correct{"correct", {}}, incorrect{"incorrect", {}}, failed{"failed", {}};
  bool by_inliers = false;
  for (std::size_t i = 1; i < rows.size(); ++i) by_inliers |= rows[i].min_inliers != rows[0].min_inliers;
  if (by_inliers) c.x_label = "minimum inliers";
  for (const auto& r : rows) {
    const double x = by_inliers ? r.min_inliers : r.tau_sim;
    correct.points.emplace_back(x, static_cast<double>(r.correct));
    incorrect.points.emplace_back(x, static_cast<double>(r.incorrect));
    failed.points.emplace_back(x, static_cast<double>(r.failed));
  }
  c.series = {correct, incorrect, failed};
  return c;
}

Chart comm_chart(const CommSummary& summary) {
  Chart c;
  c.title = "Cumulative communication";
  c.x_label = "time [s]";
  c.y_label = "megabytes";
  ChartSeries cap{"capacity", {}}, demand{"demand", {}}, delivered{"delivered", {}};
  // One point per second keeps the file small.
  double next = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < summary.series.size(); ++i) {
    const auto& s = summary.series[i];
    if (s.t + 1e-9 < next && i + 1 != summary.series.size()) continue;
    next = std::floor(s.t + 1e-9) + 1.0;
    cap.points.emplace_back(s.t, s.capacity_mb);
    demand.points.emplace_back(s.t, s.demand_mb);
    delivered.points.emplace_back(s.t, s.delivered_mb);
  }
  c.series = {cap, demand, delivered};
  return c;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_run(const std::filesystem::path& dir, const sim::ScenarioConfig& config, const sim::MissionResult& result) {
  const auto summary = comm_summary(result.comm, result.counts);
  write_text(dir / "config.json", sim::scenario_to_json(config).dump(2) + "\n");
  write_text(dir / "summary.json", run_summary_json(config, result).dump(2) + "\n");
  write_text(dir / "trajectories.csv", trajectories_csv(result));
  write_text(dir / "loops.csv", loops_csv(result));
  write_text(dir / "optimizations.csv", optimizations_csv(result));
  const std::string series = comm_series_csv(summary);
  write_text(dir / "comm_series.csv", series);
  write_text(dir / "comm_summary.json", comm_summary_json(summary).dump(2) + "\n");
  std::ostringstream g2o;
  backend::write_g2o(g2o, result.graph);
  write_text(dir / "graph.g2o", g2o.str());
  write_text(dir / "comm.svg", svg_line_chart(comm_chart(parse_comm_series_csv(series))));
}

}  // namespace cslam::eval
