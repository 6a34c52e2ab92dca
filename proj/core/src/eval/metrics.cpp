#include "cslam/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cslam::eval {

std::vector<PosePair> associate(const std::vector<TimedPose>& estimate, const std::vector<TimedPose>& truth,
                                double max_gap) {
  std::vector<PosePair> out;
  if (truth.empty()) return out;
  for (const auto& e : estimate) {
    auto it = std::lower_bound(truth.begin(), truth.end(), e.stamp,
                               [](const TimedPose& t, double s) { return t.stamp < s; });
    const TimedPose* best = nullptr;
    if (it != truth.end()) best = &*it;
    if (it != truth.begin()) {
      const TimedPose* prev = &*std::prev(it);
      if (!best || e.stamp - prev->stamp <= best->stamp - e.stamp) best = prev;
    }
    if (std::abs(best->stamp - e.stamp) <= max_gap) out.push_back({e.pose, best->pose});
  }
  return out;
}

Pose2 umeyama_align(const std::vector<PosePair>& pairs) {
  if (pairs.size() < 2) throw std::invalid_argument("umeyama_align: need at least 2 paired samples");
  Eigen::Vector2d ce = Eigen::Vector2d::Zero(), ct = Eigen::Vector2d::Zero();
  for (const auto& p : pairs) {
    ce += p.estimate.translation();
    ct += p.truth.translation();
  }
  ce /= static_cast<double>(pairs.size());
  ct /= static_cast<double>(pairs.size());
  double s_cos = 0.0, s_sin = 0.0;
  for (const auto& p : pairs) {
    const Eigen::Vector2d e = p.estimate.translation() - ce;
    const Eigen::Vector2d t = p.truth.translation() - ct;
    s_cos += e.dot(t);
    s_sin += e.x() * t.y() - e.y() * t.x();
  }
  const double theta = std::atan2(s_sin, s_cos);
  const Eigen::Vector2d shift = ct - Pose2(0, 0, theta).transform(ce);
  return {shift.x(), shift.y(), theta};
}

Pose2 umeyama_align(const std::vector<TimedPose>& estimate, const std::vector<TimedPose>& truth) {
  return umeyama_align(associate(estimate, truth));
}

namespace {

ErrorStats stats_of(const std::vector<double>& errors) {
  ErrorStats s;
  s.n = errors.size();
  if (errors.empty()) return s;
  for (double e : errors) s.mean += e;
  s.mean /= static_cast<double>(errors.size());
  double var = 0.0;
  for (double e : errors) var += (e - s.mean) * (e - s.mean);
  s.std = std::sqrt(var / static_cast<double>(errors.size()));
  return s;
}

AteResult summarize(const std::map<RobotId, std::vector<double>>& errors) {
  AteResult r;
  std::vector<double> all;
  for (const auto& [id, errs] : errors) {
    r.per_robot[id] = stats_of(errs);
    all.insert(all.end(), errs.begin(), errs.end());
  }
  if (all.empty()) throw std::invalid_argument("ate: no paired samples");
  const auto team = stats_of(all);
  r.mean = team.mean;
  r.std = team.std;
  r.n_samples = team.n;
  return r;
}

}  // namespace

AteResult ate(const TrajectorySet& estimate, const TrajectorySet& truth, bool align) {
  std::map<RobotId, std::vector<PosePair>> pairs;
  std::vector<PosePair> pooled;
  for (const auto& [id, est] : estimate) {
    const auto it = truth.find(id);
    if (it == truth.end()) continue;
    pairs[id] = associate(est, it->second);
    pooled.insert(pooled.end(), pairs[id].begin(), pairs[id].end());
  }
  const Pose2 t = align ? umeyama_align(pooled) : Pose2::identity();
  std::map<RobotId, std::vector<double>> errors;
  for (const auto& [id, ps] : pairs) {
    auto& errs = errors[id];
    for (const auto& p : ps) errs.push_back((t.transform(p.estimate.translation()) - p.truth.translation()).norm());
  }
  return summarize(errors);
}

AteResult ate_per_robot_aligned(const TrajectorySet& estimate, const TrajectorySet& truth) {
  std::map<RobotId, std::vector<double>> errors;
  for (const auto& [id, est] : estimate) {
    const auto it = truth.find(id);
    if (it == truth.end()) continue;
    const auto ps = associate(est, it->second);
    const Pose2 t = umeyama_align(ps);
    auto& errs = errors[id];
    for (const auto& p : ps) errs.push_back((t.transform(p.estimate.translation()) - p.truth.translation()).norm());
  }
  return summarize(errors);
}

const char* to_string(LoopClass c) {
  switch (c) {
    case LoopClass::Correct: return "correct";
    case LoopClass::Incorrect: return "incorrect";
    case LoopClass::Failed: return "failed";
  }
  return "unknown";
}

LoopClass classify_loop(bool registered, const Pose2& measurement, const Pose2& gt_relative, double tau_err) {
  if (!registered) return LoopClass::Failed;
  return (measurement.translation() - gt_relative.translation()).norm() < tau_err ? LoopClass::Correct
                                                                                  : LoopClass::Incorrect;
}

LoopClass classify_loop(const frontend::RegistrationResult& result, const Pose2& gt_relative, double tau_err) {
  return classify_loop(result.success, result.relative_pose, gt_relative, tau_err);
}

}  // namespace cslam::eval
