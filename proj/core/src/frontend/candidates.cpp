#include "cslam/frontend/candidates.hpp"

#include <algorithm>
#include <stdexcept>

namespace cslam::frontend {

comms::DescriptorBatch missing_descriptors(const DescriptorStore& local, const std::set<KeyframeRef>& peer_known) {
  comms::DescriptorBatch batch;
  for (const auto& [ref, d] : local) {
    if (!peer_known.count(ref)) batch.descriptors.push_back(d);
  }
  return batch;
}

comms::Message sync_descriptors(const DescriptorStore& local, const std::set<KeyframeRef>& peer_known,
                                RobotId src, RobotId dst, double now) {
  return comms::make_message(src, dst, missing_descriptors(local, peer_known), now);
}

bool ranks_before(const CandidateMatch& x, const CandidateMatch& y) {
  if (x.similarity != y.similarity) return x.similarity > y.similarity;
  return std::tie(x.a, x.b) < std::tie(y.a, y.b);
}

std::vector<CandidateMatch> detect_candidates(const std::vector<const ScanDescriptor*>& own,
                                              const std::vector<const ScanDescriptor*>& foreign, double tau_sim) {
  if (!(tau_sim >= 0.0 && tau_sim <= 1.0)) throw std::invalid_argument("detect_candidates: tau_sim must be in [0, 1]");
  std::map<std::pair<KeyframeRef, KeyframeRef>, double> found;
  for (const auto* x : own) {
    for (const auto* y : foreign) {
      if (x->ref().robot == y->ref().robot) continue;
      const auto key = x->ref() < y->ref() ? std::pair{x->ref(), y->ref()} : std::pair{y->ref(), x->ref()};
      if (found.count(key)) continue;
      const double s = similarity(*x, *y);
      if (s >= tau_sim) found.emplace(key, s);
    }
  }
  std::vector<CandidateMatch> out;
  out.reserve(found.size());
  for (const auto& [key, s] : found) out.push_back({key.first, key.second, s});
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

std::vector<CandidateMatch> detect_candidates(const DescriptorStore& own, const DescriptorStore& foreign,
                                              double tau_sim) {
  std::vector<const ScanDescriptor*> a, b;
  for (const auto& [r, d] : own) a.push_back(&d);
  for (const auto& [r, d] : foreign) b.push_back(&d);
  return detect_candidates(a, b, tau_sim);
}

}  // namespace cslam::frontend
