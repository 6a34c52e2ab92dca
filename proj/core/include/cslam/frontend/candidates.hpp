#pragma once

#include <compare>
#include <map>
#include <set>
#include <vector>

#include "cslam/comms/message.hpp"
#include "cslam/frontend/descriptor.hpp"

namespace cslam::frontend {

struct CandidateMatch {
  KeyframeRef a;
  KeyframeRef b;
  double similarity = 0.0;
  auto operator<=>(const CandidateMatch&) const = default;
};

using DescriptorStore = std::map<KeyframeRef, ScanDescriptor>;

/// Local descriptors whose refs are absent from `peer_known`.
comms::DescriptorBatch missing_descriptors(const DescriptorStore& local, const std::set<KeyframeRef>& peer_known);

/// missing_descriptors wrapped as a DescriptorBatch message.
comms::Message sync_descriptors(const DescriptorStore& local, const std::set<KeyframeRef>& peer_known,
                                RobotId src, RobotId dst, double now);

/// Inter-robot pairs with similarity >= tau_sim, each unordered pair once
/// with a < b, sorted by descending similarity and then by (a, b).
std::vector<CandidateMatch> detect_candidates(const std::vector<const ScanDescriptor*>& own,
                                              const std::vector<const ScanDescriptor*>& foreign, double tau_sim);

std::vector<CandidateMatch> detect_candidates(const DescriptorStore& own, const DescriptorStore& foreign,
                                              double tau_sim);

/// Canonical order used for ranking: descending similarity, then (a, b).
bool ranks_before(const CandidateMatch& x, const CandidateMatch& y);

}  // namespace cslam::frontend
