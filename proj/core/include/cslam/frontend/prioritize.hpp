#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cslam/backend/pose_graph.hpp"
#include "cslam/frontend/candidates.hpp"

namespace cslam::frontend {

struct Budget {
  std::size_t max_matches_per_round = std::numeric_limits<std::size_t>::max();

  static Budget unlimited() { return {}; }
  bool is_unlimited() const { return max_matches_per_round == std::numeric_limits<std::size_t>::max(); }
};

/// Unit-weight graph over keyframes used to score candidates.
struct SelectionGraph {
  std::map<KeyframeRef, int> index;
  std::vector<std::pair<int, int>> edges;

  int add_vertex(KeyframeRef ref);
  Eigen::MatrixXd laplacian() const;
};

/// Odometry chains of every robot up to the highest keyframe seen in the
/// graph or the candidates, plus the graph's loop edges.
SelectionGraph selection_graph(const backend::PoseGraph& graph, const std::vector<CandidateMatch>& candidates);

/// Second smallest eigenvalue of a symmetric Laplacian (0 for n < 2).
double algebraic_connectivity(const Eigen::MatrixXd& laplacian);

/// lambda_2 of L + (e_i - e_j)(e_i - e_j)^T for every (i, j) in `edges`,
/// from one eigendecomposition of L and the rank-one secular equation.
std::vector<double> lambda2_after_edge(const Eigen::MatrixXd& laplacian, const std::vector<std::pair<int, int>>& edges);

/// Largest number of k-subsets searched exhaustively.
inline constexpr std::size_t kMaxExactSubsets = 256;

/// Budgeted selection maximizing lambda_2 of the selection graph plus the
/// chosen candidates. Small pools (at most kMaxExactSubsets subsets) are
/// searched exhaustively and returned in ranking order; larger ones are
/// chosen greedily one candidate at a time. Ties go to higher similarity,
/// then to lexicographic keyframe order. Returns every candidate, in
/// ranking order, when the budget covers them.
std::vector<CandidateMatch> prioritize(const std::vector<CandidateMatch>& candidates,
                                       const backend::PoseGraph& graph, Budget budget);

/// Same selection rule with greedy steps scored by a dense eigensolve per
/// candidate.
std::vector<CandidateMatch> prioritize_dense(const std::vector<CandidateMatch>& candidates,
                                             const backend::PoseGraph& graph, Budget budget);

}  // namespace cslam::frontend
