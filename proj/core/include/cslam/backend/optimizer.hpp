#pragma once

#include <map>
#include <vector>

#include "cslam/backend/pose_graph.hpp"

namespace cslam::backend {

/// sqrt of the 0.99 chi-square quantile with 3 degrees of freedom.
inline constexpr double kDefaultGncThreshold = 3.368214;

struct GncConfig {
  /// When false every loop weight stays pinned at 1 (plain least squares).
  bool robust = true;
  /// Inlier threshold on the information-weighted residual norm.
  double c = kDefaultGncThreshold;
  double mu_update_factor = 1.4;
  int max_outer_iterations = 100;
  /// Weights within this distance of 0 or 1 count as converged.
  double weight_tolerance = 1e-4;
  int max_lm_iterations = 100;
  double lm_relative_tolerance = 1e-10;
};

struct OptimizationResult {
  std::map<NodeKey, Pose2> poses;
  /// Final weight of each loop edge, keyed by its index in graph.edges().
  std::map<std::size_t, double> loop_weights;
  double final_cost = 0.0;
  /// GNC outer iterations (1 for the non-robust mode).
  int iterations = 0;
  int lm_iterations = 0;
};

/// Robust pose graph optimization with `anchor` held at its current
/// estimate. Throws DisconnectedGraph when the graph has several components
/// and SolverDiverged when Levenberg-Marquardt cannot make progress.
OptimizationResult optimize(const PoseGraph& graph, const GncConfig& gnc, NodeKey anchor);

/// Anchors the lowest node key.
OptimizationResult optimize(const PoseGraph& graph, const GncConfig& gnc);

/// Initial guess: odometry chains placed relative to each other by the loop
/// hypothesis with the largest agreeing support, starting from the anchor.
std::map<NodeKey, Pose2> initial_guess(const PoseGraph& graph, NodeKey anchor);

/// Sum over edges of w_e * r_e^T * Omega_e * r_e (odometry weight is 1).
double graph_cost(const PoseGraph& graph, const std::map<NodeKey, Pose2>& poses,
                  const std::map<std::size_t, double>& loop_weights = {});

/// Truncated-least-squares GNC weight for a squared weighted residual.
double tls_weight(double residual_sq, double c, double mu);

}  // namespace cslam::backend
