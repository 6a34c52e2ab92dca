#include "cslam/frontend/prioritize.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace cslam::frontend {

int SelectionGraph::add_vertex(KeyframeRef ref) {
  const auto [it, inserted] = index.emplace(ref, static_cast<int>(index.size()));
  return it->second;
}

Eigen::MatrixXd SelectionGraph::laplacian() const {
  const auto n = static_cast<Eigen::Index>(index.size());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] : edges) {
    l(i, i) += 1;
    l(j, j) += 1;
    l(i, j) -= 1;
    l(j, i) -= 1;
  }
  return l;
}

SelectionGraph selection_graph(const backend::PoseGraph& graph, const std::vector<CandidateMatch>& candidates) {
  std::map<RobotId, int> last;
  auto see = [&](RobotId r, int kf) {
    auto [it, inserted] = last.emplace(r, kf);
    if (!inserted) it->second = std::max(it->second, kf);
  };
  for (const auto& [key, pose] : graph.nodes()) see(key.robot, key.keyframe);
  for (const auto& c : candidates) {
    see(c.a.robot, c.a.keyframe);
    see(c.b.robot, c.b.keyframe);
  }
  SelectionGraph g;
  for (const auto& [robot, kf_max] : last) {
    for (int k = 0; k <= kf_max; ++k) g.add_vertex({robot, k});
  }
  for (const auto& [robot, kf_max] : last) {
    for (int k = 0; k < kf_max; ++k) g.edges.emplace_back(g.index.at({robot, k}), g.index.at({robot, k + 1}));
  }
  for (const auto& e : graph.edges()) {
    if (!e.is_loop()) continue;
    g.edges.emplace_back(g.index.at({e.from.robot, e.from.keyframe}), g.index.at({e.to.robot, e.to.keyframe}));
  }
  return g;
}

double algebraic_connectivity(const Eigen::MatrixXd& laplacian) {
  if (laplacian.rows() < 2) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(laplacian, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(1);
}

namespace {

/// Smallest root of 1 + sum_k z_k / (d_k - mu) in (lo, hi), the function
/// being increasing there.
double secular_root(const std::vector<double>& d, const std::vector<double>& z2, double lo, double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    double f = 1.0;
    for (std::size_t k = 0; k < d.size(); ++k) f += z2[k] / (d[k] - mid);
    if (f < 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double lambda2_rank_one(const Eigen::VectorXd& evals, const Eigen::MatrixXd& evecs, int i, int j) {
  const Eigen::Index n = evals.size();
  if (n < 2) return 0.0;
  const double scale = std::max(1.0, evals(n - 1));
  const double merge_tol = 1e-9 * scale;
  const double deflate_tol = 1e-20;

  std::vector<double> fixed;  // eigenvalues of L that survive unchanged
  std::vector<double> d, z2;  // poles and squared weights of the secular equation
  Eigen::Index k = 0;
  while (k < n) {
    Eigen::Index end = k + 1;
    while (end < n && evals(end) - evals(k) <= merge_tol) ++end;
    double w = 0.0, mean = 0.0;
    for (Eigen::Index m = k; m < end; ++m) {
      const double zk = evecs(i, m) - evecs(j, m);
      w += zk * zk;
      mean += evals(m);
    }
    mean /= static_cast<double>(end - k);
    const auto copies = static_cast<std::size_t>(end - k) - (w > deflate_tol ? 1 : 0);
    fixed.insert(fixed.end(), copies, mean);
    if (w > deflate_tol) {
      d.push_back(mean);
      z2.push_back(w);
    }
    k = end;
  }

  std::vector<double> spectrum = fixed;
  double total = 0.0;
  for (double w : z2) total += w;
  for (std::size_t p = 0; p < d.size() && p < 2; ++p) {
    const double hi = p + 1 < d.size() ? d[p + 1] : d[p] + total;
    spectrum.push_back(secular_root(d, z2, d[p], hi));
  }
  std::partial_sort(spectrum.begin(), spectrum.begin() + 2, spectrum.end());
  return std::max(spectrum[1], 0.0);
}

using Scorer = std::vector<double> (*)(const Eigen::MatrixXd&, const std::vector<std::pair<int, int>>&);

std::vector<double> dense_scores(const Eigen::MatrixXd& laplacian, const std::vector<std::pair<int, int>>& edges) {
  std::vector<double> out;
  out.reserve(edges.size());
  for (const auto& [i, j] : edges) {
    Eigen::MatrixXd l = laplacian;
    l(i, i) += 1;
    l(j, j) += 1;
    l(i, j) -= 1;
    l(j, i) -= 1;
    out.push_back(algebraic_connectivity(l));
  }
  return out;
}

/// Number of k-subsets of n items, saturating at `cap` + 1.
std::size_t subsets(std::size_t n, std::size_t k, std::size_t cap) {
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    if (c > static_cast<double>(cap)) return cap + 1;
  }
  return static_cast<std::size_t>(std::llround(c));
}

/// Best k-subset by enumeration, in lexicographic order of pool positions so
/// that ties keep the higher-ranked candidates.
std::vector<std::size_t> exact(const Eigen::MatrixXd& base, const std::vector<std::pair<int, int>>& cand_edges,
                               std::size_t k) {
  const std::size_t n = cand_edges.size();
  std::vector<std::size_t> pick(k), best;
  for (std::size_t i = 0; i < k; ++i) pick[i] = i;
  double best_value = -1.0;
  while (true) {
    Eigen::MatrixXd l = base;
    for (std::size_t c : pick) {
      const auto [i, j] = cand_edges[c];
      l(i, i) += 1;
      l(j, j) += 1;
      l(i, j) -= 1;
      l(j, i) -= 1;
    }
    const double v = algebraic_connectivity(l);
    if (v > best_value + 1e-9 * std::max(1.0, best_value)) {
      best_value = v;
      best = pick;
    }
    std::size_t i = k;
    while (i > 0 && pick[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t m = i; m < k; ++m) pick[m] = pick[m - 1] + 1;
  }
  return best;
}

std::vector<CandidateMatch> greedy(const std::vector<CandidateMatch>& candidates, const backend::PoseGraph& graph,
                                   Budget budget, Scorer score) {
  std::vector<CandidateMatch> pool = candidates;
  std::sort(pool.begin(), pool.end(), ranks_before);
  if (budget.max_matches_per_round >= pool.size()) return pool;

  SelectionGraph g = selection_graph(graph, pool);
  std::vector<std::pair<int, int>> cand_edges;
  for (const auto& c : pool) cand_edges.emplace_back(g.index.at(c.a), g.index.at(c.b));

  std::vector<CandidateMatch> chosen;
  Eigen::MatrixXd lap = g.laplacian();
  if (budget.max_matches_per_round == 0) return chosen;
  if (subsets(pool.size(), budget.max_matches_per_round, kMaxExactSubsets) <= kMaxExactSubsets) {
    for (std::size_t c : exact(lap, cand_edges, budget.max_matches_per_round)) chosen.push_back(pool[c]);
    return chosen;
  }
  std::vector<bool> used(pool.size(), false);
  while (chosen.size() < budget.max_matches_per_round) {
    std::vector<std::pair<int, int>> open;
    std::vector<std::size_t> open_idx;
    for (std::size_t c = 0; c < pool.size(); ++c) {
      if (used[c]) continue;
      open.push_back(cand_edges[c]);
      open_idx.push_back(c);
    }
    const auto values = score(lap, open);
    // Pool is in ranking order, so the first maximum already wins ties.
    std::size_t best = 0;
    const double tol = 1e-9 * std::max(1.0, *std::max_element(values.begin(), values.end()));
    for (std::size_t k = 1; k < values.size(); ++k) {
      if (values[k] > values[best] + tol) best = k;
    }
    const std::size_t c = open_idx[best];
    used[c] = true;
    chosen.push_back(pool[c]);
    const auto [i, j] = cand_edges[c];
    lap(i, i) += 1;
    lap(j, j) += 1;
    lap(i, j) -= 1;
    lap(j, i) -= 1;
  }
  return chosen;
}

}  // namespace

std::vector<double> lambda2_after_edge(const Eigen::MatrixXd& laplacian, const std::vector<std::pair<int, int>>& edges) {
  std::vector<double> out;
  out.reserve(edges.size());
  if (edges.empty()) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(laplacian);
  for (const auto& [i, j] : edges) out.push_back(lambda2_rank_one(es.eigenvalues(), es.eigenvectors(), i, j));
  return out;
}

std::vector<CandidateMatch> prioritize(const std::vector<CandidateMatch>& candidates,
                                       const backend::PoseGraph& graph, Budget budget) {
  return greedy(candidates, graph, budget, &lambda2_after_edge);
}

std::vector<CandidateMatch> prioritize_dense(const std::vector<CandidateMatch>& candidates,
                                             const backend::PoseGraph& graph, Budget budget) {
  return greedy(candidates, graph, budget, &dense_scores);
}

}  // namespace cslam::frontend
