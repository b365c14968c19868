#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "salman/embedding_io.hpp"
#include "salman/graph.hpp"
#include "salman/resistance.hpp"

namespace salman {

struct SparsifyConfig {
  /// Number of low-resistance-diameter contraction levels ("SPF").
  int spf_levels = 2;
  /// Fraction of the current level's edges, lowest d_eff first, offered for contraction.
  double contraction_quantile = 0.5;
  /// A merge is accepted while the accumulated supernode weight stays within
  /// diameter_factor * 2^(level-1) * (level threshold).
  double diameter_factor = 2.0;
  /// Prior variance of Theta = L + I / sigma^2 (diagnostic objective only).
  double sigma_sq = 1.0;
  /// k of the trace term; 0 means "number of embedding columns".
  Index trace_k = 0;

  void validate() const;
};

/// Supernodes after one level. Clusters are numbered by their lowest member.
struct SupernodeClustering {
  int level = 0;
  std::vector<Index> assignment;       // original node -> cluster
  std::vector<double> cluster_weight;  // accumulated eta per cluster
  double threshold = 0.0;              // d_eff at the contraction quantile
  double diameter_cap = 0.0;
};

/// One accepted contraction, in the order it happened.
struct MergeEvent {
  int level = 0;
  Index left = 0;   // lowest original node of each merged supernode
  Index right = 0;
  double resistance = 0.0;  // d_eff between the two supernodes at this level
  double eta = 0.0;         // accumulated weight of the merged supernode
};

/// Per-level d_eff split used by the level-soundness checks.
struct LevelTrace {
  std::vector<double> contracted;  // merged edges
  std::vector<double> deferred;    // under the threshold but rejected by the diameter cap
  std::vector<double> retained;    // above the threshold
};

struct SparsifiedManifold {
  WeightedGraph original;
  WeightedGraph sparse;
  std::vector<SupernodeClustering> clusterings;
  std::vector<MergeEvent> merges;
  std::vector<LevelTrace> levels;
  std::vector<double> ratios;  // rho per original edge
  std::vector<Edge> connectivity_edges;  // re-added by the guard
  int levels_completed = 0;
  bool stopped_early = false;
};

struct FidelityReport {
  double pearson = 0.0;
  double spearman = 0.0;
  double mse = 0.0;
  double rel_err = 0.0;
  double edge_pct = 0.0;
  Index n_pairs_sampled = 0;

  std::string to_json() const;
  static FidelityReport from_json(std::string_view text);
};

/// Builds the resistance estimator for a graph at a given level (0 = the input graph).
using EstimatorFactory = std::function<ResistanceEstimator(const WeightedGraph&, int level)>;

EstimatorFactory dense_estimator_factory();
EstimatorFactory krylov_estimator_factory(Index m, std::uint64_t seed);
/// Dense below kDenseModeLimit nodes (per graph), Krylov above.
EstimatorFactory estimator_factory(ModeChoice mode, Index m, std::uint64_t seed);

/// rho = w * d_eff for every edge, in edge order.
std::vector<double> distance_ratios(const WeightedGraph& g, const ResistanceEstimator& est);

/// Adds the highest-ratio dropped edges (Kruskal order, ties lexicographic)
/// until the kept edges connect every node the original graph connects.
std::vector<bool> connectivity_guard(const WeightedGraph& g, std::vector<bool> keep, std::span<const double> ratios,
                                     std::vector<Edge>* added = nullptr);

/// Keeps ceil(keep_fraction * |E|) highest-ratio edges plus guard edges.
WeightedGraph prune_low_ratio(const WeightedGraph& g, std::span<const double> ratios, double keep_fraction);

/// Multilevel low-resistance-diameter decomposition. The result keeps the
/// original edges that still join different supernodes after the last level,
/// at their original weights, plus guard edges.
SparsifiedManifold lrd_decompose(const WeightedGraph& g, const SparsifyConfig& config, const EstimatorFactory& factory);

/// Resistance fidelity of `sparse` against `original` over sampled node pairs
/// (every pair when N <= kDenseModeLimit). Both graphs must be connected.
FidelityReport validate_sparsification(const WeightedGraph& original, const WeightedGraph& sparse, Index n_pairs,
                                       std::uint64_t seed, ModeChoice mode = ModeChoice::automatic, Index m = 0);
FidelityReport validate_sparsification(const SparsifiedManifold& manifold, Index n_pairs, std::uint64_t seed,
                                       ModeChoice mode = ModeChoice::automatic, Index m = 0);

/// log det(L + I / sigma^2) - Tr(X^T (L + I / sigma^2) X) / k. Dense; small graphs only.
double pgm_objective(const WeightedGraph& g, const RowMatrix& x, double sigma_sq, Index trace_k = 0);

}  // namespace salman
