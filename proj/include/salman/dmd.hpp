#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "salman/graph.hpp"
#include "salman/resistance.hpp"

namespace salman {

/// Input manifold G_X and output manifold G_Y over the same samples.
class ManifoldPair {
 public:
  /// Throws unless both graphs have the same node count and ids; throws
  /// DisconnectedGraphError if either graph is disconnected.
  ManifoldPair(WeightedGraph g_x, WeightedGraph g_y);

  const WeightedGraph& g_x() const { return g_x_; }
  const WeightedGraph& g_y() const { return g_y_; }
  Index n_nodes() const { return g_x_.n_nodes(); }
  const std::vector<std::string>& node_ids() const { return g_x_.node_ids(); }

 private:
  WeightedGraph g_x_;
  WeightedGraph g_y_;
};

/// gamma(p, q) = d_eff_Y(p, q) / d_eff_X(p, q).
double pair_dmd(const ManifoldPair& mp, Index p, Index q, const ResistanceEstimator& est_x,
                const ResistanceEstimator& est_y);

struct PairGamma {
  Index p = 0;
  Index q = 0;
  double gamma = 0.0;
};

/// gamma over every pair adjacent in G_X or G_Y, sorted by (p, q) with p < q.
std::vector<PairGamma> neighbor_pair_gammas(const ManifoldPair& mp, const ResistanceEstimator& est_x,
                                            const ResistanceEstimator& est_y);

enum class Neighborhood { union_of_graphs, intersection_of_graphs };

/// Mean of gamma^3 + gamma^-3 over each node's neighbors. With the
/// intersection rule a node without common neighbors falls back to the union.
std::vector<double> salman_scores(const ManifoldPair& mp, const ResistanceEstimator& est_x,
                                  const ResistanceEstimator& est_y, Neighborhood rule = Neighborhood::union_of_graphs);
std::vector<double> salman_scores(const ManifoldPair& mp, std::span<const PairGamma> gammas,
                                  Neighborhood rule = Neighborhood::union_of_graphs);

struct SpectralOptions {
  /// Dense generalized eigensolver up to this many nodes, Lanczos above.
  Index dense_limit = 2000;
  /// Cap on Lanczos steps; exceeding it without convergence throws.
  Index max_iterations = 600;
  double tolerance = 1e-7;
  std::uint64_t seed = 0;
};

/// Largest r eigenpairs of L_a v = lambda L_b v on the ones-orthogonal
/// subspace. Columns of `vectors` satisfy v^T L_b v = 1.
struct GeneralizedEigenpairs {
  Eigen::VectorXd values;  // descending
  Eigen::MatrixXd vectors;
};

GeneralizedEigenpairs top_generalized_eigenpairs(const WeightedGraph& a, const WeightedGraph& b, Index r,
                                                 const SpectralOptions& options = {});

/// lambda_max(L_Y^+ L_X), an upper bound on every gamma.
double gamma_max_bound(const ManifoldPair& mp, const SpectralOptions& options = {});
/// 1 / lambda_max(L_X^+ L_Y), a lower bound on every gamma.
double gamma_min_bound(const ManifoldPair& mp, const SpectralOptions& options = {});

/// V_r column i is sqrt(lambda_i) v_i with v_i = L_Y^+ u_i and the u_i
/// L_X^+-orthonormal, so that ||V_r^T e||^2 = sum alpha_i^2 lambda_i^3 for
/// e = sum alpha_i u_i. W_r is built the same way with the roles of X and Y swapped.
struct Eigensubspace {
  Eigen::VectorXd lambda;
  Eigen::VectorXd mu;
  Eigen::MatrixXd v_r;
  Eigen::MatrixXd w_r;
};

Eigensubspace eigensubspace(const ManifoldPair& mp, Index r, const SpectralOptions& options = {});

/// ||W_r^T e_pq||^2 + ||V_r^T e_pq||^2.
double eigensubspace_pair_score(const Eigen::MatrixXd& v_r, const Eigen::MatrixXd& w_r, Index p, Index q);

struct DmdOptions {
  ModeChoice mode = ModeChoice::automatic;
  Index m = 0;
  std::uint64_t seed = 0;
  Index r = 5;  // 0 skips the eigensubspace
  bool bounds = true;
  SpectralOptions spectral;
};

struct DmdReport {
  std::vector<PairGamma> pair_gamma;
  std::vector<double> node_scores;
  std::vector<double> node_scores_intersection;
  /// Spearman correlation of the union and intersection scores.
  double neighborhood_spearman = 1.0;
  bool has_bounds = false;
  double gamma_max_bound = 0.0;
  double gamma_min_bound = 0.0;
  Index r = 0;
  Eigensubspace subspace;
  ResistanceMode mode = ResistanceMode::dense;
  Index krylov_dimension = 0;

  /// Bounds, eigenvalues, per-pair gamma and summary statistics. V_r and W_r
  /// are included when `with_subspace` is set.
  std::string to_json(const std::vector<std::string>& node_ids, bool with_subspace = false) const;
};

DmdReport compute_dmd(const ManifoldPair& mp, const DmdOptions& options = {});

}  // namespace salman
