#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <vector>

#include "salman/graph.hpp"

namespace salman {

enum class ResistanceMode { dense, krylov };

/// Requested mode; `automatic` picks dense up to kDenseModeLimit nodes.
enum class ModeChoice { dense, krylov, automatic };

inline constexpr Index kDenseModeLimit = 1500;

ResistanceMode resolve_mode(ModeChoice choice, Index n_nodes);

/// 2 * ceil(log2 n), clamped to [1, n - 1].
Index default_krylov_dimension(Index n_nodes);

struct KrylovOptions {
  Index m = 0;  // 0 selects default_krylov_dimension
  std::uint64_t seed = 0;
  /// The part r of e_pq outside the Krylov space is charged r^T M r with
  /// M = sum_{k < complement_terms} D^-1 (A D^-1)^k, a truncated Neumann series
  /// for L^+. 0 gives the pure projected sum, 1 the Jacobi (D^-1) estimate.
  int complement_terms = 3;
};

/// Effective-resistance oracle for one connected graph. Immutable once built;
/// queries are safe from any number of threads.
class ResistanceEstimator {
 public:
  /// Moore-Penrose pseudoinverse of L from its eigendecomposition with the
  /// constant eigenvector deflated.
  static ResistanceEstimator dense(const WeightedGraph& g);

  /// Rayleigh-Ritz vectors of L over span{c, Ac, ..., A^(m-1) c}, with A the
  /// weighted adjacency and c a seeded Gaussian vector. Every basis vector is
  /// orthogonal to the ones vector.
  static ResistanceEstimator krylov(const WeightedGraph& g, const KrylovOptions& options = {});

  static ResistanceEstimator build(const WeightedGraph& g, ResistanceMode mode, const KrylovOptions& options = {});

  ResistanceMode mode() const { return mode_; }
  Index n_nodes() const { return n_; }

  /// d_eff(p, q); 0 when p == q.
  double operator()(Index p, Index q) const;

  const Eigen::MatrixXd& pseudoinverse() const;

  /// n x m' orthonormal basis (m' < m after a Krylov breakdown).
  const Eigen::MatrixXd& basis() const;
  /// x_i^T L x_i for every basis column.
  const Eigen::VectorXd& rayleigh_quotients() const { return theta_; }
  Index krylov_dimension() const { return basis_.cols(); }
  const KrylovOptions& krylov_options() const { return options_; }

 private:
  ResistanceMode mode_ = ResistanceMode::dense;
  Index n_ = 0;
  KrylovOptions options_;
  Eigen::MatrixXd pinv_;
  Eigen::MatrixXd basis_;
  Eigen::VectorXd theta_;
  Eigen::VectorXd inv_theta_;  // 0 for skipped near-nullspace terms
  Eigen::VectorXd inv_degree_;
  std::shared_ptr<const WeightedGraph> graph_;  // neighbourhoods for the complement terms
  int series_terms_ = 0;
  // With M = sum_k M_k and G = X^T M X: C = M X, Q = X G, and per node
  // self_(p) = M_pp - 2 X_p.C_p + X_p.Q_p.
  Eigen::MatrixXd series_cross_;
  Eigen::MatrixXd series_quad_;
  Eigen::VectorXd series_self_;

  double series_off_diagonal(Index p, Index q) const;
};

double dense_effective_resistance(const ResistanceEstimator& est, Index p, Index q);
double approx_effective_resistance(const ResistanceEstimator& est, Index p, Index q);
ResistanceEstimator build_krylov_estimator(const WeightedGraph& g, Index m, std::uint64_t seed);

/// d_eff for every edge of g, in edge order.
std::vector<double> edge_resistances(const ResistanceEstimator& est, const WeightedGraph& g);

}  // namespace salman
