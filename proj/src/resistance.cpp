#include "salman/resistance.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include <cmath>
#include <random>

namespace salman {
namespace {

void require_connected(const WeightedGraph& g) {
  if (g.n_nodes() < 2) throw Error("resistance: graph needs at least 2 nodes");
  Index count = 0;
  connected_components(g, &count);
  if (count != 1)
    throw DisconnectedGraphError("resistance: graph has " + std::to_string(count) + " connected components");
}

void check_pair(Index n, Index p, Index q) {
  if (p < 0 || q < 0 || p >= n || q >= n)
    throw Error("resistance query out of range (" + std::to_string(p) + ", " + std::to_string(q) + ")");
}

}  // namespace

ResistanceMode resolve_mode(ModeChoice choice, Index n_nodes) {
  switch (choice) {
    case ModeChoice::dense: return ResistanceMode::dense;
    case ModeChoice::krylov: return ResistanceMode::krylov;
    case ModeChoice::automatic: break;
  }
  return n_nodes <= kDenseModeLimit ? ResistanceMode::dense : ResistanceMode::krylov;
}

Index default_krylov_dimension(Index n_nodes) {
  if (n_nodes < 2) return 1;
  const Index m = 2 * static_cast<Index>(std::ceil(std::log2(static_cast<double>(n_nodes))));
  return std::clamp<Index>(m, 1, n_nodes - 1);
}

ResistanceEstimator ResistanceEstimator::dense(const WeightedGraph& g) {
  require_connected(g);
  ResistanceEstimator est;
  est.mode_ = ResistanceMode::dense;
  est.n_ = g.n_nodes();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense_laplacian(g));
  if (eig.info() != Eigen::Success) throw Error("dense resistance: eigendecomposition failed");
  // Eigenvalues ascend; column 0 is the constant vector of a connected graph.
  const Index n = est.n_;
  Eigen::MatrixXd scaled = eig.eigenvectors().rightCols(n - 1);
  for (Index i = 0; i < n - 1; ++i) scaled.col(i) /= std::sqrt(eig.eigenvalues()(i + 1));
  est.pinv_ = scaled * scaled.transpose();
  return est;
}

ResistanceEstimator ResistanceEstimator::krylov(const WeightedGraph& g, const KrylovOptions& options) {
  require_connected(g);
  const Index n = g.n_nodes();
  const Index m = options.m > 0 ? options.m : default_krylov_dimension(n);
  if (m >= n) throw Error("krylov dimension m = " + std::to_string(m) + " must be < n_nodes = " + std::to_string(n));

  ResistanceEstimator est;
  est.mode_ = ResistanceMode::krylov;
  est.n_ = n;
  est.options_ = options;
  est.options_.m = m;

  const Eigen::SparseMatrix<double> adj = adjacency_matrix(g);
  const Eigen::VectorXd ones = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));

  auto rng = stage_rng(options.seed, "krylov");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = gauss(rng);

  Eigen::MatrixXd q(n, m);
  Index rank = 0;
  for (Index i = 0; i < m; ++i) {
    const double raw = v.norm();
    // Modified Gram-Schmidt, two passes.
    for (int pass = 0; pass < 2; ++pass) {
      v -= ones.dot(v) * ones;
      for (Index j = 0; j < rank; ++j) v -= q.col(j).dot(v) * q.col(j);
    }
    const double norm = v.norm();
    if (!(norm > 1e-10 * raw) || raw == 0.0) {
      warn("krylov breakdown at dimension " + std::to_string(rank) + " of " + std::to_string(m) +
           "; continuing with the achieved rank");
      break;
    }
    q.col(rank++) = v / norm;
    if (i + 1 < m) v = adj * q.col(rank - 1);
  }
  q.conservativeResize(n, rank);

  const Eigen::SparseMatrix<double> lap = laplacian_matrix(g);
  Eigen::MatrixXd projected = q.transpose() * (lap * q);
  projected = 0.5 * (projected + projected.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(projected);
  if (ritz.info() != Eigen::Success) throw Error("krylov resistance: projected eigenproblem failed");
  est.basis_ = q * ritz.eigenvectors();
  est.theta_ = ritz.eigenvalues();
  est.inv_theta_.resize(rank);
  Index skipped = 0;
  for (Index i = 0; i < rank; ++i) {
    if (est.theta_(i) < 1e-14) {
      est.inv_theta_(i) = 0.0;
      ++skipped;
    } else {
      est.inv_theta_(i) = 1.0 / est.theta_(i);
    }
  }
  if (skipped) warn("krylov resistance: skipped " + std::to_string(skipped) + " near-nullspace basis vector(s)");

  if (options.complement_terms < 0 || options.complement_terms > 3)
    throw Error("krylov resistance: complement_terms must be in [0, 3]");
  const int terms = options.complement_terms;
  est.series_terms_ = terms;
  est.inv_degree_ = g.weighted_degrees().cwiseInverse();
  if (terms == 0) return est;
  if (terms >= 2) est.graph_ = std::make_shared<const WeightedGraph>(g);

  // Diagonal of M_0 + M_1 + M_2; M_1 has a zero diagonal.
  Eigen::VectorXd diag = est.inv_degree_;
  if (terms >= 3)
    for (Index p = 0; p < n; ++p) {
      double s = 0.0;
      for (const auto& nb : g.neighbors(p)) s += nb.weight * nb.weight * est.inv_degree_(nb.node);
      diag(p) += s * est.inv_degree_(p) * est.inv_degree_(p);
    }
  // M_0 X = D^-1 X and M_{k+1} X = D^-1 A M_k X.
  Eigen::MatrixXd mx = est.inv_degree_.asDiagonal() * est.basis_;
  est.series_cross_ = mx;
  for (int k = 1; k < terms; ++k) {
    mx = est.inv_degree_.asDiagonal() * (adj * mx);
    est.series_cross_ += mx;
  }
  Eigen::MatrixXd gram = est.basis_.transpose() * est.series_cross_;
  gram = 0.5 * (gram + gram.transpose()).eval();
  est.series_quad_ = est.basis_ * gram;
  est.series_self_ = diag - 2.0 * est.basis_.cwiseProduct(est.series_cross_).rowwise().sum() +
                     est.basis_.cwiseProduct(est.series_quad_).rowwise().sum();
  return est;
}

ResistanceEstimator ResistanceEstimator::build(const WeightedGraph& g, ResistanceMode mode, const KrylovOptions& options) {
  return mode == ResistanceMode::dense ? dense(g) : krylov(g, options);
}

double ResistanceEstimator::operator()(Index p, Index q) const {
  check_pair(n_, p, q);
  if (p == q) return 0.0;
  if (mode_ == ResistanceMode::dense) return pinv_(p, p) + pinv_(q, q) - 2.0 * pinv_(p, q);

  const auto xp = basis_.row(p), xq = basis_.row(q);
  const double value = (xp - xq).cwiseAbs2().dot(inv_theta_.transpose());
  if (series_terms_ == 0) return value;
  // r = e - X a with a = X^T e; r^T M r expanded over the per-node tables.
  const double cross = series_off_diagonal(p, q) - xp.dot(series_cross_.row(q)) - xq.dot(series_cross_.row(p)) +
                       xp.dot(series_quad_.row(q));
  const double residual = series_self_(p) + series_self_(q) - 2.0 * cross;
  return value + std::max(0.0, residual);
}

// (M_1 + M_2)_pq for p != q, truncated to the configured number of terms.
double ResistanceEstimator::series_off_diagonal(Index p, Index q) const {
  if (series_terms_ < 2) return 0.0;
  const Index e = graph_->find_edge(p, q);
  double out = e < 0 ? 0.0 : graph_->edges()[static_cast<std::size_t>(e)].weight * inv_degree_(p) * inv_degree_(q);
  if (series_terms_ < 3) return out;
  // Paths p - j - q through common neighbours; both lists are sorted by node.
  const auto np = graph_->neighbors(p), nq = graph_->neighbors(q);
  double s = 0.0;
  for (auto i = np.begin(), j = nq.begin(); i != np.end() && j != nq.end();) {
    if (i->node < j->node) {
      ++i;
    } else if (j->node < i->node) {
      ++j;
    } else {
      s += i->weight * j->weight * inv_degree_(i->node);
      ++i;
      ++j;
    }
  }
  return out + s * inv_degree_(p) * inv_degree_(q);
}

const Eigen::MatrixXd& ResistanceEstimator::pseudoinverse() const {
  if (mode_ != ResistanceMode::dense) throw Error("pseudoinverse is only stored by dense estimators");
  return pinv_;
}

const Eigen::MatrixXd& ResistanceEstimator::basis() const {
  if (mode_ != ResistanceMode::krylov) throw Error("basis is only stored by krylov estimators");
  return basis_;
}

double dense_effective_resistance(const ResistanceEstimator& est, Index p, Index q) {
  if (est.mode() != ResistanceMode::dense) throw Error("dense_effective_resistance needs a dense estimator");
  return est(p, q);
}

double approx_effective_resistance(const ResistanceEstimator& est, Index p, Index q) {
  if (est.mode() != ResistanceMode::krylov) throw Error("approx_effective_resistance needs a krylov estimator");
  return est(p, q);
}

ResistanceEstimator build_krylov_estimator(const WeightedGraph& g, Index m, std::uint64_t seed) {
  KrylovOptions options;
  options.m = m;
  options.seed = seed;
  return ResistanceEstimator::krylov(g, options);
}

std::vector<double> edge_resistances(const ResistanceEstimator& est, const WeightedGraph& g) {
  if (est.n_nodes() != g.n_nodes()) throw Error("edge_resistances: estimator built for a different graph");
  std::vector<double> out(g.edges().size());
  parallel_for(g.n_edges(), [&](Index k) {
    const auto& e = g.edges()[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(k)] = est(e.u, e.v);
  });
  return out;
}

}  // namespace salman
