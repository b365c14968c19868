#include "salman/dmd.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <tuple>

#include <json.hpp>

#include "salman/stats.hpp"

namespace salman {
namespace {

constexpr double kDegenerateDistance = 1e-14;

std::string pair_name(const ManifoldPair& mp, Index p, Index q) {
  const auto& ids = mp.node_ids();
  return "(" + ids[static_cast<std::size_t>(p)] + ", " + ids[static_cast<std::size_t>(q)] + ")";
}

// Sign convention: the entry of largest magnitude (first on ties) is positive.
void fix_signs(Eigen::MatrixXd& vectors) {
  for (Index j = 0; j < vectors.cols(); ++j) {
    Index at = 0;
    vectors.col(j).cwiseAbs().maxCoeff(&at);
    if (vectors(at, j) < 0.0) vectors.col(j) *= -1.0;
  }
}

GeneralizedEigenpairs dense_pairs(const WeightedGraph& a, const WeightedGraph& b, Index r) {
  const Index n = a.n_nodes();
  const Eigen::MatrixXd la = dense_laplacian(a);
  // L_b + 11^T/n is positive definite and acts as L_b on the ones-orthogonal subspace.
  Eigen::MatrixXd lb = dense_laplacian(b);
  lb.array() += 1.0 / static_cast<double>(n);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(la, lb, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) throw Error("generalized eigensolver failed");
  GeneralizedEigenpairs out;
  out.values = solver.eigenvalues().tail(r).reverse();
  out.vectors = solver.eigenvectors().rightCols(r).rowwise().reverse();
  fix_signs(out.vectors);
  return out;
}

// Lanczos for L_b^+ L_a, self-adjoint in the L_b inner product, with full
// reorthogonalization; L_b^+ products are CG solves on the ones-orthogonal subspace.
GeneralizedEigenpairs lanczos_pairs(const WeightedGraph& a, const WeightedGraph& b, Index r,
                                    const SpectralOptions& options) {
  const Index n = a.n_nodes();
  const Eigen::SparseMatrix<double> la = laplacian_matrix(a);
  const Eigen::SparseMatrix<double> lb = laplacian_matrix(b);
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(1e-12);
  cg.setMaxIterations(std::max<Index>(1000, 10 * n));
  cg.compute(lb);

  auto deflate = [](Eigen::VectorXd& x) { x.array() -= x.mean(); };
  auto solve_b = [&](Eigen::VectorXd rhs) {
    deflate(rhs);
    Eigen::VectorXd x = cg.solve(rhs);
    deflate(x);
    return x;
  };

  const Index cap = std::min(n - 1, std::max(options.max_iterations, r + 1));
  Eigen::MatrixXd q_basis(n, cap), bq(n, cap), aq(n, cap);

  auto rng = stage_rng(options.seed, "lanczos");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd q(n);
  for (Index i = 0; i < n; ++i) q[i] = gauss(rng);
  deflate(q);
  q /= std::sqrt(q.dot(lb * q));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz;
  Index k = 0;
  bool converged = false;
  while (k < cap) {
    q_basis.col(k) = q;
    bq.col(k) = lb * q;
    aq.col(k) = la * q;
    Eigen::VectorXd w = solve_b(aq.col(k));
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd coeff = bq.leftCols(k + 1).transpose() * w;
      w -= q_basis.leftCols(k + 1) * coeff;
    }
    const double beta = std::sqrt(std::max(0.0, w.dot(lb * w)));
    ++k;

    if (k >= r) {
      const Eigen::MatrixXd h = q_basis.leftCols(k).transpose() * aq.leftCols(k);
      ritz.compute(0.5 * (h + h.transpose()));
      const Eigen::VectorXd theta = ritz.eigenvalues().tail(r);
      const Eigen::MatrixXd y = ritz.eigenvectors().rightCols(r);
      converged = k == n - 1;
      if (!converged) {
        converged = true;
        for (Index i = 0; i < r; ++i)
          if (beta * std::abs(y(k - 1, i)) > options.tolerance * std::max(std::abs(theta[i]), 1e-300)) converged = false;
      }
    }
    if (converged) break;
    if (beta <= 1e-13 * std::sqrt(std::abs(aq.col(k - 1).dot(q)) + 1e-300)) {
      // Invariant subspace reached before r Ritz pairs settled.
      if (k >= r) {
        converged = true;
        break;
      }
      throw Error("generalized Lanczos broke down before reaching rank " + std::to_string(r));
    }
    q = w / beta;
  }
  if (!converged)
    throw Error("generalized eigensolver did not converge after " + std::to_string(cap) + " iterations");

  GeneralizedEigenpairs out;
  out.values = ritz.eigenvalues().tail(r).reverse();
  out.vectors = q_basis.leftCols(k) * ritz.eigenvectors().rightCols(r).rowwise().reverse();
  fix_signs(out.vectors);
  return out;
}

}  // namespace

ManifoldPair::ManifoldPair(WeightedGraph g_x, WeightedGraph g_y) : g_x_(std::move(g_x)), g_y_(std::move(g_y)) {
  if (g_x_.n_nodes() != g_y_.n_nodes()) throw Error("manifold pair: node counts differ");
  if (g_x_.node_ids() != g_y_.node_ids()) throw Error("manifold pair: node ids differ");
  if (g_x_.n_nodes() < 2) throw Error("manifold pair: at least 2 nodes required");
  if (!is_connected(g_x_)) throw DisconnectedGraphError("manifold pair: G_X is not connected");
  if (!is_connected(g_y_)) throw DisconnectedGraphError("manifold pair: G_Y is not connected");
}

double pair_dmd(const ManifoldPair& mp, Index p, Index q, const ResistanceEstimator& est_x,
                const ResistanceEstimator& est_y) {
  if (p == q) throw Error("pair_dmd: p and q must differ");
  if (est_x.n_nodes() != mp.n_nodes() || est_y.n_nodes() != mp.n_nodes())
    throw Error("pair_dmd: estimator size does not match the manifold pair");
  const double dx = est_x(p, q);
  if (!(dx >= kDegenerateDistance)) throw Error("degenerate input distance for pair " + pair_name(mp, p, q));
  return est_y(p, q) / dx;
}

std::vector<PairGamma> neighbor_pair_gammas(const ManifoldPair& mp, const ResistanceEstimator& est_x,
                                            const ResistanceEstimator& est_y) {
  std::vector<PairGamma> pairs;
  pairs.reserve(mp.g_x().edges().size() + mp.g_y().edges().size());
  for (const auto& e : mp.g_x().edges()) pairs.push_back({e.u, e.v, 0.0});
  for (const auto& e : mp.g_y().edges()) pairs.push_back({e.u, e.v, 0.0});
  std::sort(pairs.begin(), pairs.end(), [](const PairGamma& a, const PairGamma& b) {
    return std::tie(a.p, a.q) < std::tie(b.p, b.q);
  });
  pairs.erase(std::unique(pairs.begin(), pairs.end(),
                          [](const PairGamma& a, const PairGamma& b) { return a.p == b.p && a.q == b.q; }),
              pairs.end());
  parallel_for(static_cast<Index>(pairs.size()), [&](Index i) {
    auto& pg = pairs[static_cast<std::size_t>(i)];
    pg.gamma = pair_dmd(mp, pg.p, pg.q, est_x, est_y);
  });
  return pairs;
}

std::vector<double> salman_scores(const ManifoldPair& mp, std::span<const PairGamma> gammas, Neighborhood rule) {
  const auto n = static_cast<std::size_t>(mp.n_nodes());
  std::vector<double> sum_all(n, 0.0), sum_common(n, 0.0);
  std::vector<Index> count_all(n, 0), count_common(n, 0);
  for (const auto& pg : gammas) {
    if (!(pg.gamma > 0.0) || !std::isfinite(pg.gamma))
      throw Error("salman_scores: non-positive gamma for pair " + pair_name(mp, pg.p, pg.q));
    const double t = pg.gamma;
    const double term = t * t * t + 1.0 / (t * t * t);
    const bool common = mp.g_x().find_edge(pg.p, pg.q) >= 0 && mp.g_y().find_edge(pg.p, pg.q) >= 0;
    for (Index node : {pg.p, pg.q}) {
      const auto u = static_cast<std::size_t>(node);
      sum_all[u] += term;
      ++count_all[u];
      if (common) {
        sum_common[u] += term;
        ++count_common[u];
      }
    }
  }
  std::vector<double> scores(n);
  for (std::size_t u = 0; u < n; ++u) {
    if (count_all[u] == 0) throw Error("salman_scores: node " + mp.node_ids()[u] + " has no neighbors");
    if (rule == Neighborhood::intersection_of_graphs && count_common[u] > 0)
      scores[u] = sum_common[u] / static_cast<double>(count_common[u]);
    else
      scores[u] = sum_all[u] / static_cast<double>(count_all[u]);
  }
  return scores;
}

std::vector<double> salman_scores(const ManifoldPair& mp, const ResistanceEstimator& est_x,
                                  const ResistanceEstimator& est_y, Neighborhood rule) {
  return salman_scores(mp, neighbor_pair_gammas(mp, est_x, est_y), rule);
}

GeneralizedEigenpairs top_generalized_eigenpairs(const WeightedGraph& a, const WeightedGraph& b, Index r,
                                                 const SpectralOptions& options) {
  if (a.n_nodes() != b.n_nodes()) throw Error("generalized eigenproblem: node counts differ");
  if (r < 1 || r > a.n_nodes() - 1) throw Error("generalized eigenproblem: r must be in [1, N-1]");
  if (a.n_nodes() <= options.dense_limit) return dense_pairs(a, b, r);
  return lanczos_pairs(a, b, r, options);
}

double gamma_max_bound(const ManifoldPair& mp, const SpectralOptions& options) {
  return top_generalized_eigenpairs(mp.g_x(), mp.g_y(), 1, options).values[0];
}

double gamma_min_bound(const ManifoldPair& mp, const SpectralOptions& options) {
  return 1.0 / top_generalized_eigenpairs(mp.g_y(), mp.g_x(), 1, options).values[0];
}

Eigensubspace eigensubspace(const ManifoldPair& mp, Index r, const SpectralOptions& options) {
  if (r < 1 || r > mp.n_nodes() - 1) throw Error("eigensubspace: r must be in [1, N-1]");
  const auto v = top_generalized_eigenpairs(mp.g_x(), mp.g_y(), r, options);
  const auto w = top_generalized_eigenpairs(mp.g_y(), mp.g_x(), r, options);
  Eigensubspace out;
  out.lambda = v.values;
  out.mu = w.values;
  // For v^T L_Y v = 1, sqrt(lambda) v = L_Y^+ u with u L_X^+-normalized; the
  // weighted column multiplies by sqrt(lambda) once more.
  out.v_r = v.vectors * v.values.asDiagonal();
  out.w_r = w.vectors * w.values.asDiagonal();
  return out;
}

double eigensubspace_pair_score(const Eigen::MatrixXd& v_r, const Eigen::MatrixXd& w_r, Index p, Index q) {
  if (p == q) throw Error("eigensubspace_pair_score: p and q must differ");
  if (p < 0 || q < 0 || p >= v_r.rows() || q >= v_r.rows() || v_r.rows() != w_r.rows())
    throw Error("eigensubspace_pair_score: index out of range");
  return (v_r.row(p) - v_r.row(q)).squaredNorm() + (w_r.row(p) - w_r.row(q)).squaredNorm();
}

DmdReport compute_dmd(const ManifoldPair& mp, const DmdOptions& options) {
  DmdReport report;
  report.mode = resolve_mode(options.mode, mp.n_nodes());
  KrylovOptions krylov;
  krylov.m = options.m > 0 ? options.m : default_krylov_dimension(mp.n_nodes());
  krylov.seed = options.seed;
  const auto est_x = ResistanceEstimator::build(mp.g_x(), report.mode, krylov);
  const auto est_y = ResistanceEstimator::build(mp.g_y(), report.mode, krylov);
  if (report.mode == ResistanceMode::krylov) report.krylov_dimension = est_x.krylov_dimension();

  report.pair_gamma = neighbor_pair_gammas(mp, est_x, est_y);
  report.node_scores = salman_scores(mp, report.pair_gamma, Neighborhood::union_of_graphs);
  report.node_scores_intersection = salman_scores(mp, report.pair_gamma, Neighborhood::intersection_of_graphs);
  report.neighborhood_spearman = spearman(report.node_scores, report.node_scores_intersection);

  SpectralOptions spectral = options.spectral;
  spectral.seed = options.seed;
  if (options.bounds) {
    report.has_bounds = true;
    report.gamma_max_bound = gamma_max_bound(mp, spectral);
    report.gamma_min_bound = gamma_min_bound(mp, spectral);
  }
  if (options.r > 0) {
    report.r = std::min(options.r, mp.n_nodes() - 1);
    report.subspace = eigensubspace(mp, report.r, spectral);
  }
  return report;
}

std::string DmdReport::to_json(const std::vector<std::string>& node_ids, bool with_subspace) const {
  nlohmann::ordered_json doc;
  doc["n_nodes"] = node_scores.size();
  doc["mode"] = mode == ResistanceMode::dense ? "dense" : "krylov";
  if (mode == ResistanceMode::krylov) doc["krylov_dimension"] = krylov_dimension;
  if (has_bounds) {
    doc["gamma_max_bound"] = gamma_max_bound;
    doc["gamma_min_bound"] = gamma_min_bound;
  }
  double gmin = std::numeric_limits<double>::infinity(), gmax = 0.0;
  for (const auto& pg : pair_gamma) {
    gmin = std::min(gmin, pg.gamma);
    gmax = std::max(gmax, pg.gamma);
  }
  std::vector<double> gammas;
  gammas.reserve(pair_gamma.size());
  for (const auto& pg : pair_gamma) gammas.push_back(pg.gamma);
  doc["gamma_summary"] = {{"n_pairs", pair_gamma.size()},
                          {"min", pair_gamma.empty() ? 0.0 : gmin},
                          {"max", gmax},
                          {"mean", gammas.empty() ? 0.0 : mean(gammas)}};
  const auto [smin, smax] = std::minmax_element(node_scores.begin(), node_scores.end());
  doc["score_summary"] = {{"min", node_scores.empty() ? 0.0 : *smin},
                          {"max", node_scores.empty() ? 0.0 : *smax},
                          {"mean", node_scores.empty() ? 0.0 : mean(node_scores)}};
  doc["neighborhood"] = "union";
  doc["union_vs_intersection_spearman"] = neighborhood_spearman;
  doc["r"] = r;
  doc["lambda"] = std::vector<double>(subspace.lambda.data(), subspace.lambda.data() + subspace.lambda.size());
  doc["mu"] = std::vector<double>(subspace.mu.data(), subspace.mu.data() + subspace.mu.size());
  auto& pairs = doc["pair_gamma"] = nlohmann::ordered_json::array();
  for (const auto& pg : pair_gamma)
    pairs.push_back({node_ids[static_cast<std::size_t>(pg.p)], node_ids[static_cast<std::size_t>(pg.q)], pg.gamma});
  if (with_subspace && r > 0) {
    auto rows = [](const Eigen::MatrixXd& m) {
      nlohmann::ordered_json out = nlohmann::ordered_json::array();
      for (Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
        out.push_back(row);
      }
      return out;
    };
    doc["V_r"] = rows(subspace.v_r);
    doc["W_r"] = rows(subspace.w_r);
  }
  return doc.dump(2) + "\n";
}

}  // namespace salman
