#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <numeric>
#include <set>

#include "oracles.hpp"
#include "salman/dmd.hpp"

using namespace salman;

namespace {

struct Pair {
  WeightedGraph x, y;
};

Pair random_pair(Index n, std::mt19937_64& rng) {
  auto x = oracle::random_connected(n, 2 * n, rng);
  auto y = oracle::random_connected(n, 2 * n, rng);
  return {std::move(x), std::move(y)};
}

// Largest eigenvalue of L_b^+ L_a from the nonsymmetric product.
double oracle_lambda_max(const WeightedGraph& a, const WeightedGraph& b) {
  const Eigen::MatrixXd m = oracle::pseudoinverse(oracle::laplacian(b)) * oracle::laplacian(a);
  return Eigen::EigenSolver<Eigen::MatrixXd>(m).eigenvalues().real().maxCoeff();
}

std::vector<double> oracle_scores(const WeightedGraph& x, const WeightedGraph& y) {
  const auto rx = oracle::resistance_matrix(x), ry = oracle::resistance_matrix(y);
  std::vector<double> out;
  for (Index p = 0; p < x.n_nodes(); ++p) {
    std::set<Index> nb;
    for (const auto& e : x.neighbors(p)) nb.insert(e.node);
    for (const auto& e : y.neighbors(p)) nb.insert(e.node);
    double s = 0.0;
    for (Index q : nb) {
      const double t = ry(p, q) / rx(p, q);
      s += std::pow(t, 3) + std::pow(t, -3);
    }
    out.push_back(s / static_cast<double>(nb.size()));
  }
  return out;
}

}  // namespace

TEST_CASE("identity pair") {
  std::mt19937_64 rng(1);
  const auto g = oracle::random_connected(25, 40, rng);
  ManifoldPair mp(g, g);
  const auto est = ResistanceEstimator::dense(g);
  for (double s : salman_scores(mp, est, est)) CHECK(s == 2.0);
  CHECK(pair_dmd(mp, 0, 7, est, est) == 1.0);
  CHECK(gamma_max_bound(mp) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(gamma_min_bound(mp) == doctest::Approx(1.0).epsilon(1e-9));
  const auto sub = eigensubspace(mp, 3);
  for (Index i = 0; i < 3; ++i) {
    CHECK(sub.lambda[i] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sub.mu[i] == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("uniform scaling by c = 2") {
  std::mt19937_64 rng(2);
  const auto g = oracle::random_connected(25, 40, rng);
  ManifoldPair mp(g, scale_weights(g, 2.0));
  const auto ex = ResistanceEstimator::dense(mp.g_x()), ey = ResistanceEstimator::dense(mp.g_y());
  for (const auto& pg : neighbor_pair_gammas(mp, ex, ey)) CHECK(pg.gamma == doctest::Approx(0.5).epsilon(1e-12));
  for (double s : salman_scores(mp, ex, ey)) CHECK(s == doctest::Approx(8.125).epsilon(1e-9));
  CHECK(gamma_max_bound(mp) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(gamma_min_bound(mp) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("gamma multiset scales exactly with G_Y weights") {
  std::mt19937_64 rng(3);
  auto [x, y] = random_pair(20, rng);
  ManifoldPair a(x, y), b(x, scale_weights(y, 3.0));
  const auto ex = ResistanceEstimator::dense(x);
  const auto ga = neighbor_pair_gammas(a, ex, ResistanceEstimator::dense(a.g_y()));
  const auto gb = neighbor_pair_gammas(b, ex, ResistanceEstimator::dense(b.g_y()));
  REQUIRE(ga.size() == gb.size());
  for (std::size_t i = 0; i < ga.size(); ++i) CHECK(gb[i].gamma == doctest::Approx(ga[i].gamma / 3.0).epsilon(1e-10));
}

TEST_CASE("path versus cycle") {
  ManifoldPair mp(oracle::path(4), oracle::cycle(4));
  const auto ex = ResistanceEstimator::dense(mp.g_x()), ey = ResistanceEstimator::dense(mp.g_y());
  const auto rx = oracle::resistance_matrix(mp.g_x()), ry = oracle::resistance_matrix(mp.g_y());
  CHECK(pair_dmd(mp, 0, 3, ex, ey) == doctest::Approx(ry(0, 3) / rx(0, 3)));
  CHECK(pair_dmd(mp, 0, 3, ex, ey) == doctest::Approx(0.25));
  CHECK(pair_dmd(mp, 0, 2, ex, ey) == doctest::Approx(0.5));
  CHECK(pair_dmd(mp, 2, 0, ex, ey) == pair_dmd(mp, 0, 2, ex, ey));
}

TEST_CASE("scores match a brute-force recomputation") {
  std::mt19937_64 rng(4);
  auto [x, y] = random_pair(20, rng);
  ManifoldPair mp(x, y);
  const auto scores = salman_scores(mp, ResistanceEstimator::dense(x), ResistanceEstimator::dense(y));
  const auto expect = oracle_scores(x, y);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    CHECK(scores[i] == doctest::Approx(expect[i]).epsilon(1e-9));
    CHECK(scores[i] >= 2.0);
  }
}

TEST_CASE("intersection neighborhoods fall back to the union") {
  ManifoldPair mp(oracle::path(4), oracle::cycle(4));
  const auto ex = ResistanceEstimator::dense(mp.g_x()), ey = ResistanceEstimator::dense(mp.g_y());
  const auto uni = salman_scores(mp, ex, ey, Neighborhood::union_of_graphs);
  const auto inter = salman_scores(mp, ex, ey, Neighborhood::intersection_of_graphs);
  // Node 1 and 2 share both path neighbors with the cycle; nodes 0 and 3 gain (0,3) in the union only.
  CHECK(uni[1] == inter[1]);
  CHECK(uni[0] != inter[0]);
}

TEST_CASE("bounds bracket every pair and match the oracle eigenvalue") {
  std::mt19937_64 rng(5);
  auto [x, y] = random_pair(30, rng);
  ManifoldPair mp(x, y);
  const auto rx = oracle::resistance_matrix(x), ry = oracle::resistance_matrix(y);
  double lo = 1e300, hi = 0.0;
  for (Index p = 0; p < 30; ++p)
    for (Index q = p + 1; q < 30; ++q) {
      lo = std::min(lo, ry(p, q) / rx(p, q));
      hi = std::max(hi, ry(p, q) / rx(p, q));
    }
  const double upper = gamma_max_bound(mp), lower = gamma_min_bound(mp);
  CHECK(upper >= hi * (1 - 1e-12));
  CHECK(lower <= lo * (1 + 1e-12));
  CHECK(upper == doctest::Approx(oracle_lambda_max(x, y)).epsilon(1e-8));
  CHECK(lower == doctest::Approx(1.0 / oracle_lambda_max(y, x)).epsilon(1e-8));
}

TEST_CASE("Lanczos path agrees with the dense generalized solver") {
  std::mt19937_64 rng(6);
  const auto x = oracle::random_geometric(250, 0.13, rng);
  const auto y = oracle::random_geometric(250, 0.13, rng);
  SpectralOptions iterative;
  iterative.dense_limit = 0;
  const auto d = top_generalized_eigenpairs(x, y, 3);
  const auto l = top_generalized_eigenpairs(x, y, 3, iterative);
  for (Index i = 0; i < 3; ++i) CHECK(l.values[i] == doctest::Approx(d.values[i]).epsilon(1e-6));
  const Eigen::MatrixXd lx = oracle::laplacian(x), ly = oracle::laplacian(y);
  const Eigen::VectorXd r = lx * l.vectors.col(0) - l.values[0] * ly * l.vectors.col(0);
  CHECK(r.norm() / (l.values[0] * (ly * l.vectors.col(0)).norm()) < 1e-4);
}

TEST_CASE("eigensubspace: generalized eigen relation and normalization") {
  std::mt19937_64 rng(7);
  auto [x, y] = random_pair(40, rng);
  ManifoldPair mp(x, y);
  const Index r = 4;
  const auto sub = eigensubspace(mp, r);
  const Eigen::MatrixXd lx = oracle::laplacian(x), ly = oracle::laplacian(y);
  const Eigen::MatrixXd px = oracle::pseudoinverse(lx);
  for (Index i = 0; i < r; ++i) {
    const Eigen::VectorXd v = sub.v_r.col(i);
    CHECK((lx * v - sub.lambda[i] * ly * v).norm() <= 1e-8 * std::max(1.0, (lx * v).norm()));
    const Eigen::VectorXd w = sub.w_r.col(i);
    CHECK((ly * w - sub.mu[i] * lx * w).norm() <= 1e-8 * std::max(1.0, (ly * w).norm()));
    // u = L_Y v / sqrt(lambda) is L_X^+-normalized and ||V_r^T u||^2 = lambda^3.
    const Eigen::VectorXd u = ly * v / std::sqrt(sub.lambda[i]);
    CHECK(u.dot(px * u) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK((sub.v_r.transpose() * u).squaredNorm() == doctest::Approx(std::pow(sub.lambda[i], 3)).epsilon(1e-8));
  }
  CHECK(sub.lambda[0] >= sub.lambda[1]);
  CHECK_THROWS_AS(eigensubspace(mp, 40), Error);
}

TEST_CASE("eigensubspace pair score") {
  Eigen::MatrixXd v(3, 2), w(3, 2);
  v << 1, 2, 1, 2, 0, 1;
  w << 3, 0, 3, 0, 1, 1;
  CHECK(eigensubspace_pair_score(v, w, 0, 1) == 0.0);
  CHECK(eigensubspace_pair_score(v, w, 0, 2) == eigensubspace_pair_score(v, w, 2, 0));
  CHECK(eigensubspace_pair_score(v, w, 0, 2) == doctest::Approx(1 + 1 + 4 + 1));
}

TEST_CASE("permutation equivariance") {
  std::mt19937_64 rng(8);
  auto [x, y] = random_pair(18, rng);
  std::vector<Index> perm(18);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  auto relabel = [&](const WeightedGraph& g) {
    std::vector<Edge> e;
    for (const auto& ed : g.edges()) e.push_back({perm[static_cast<std::size_t>(ed.u)], perm[static_cast<std::size_t>(ed.v)], ed.weight});
    return WeightedGraph(18, e);
  };
  ManifoldPair a(x, y), b(relabel(x), relabel(y));
  const auto sa = salman_scores(a, ResistanceEstimator::dense(a.g_x()), ResistanceEstimator::dense(a.g_y()));
  const auto sb = salman_scores(b, ResistanceEstimator::dense(b.g_x()), ResistanceEstimator::dense(b.g_y()));
  for (Index i = 0; i < 18; ++i)
    CHECK(sb[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] == doctest::Approx(sa[static_cast<std::size_t>(i)]).epsilon(1e-9));
}

TEST_CASE("degenerate input distance and invalid pairs") {
  WeightedGraph tight(2, {{0, 1, 1e15}});
  WeightedGraph loose(2, {{0, 1, 1.0}});
  ManifoldPair mp(tight, loose);
  const auto ex = ResistanceEstimator::dense(tight), ey = ResistanceEstimator::dense(loose);
  CHECK_THROWS_WITH_AS(pair_dmd(mp, 0, 1, ex, ey), doctest::Contains("degenerate input distance"), Error);
  CHECK_THROWS_AS(pair_dmd(mp, 1, 1, ex, ey), Error);
  CHECK_THROWS_AS(ManifoldPair(oracle::path(3), oracle::path(4)), Error);
  CHECK_THROWS_AS(ManifoldPair(oracle::path(4), WeightedGraph(4, {{0, 1, 1.0}})), DisconnectedGraphError);
}

TEST_CASE("compute_dmd report") {
  std::mt19937_64 rng(9);
  auto [x, y] = random_pair(30, rng);
  ManifoldPair mp(x, y);
  DmdOptions opts;
  opts.r = 3;
  const auto rep = compute_dmd(mp, opts);
  CHECK(rep.has_bounds);
  for (const auto& pg : rep.pair_gamma) {
    CHECK(pg.gamma <= rep.gamma_max_bound * (1 + 1e-12));
    CHECK(pg.gamma >= rep.gamma_min_bound * (1 - 1e-12));
  }
  const auto doc = rep.to_json(mp.node_ids(), true);
  CHECK(doc.find("\"gamma_max_bound\"") != std::string::npos);
  CHECK(doc.find("\"V_r\"") != std::string::npos);
}
