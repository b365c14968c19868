#include <doctest.h>

#include "oracles.hpp"
#include "salman/sparsifier.hpp"

using namespace salman;

namespace {

std::vector<double> oracle_ratios(const WeightedGraph& g) {
  const auto r = oracle::resistance_matrix(g);
  std::vector<double> out;
  for (const auto& e : g.edges()) out.push_back(e.weight * r(e.u, e.v));
  return out;
}

}  // namespace

TEST_CASE("distance ratios: trees, cycles, bridges") {
  std::mt19937_64 rng(1);
  const auto tree = oracle::random_connected(20, 0, rng);
  for (double rho : distance_ratios(tree, ResistanceEstimator::dense(tree))) CHECK(rho == doctest::Approx(1.0));
  for (double rho : distance_ratios(oracle::cycle(4), ResistanceEstimator::dense(oracle::cycle(4))))
    CHECK(rho == doctest::Approx(0.75));
  const auto cliques = oracle::two_cliques(5);
  const auto ratios = distance_ratios(cliques, ResistanceEstimator::dense(cliques));
  CHECK(ratios[static_cast<std::size_t>(cliques.find_edge(4, 5))] == doctest::Approx(1.0));
}

TEST_CASE("distance ratio is at most one") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto g = oracle::random_connected(30, 50, rng, 0.01, 100.0);
    for (double rho : oracle_ratios(g)) CHECK(rho <= 1.0 + 1e-9);
    for (double rho : distance_ratios(g, ResistanceEstimator::dense(g))) CHECK(rho <= 1.0 + 1e-9);
  }
}

TEST_CASE("prune_low_ratio") {
  std::mt19937_64 rng(3);
  const auto g = oracle::random_connected(40, 80, rng);
  const auto ratios = distance_ratios(g, ResistanceEstimator::dense(g));
  CHECK(prune_low_ratio(g, ratios, 1.0) == g);
  const auto tree = oracle::random_connected(25, 0, rng);
  CHECK(prune_low_ratio(tree, distance_ratios(tree, ResistanceEstimator::dense(tree)), 0.2) == tree);
  const auto half = prune_low_ratio(g, ratios, 0.5);
  CHECK(is_connected(half));
  CHECK(half.n_edges() >= (g.n_edges() + 1) / 2);
  CHECK(half.n_edges() < g.n_edges());
}

TEST_CASE("lrd: tiny quantile keeps the original graph") {
  std::mt19937_64 rng(4);
  const auto g = oracle::random_connected(30, 40, rng);
  SparsifyConfig cfg;
  cfg.spf_levels = 1;
  cfg.contraction_quantile = 1e-6;
  const auto sm = lrd_decompose(g, cfg, dense_estimator_factory());
  CHECK(sm.sparse == g);
  const auto fid = validate_sparsification(sm, 100, 0);
  CHECK(fid.pearson == doctest::Approx(1.0));
  CHECK(fid.spearman == doctest::Approx(1.0));
  CHECK(fid.mse == 0.0);
  CHECK(fid.rel_err == 0.0);
  CHECK(fid.edge_pct == 1.0);
}

TEST_CASE("lrd: two cliques keep the bridge and contract clique edges first") {
  const auto g = oracle::two_cliques(10);
  SparsifyConfig cfg;
  cfg.spf_levels = 1;
  const auto sm = lrd_decompose(g, cfg, dense_estimator_factory());
  CHECK(sm.sparse.find_edge(9, 10) >= 0);
  REQUIRE(sm.levels.size() == 1);
  const auto& lvl = sm.levels[0];
  const auto r = oracle::resistance_matrix(g);
  CHECK(*std::max_element(lvl.contracted.begin(), lvl.contracted.end()) < r(9, 10));
  CHECK(*std::max_element(lvl.retained.begin(), lvl.retained.end()) == doctest::Approx(r(9, 10)));
  for (const auto& m : sm.merges) CHECK((m.left < 10) == (m.right < 10));  // never across the bridge
}

TEST_CASE("lrd: eta of a first merge equals its resistance") {
  std::mt19937_64 rng(5);
  const auto g = oracle::random_connected(30, 45, rng);
  const auto sm = lrd_decompose(g, SparsifyConfig{}, dense_estimator_factory());
  REQUIRE_FALSE(sm.merges.empty());
  CHECK(sm.merges.front().eta == sm.merges.front().resistance);
}

TEST_CASE("lrd: eta replay, level soundness, connectivity") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 10; ++t) {
    const auto g = oracle::random_geometric(120, 0.18, rng);
    SparsifyConfig cfg;
    cfg.spf_levels = 3;
    const auto sm = lrd_decompose(g, cfg, dense_estimator_factory());
    CHECK(is_connected(sm.sparse));
    CHECK(sm.sparse.n_edges() <= g.n_edges());
    for (const auto& e : sm.sparse.edges()) CHECK(g.find_edge(e.u, e.v) >= 0);

    // Replay merges: eta(new) = eta(a) + eta(b) + d_eff.
    std::vector<double> eta(static_cast<std::size_t>(g.n_nodes()), 0.0);
    std::vector<Index> rep(static_cast<std::size_t>(g.n_nodes()));
    for (Index i = 0; i < g.n_nodes(); ++i) rep[static_cast<std::size_t>(i)] = i;
    for (const auto& m : sm.merges) {
      const double expect = eta[static_cast<std::size_t>(m.left)] + eta[static_cast<std::size_t>(m.right)] + m.resistance;
      CHECK(m.eta == doctest::Approx(expect).epsilon(1e-12));
      eta[static_cast<std::size_t>(std::min(m.left, m.right))] = m.eta;
    }
    for (const auto& lvl : sm.levels) {
      if (lvl.contracted.empty() || lvl.retained.empty()) continue;
      CHECK(*std::max_element(lvl.contracted.begin(), lvl.contracted.end()) <=
            *std::min_element(lvl.retained.begin(), lvl.retained.end()));
    }
    for (std::size_t i = 0; i < sm.clusterings.size(); ++i)
      for (double w : sm.clusterings[i].cluster_weight) CHECK(w <= sm.clusterings[i].diameter_cap + 1e-12);
  }
}

TEST_CASE("lrd: more levels never keep more edges") {
  std::mt19937_64 rng(7);
  const auto g = oracle::random_geometric(200, 0.15, rng);
  Index previous = g.n_edges();
  for (int spf = 1; spf <= 4; ++spf) {
    SparsifyConfig cfg;
    cfg.spf_levels = spf;
    const auto sm = lrd_decompose(g, cfg, dense_estimator_factory());
    CHECK(sm.sparse.n_edges() <= previous);
    previous = sm.sparse.n_edges();
  }
}

TEST_CASE("lrd: geometric graph at 90% retention keeps resistances") {
  std::mt19937_64 rng(8);
  const auto g = oracle::random_geometric(300, 0.12, rng);
  const auto ratios = distance_ratios(g, ResistanceEstimator::dense(g));
  const auto kept = prune_low_ratio(g, ratios, 0.9);
  const auto fid = validate_sparsification(g, kept, 1000, 0);
  MESSAGE("pearson at 90% " << fid.pearson);
  CHECK(fid.pearson >= 0.95);
}

TEST_CASE("lrd: complete collapse stops early") {
  // Triangle: one level merges two nodes, a second would leave one supernode.
  WeightedGraph g(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}});
  SparsifyConfig cfg;
  cfg.spf_levels = 8;
  cfg.contraction_quantile = 0.9;
  cfg.diameter_factor = 100.0;
  const auto sm = lrd_decompose(g, cfg, dense_estimator_factory());
  CHECK(sm.stopped_early);
  CHECK(sm.levels_completed < 8);
  CHECK(is_connected(sm.sparse));
}

TEST_CASE("fidelity JSON round trip and config validation") {
  FidelityReport r{0.9, 0.8, 1.5, 0.25, 0.8, 1234};
  const auto back = FidelityReport::from_json(r.to_json());
  CHECK(back.pearson == r.pearson);
  CHECK(back.n_pairs_sampled == 1234);
  SparsifyConfig bad;
  bad.contraction_quantile = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = SparsifyConfig{};
  bad.spf_levels = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("pgm objective against a direct computation") {
  std::mt19937_64 rng(9);
  const auto g = oracle::random_connected(12, 10, rng);
  RowMatrix x(12, 3);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = n01(rng);
  const double sigma_sq = 2.0;
  const Eigen::MatrixXd theta = oracle::laplacian(g) + Eigen::MatrixXd::Identity(12, 12) / sigma_sq;
  const double expect = std::log(theta.determinant()) - (x.transpose() * theta * x).trace() / 3.0;
  CHECK(pgm_objective(g, x, sigma_sq) == doctest::Approx(expect).epsilon(1e-10));
}
