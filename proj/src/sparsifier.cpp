#include "salman/sparsifier.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <tuple>

#include <json.hpp>

#include "salman/stats.hpp"

namespace salman {
namespace {

class UnionFind {
 public:
  explicit UnionFind(Index n) : parent_(static_cast<std::size_t>(n)) { std::iota(parent_.begin(), parent_.end(), 0); }

  Index find(Index x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      auto& p = parent_[static_cast<std::size_t>(x)];
      p = parent_[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }

  /// Keeps the smaller root so roots stay deterministic.
  bool unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent_[static_cast<std::size_t>(b)] = a;
    return true;
  }

 private:
  std::vector<Index> parent_;
};

struct Contracted {
  WeightedGraph graph;
  std::vector<Index> reps;  // local id -> lowest original member
};

Contracted contract(const WeightedGraph& g, const std::vector<Index>& cluster_of) {
  std::vector<Index> reps(cluster_of);
  std::sort(reps.begin(), reps.end());
  reps.erase(std::unique(reps.begin(), reps.end()), reps.end());
  std::vector<Index> local(static_cast<std::size_t>(g.n_nodes()), -1);
  for (std::size_t i = 0; i < reps.size(); ++i) local[static_cast<std::size_t>(reps[i])] = static_cast<Index>(i);

  std::vector<Edge> raw;
  raw.reserve(g.edges().size());
  for (const auto& e : g.edges()) {
    Index a = local[static_cast<std::size_t>(cluster_of[static_cast<std::size_t>(e.u)])];
    Index b = local[static_cast<std::size_t>(cluster_of[static_cast<std::size_t>(e.v)])];
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    raw.push_back({a, b, e.weight});
  }
  std::sort(raw.begin(), raw.end(), [](const Edge& x, const Edge& y) { return std::tie(x.u, x.v) < std::tie(y.u, y.v); });
  std::vector<Edge> merged;
  for (const auto& e : raw) {
    // Parallel conductances add.
    if (!merged.empty() && merged.back().u == e.u && merged.back().v == e.v)
      merged.back().weight += e.weight;
    else
      merged.push_back(e);
  }
  return {WeightedGraph(static_cast<Index>(reps.size()), std::move(merged)), std::move(reps)};
}

bool lexicographic_less(const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); }

}  // namespace

void SparsifyConfig::validate() const {
  if (spf_levels < 1 || spf_levels > 8) throw Error("spf_levels must be in [1, 8]");
  if (!(contraction_quantile > 0.0 && contraction_quantile < 1.0))
    throw Error("contraction_quantile must be in (0, 1)");
  if (!(diameter_factor > 0.0)) throw Error("diameter_factor must be positive");
  if (!(sigma_sq > 0.0)) throw Error("sigma_sq must be positive");
  if (trace_k < 0) throw Error("trace_k must be >= 0");
}

std::string FidelityReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["pearson"] = pearson;
  doc["spearman"] = spearman;
  doc["mse"] = mse;
  doc["rel_err"] = rel_err;
  doc["edge_pct"] = edge_pct;
  doc["n_pairs_sampled"] = n_pairs_sampled;
  return doc.dump(2) + "\n";
}

FidelityReport FidelityReport::from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    FidelityReport r;
    r.pearson = doc.at("pearson").get<double>();
    r.spearman = doc.at("spearman").get<double>();
    r.mse = doc.at("mse").get<double>();
    r.rel_err = doc.at("rel_err").get<double>();
    r.edge_pct = doc.at("edge_pct").get<double>();
    r.n_pairs_sampled = doc.at("n_pairs_sampled").get<Index>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("fidelity JSON: ") + e.what());
  }
}

EstimatorFactory dense_estimator_factory() {
  return [](const WeightedGraph& g, int) { return ResistanceEstimator::dense(g); };
}

EstimatorFactory krylov_estimator_factory(Index m, std::uint64_t seed) {
  return [m, seed](const WeightedGraph& g, int level) {
    const Index dim = m > 0 ? std::min(m, g.n_nodes() - 1) : default_krylov_dimension(g.n_nodes());
    KrylovOptions options;
    options.m = dim;
    options.seed = seed + static_cast<std::uint64_t>(level);
    return ResistanceEstimator::krylov(g, options);
  };
}

EstimatorFactory estimator_factory(ModeChoice mode, Index m, std::uint64_t seed) {
  return [mode, m, seed](const WeightedGraph& g, int level) {
    if (resolve_mode(mode, g.n_nodes()) == ResistanceMode::dense) return ResistanceEstimator::dense(g);
    return krylov_estimator_factory(m, seed)(g, level);
  };
}

std::vector<double> distance_ratios(const WeightedGraph& g, const ResistanceEstimator& est) {
  auto ratios = edge_resistances(est, g);
  for (std::size_t k = 0; k < ratios.size(); ++k) ratios[k] *= g.edges()[k].weight;
  return ratios;
}

std::vector<bool> connectivity_guard(const WeightedGraph& g, std::vector<bool> keep, std::span<const double> ratios,
                                     std::vector<Edge>* added) {
  if (keep.size() != g.edges().size() || ratios.size() != g.edges().size())
    throw Error("connectivity_guard: size mismatch");
  UnionFind uf(g.n_nodes());
  for (std::size_t k = 0; k < keep.size(); ++k)
    if (keep[k]) uf.unite(g.edges()[k].u, g.edges()[k].v);
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < keep.size(); ++k)
    if (!keep[k]) order.push_back(k);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (ratios[a] != ratios[b]) return ratios[a] > ratios[b];
    return lexicographic_less(g.edges()[a], g.edges()[b]);
  });
  if (added) added->clear();
  for (std::size_t k : order) {
    const auto& e = g.edges()[k];
    if (uf.unite(e.u, e.v)) {
      keep[k] = true;
      if (added) added->push_back(e);
    }
  }
  return keep;
}

namespace {

WeightedGraph keep_edges(const WeightedGraph& g, const std::vector<bool>& keep) {
  std::vector<Edge> edges;
  for (std::size_t k = 0; k < keep.size(); ++k)
    if (keep[k]) edges.push_back(g.edges()[k]);
  return WeightedGraph(g.n_nodes(), std::move(edges), g.node_ids());
}

}  // namespace

WeightedGraph prune_low_ratio(const WeightedGraph& g, std::span<const double> ratios, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) throw Error("keep_fraction must be in (0, 1]");
  if (ratios.size() != g.edges().size()) throw Error("prune_low_ratio: one ratio per edge required");
  const auto target = static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(g.edges().size()) - 1e-9));
  std::vector<std::size_t> order(g.edges().size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (ratios[a] != ratios[b]) return ratios[a] > ratios[b];
    return lexicographic_less(g.edges()[a], g.edges()[b]);
  });
  std::vector<bool> keep(g.edges().size(), false);
  for (std::size_t i = 0; i < std::min(target, order.size()); ++i) keep[order[i]] = true;
  return keep_edges(g, connectivity_guard(g, std::move(keep), ratios));
}

SparsifiedManifold lrd_decompose(const WeightedGraph& g, const SparsifyConfig& config, const EstimatorFactory& factory) {
  config.validate();
  if (!is_connected(g)) throw DisconnectedGraphError("lrd_decompose: input graph is not connected");

  SparsifiedManifold out;
  out.original = g;
  const ResistanceEstimator base = factory(g, 0);
  const std::vector<double> base_resistance = edge_resistances(base, g);
  out.ratios.resize(base_resistance.size());
  for (std::size_t k = 0; k < base_resistance.size(); ++k) out.ratios[k] = g.edges()[k].weight * base_resistance[k];

  const Index n = g.n_nodes();
  std::vector<Index> cluster_of(static_cast<std::size_t>(n));
  std::iota(cluster_of.begin(), cluster_of.end(), 0);
  std::vector<double> eta(static_cast<std::size_t>(n), 0.0);  // indexed by representative

  for (int level = 1; level <= config.spf_levels; ++level) {
    Contracted level_graph = contract(g, cluster_of);
    const WeightedGraph& cg = level_graph.graph;
    if (cg.n_edges() == 0 || cg.n_nodes() <= 1) {
      out.stopped_early = true;
      break;
    }
    // The first contracted graph is g itself (same numbering and edge order).
    const std::vector<double> resistance = level == 1 ? base_resistance : edge_resistances(factory(cg, level), cg);

    const auto offered = static_cast<std::size_t>(config.contraction_quantile * static_cast<double>(cg.n_edges()));
    std::vector<std::size_t> order(cg.edges().size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (resistance[a] != resistance[b]) return resistance[a] < resistance[b];
      return lexicographic_less(cg.edges()[a], cg.edges()[b]);
    });

    SupernodeClustering clustering;
    clustering.level = level;
    clustering.threshold = offered > 0 ? resistance[order[offered - 1]] : 0.0;
    clustering.diameter_cap = config.diameter_factor * std::ldexp(1.0, level - 1) * clustering.threshold;

    const Index c = cg.n_nodes();
    UnionFind uf(c);
    std::vector<double> local_eta(static_cast<std::size_t>(c));
    std::vector<Index> local_rep(level_graph.reps);  // lowest original member per local root
    for (Index i = 0; i < c; ++i) local_eta[static_cast<std::size_t>(i)] = eta[static_cast<std::size_t>(level_graph.reps[static_cast<std::size_t>(i)])];

    LevelTrace trace;
    std::vector<MergeEvent> events;
    Index clusters_left = c;
    for (std::size_t r = 0; r < order.size(); ++r) {
      const std::size_t k = order[r];
      const double d = resistance[k];
      if (r >= offered) {
        trace.retained.push_back(d);
        continue;
      }
      const Index a = uf.find(cg.edges()[k].u), b = uf.find(cg.edges()[k].v);
      if (a == b) {
        trace.contracted.push_back(d);  // already inside one supernode
        continue;
      }
      const double merged_eta = local_eta[static_cast<std::size_t>(a)] + local_eta[static_cast<std::size_t>(b)] + d;
      if (merged_eta > clustering.diameter_cap) {
        trace.deferred.push_back(d);
        continue;
      }
      const Index left = local_rep[static_cast<std::size_t>(a)], right = local_rep[static_cast<std::size_t>(b)];
      uf.unite(a, b);
      const Index root = uf.find(a);
      local_eta[static_cast<std::size_t>(root)] = merged_eta;
      local_rep[static_cast<std::size_t>(root)] = std::min(left, right);
      events.push_back({level, std::min(left, right), std::max(left, right), d, merged_eta});
      trace.contracted.push_back(d);
      --clusters_left;
    }
    if (clusters_left <= 1) {
      // Everything would collapse into a single supernode; keep the previous level.
      out.stopped_early = true;
      break;
    }

    std::vector<Index> local_of(static_cast<std::size_t>(n), -1);
    for (Index i = 0; i < c; ++i) local_of[static_cast<std::size_t>(level_graph.reps[static_cast<std::size_t>(i)])] = i;
    for (Index u = 0; u < n; ++u) {
      const Index root = uf.find(local_of[static_cast<std::size_t>(cluster_of[static_cast<std::size_t>(u)])]);
      cluster_of[static_cast<std::size_t>(u)] = local_rep[static_cast<std::size_t>(root)];
    }
    for (Index i = 0; i < c; ++i) {
      const Index root = uf.find(i);
      eta[static_cast<std::size_t>(local_rep[static_cast<std::size_t>(root)])] = local_eta[static_cast<std::size_t>(root)];
    }

    std::vector<Index> reps(cluster_of);
    std::sort(reps.begin(), reps.end());
    reps.erase(std::unique(reps.begin(), reps.end()), reps.end());
    std::vector<Index> number(static_cast<std::size_t>(n), -1);
    for (std::size_t i = 0; i < reps.size(); ++i) {
      number[static_cast<std::size_t>(reps[i])] = static_cast<Index>(i);
      clustering.cluster_weight.push_back(eta[static_cast<std::size_t>(reps[i])]);
    }
    clustering.assignment.resize(static_cast<std::size_t>(n));
    for (Index u = 0; u < n; ++u)
      clustering.assignment[static_cast<std::size_t>(u)] = number[static_cast<std::size_t>(cluster_of[static_cast<std::size_t>(u)])];

    out.clusterings.push_back(std::move(clustering));
    out.levels.push_back(std::move(trace));
    out.merges.insert(out.merges.end(), events.begin(), events.end());
    out.levels_completed = level;
  }

  std::vector<bool> keep(g.edges().size());
  for (std::size_t k = 0; k < keep.size(); ++k)
    keep[k] = cluster_of[static_cast<std::size_t>(g.edges()[k].u)] != cluster_of[static_cast<std::size_t>(g.edges()[k].v)];
  keep = connectivity_guard(g, std::move(keep), out.ratios, &out.connectivity_edges);
  out.sparse = keep_edges(g, keep);
  return out;
}

FidelityReport validate_sparsification(const WeightedGraph& original, const WeightedGraph& sparse, Index n_pairs,
                                       std::uint64_t seed, ModeChoice mode, Index m) {
  if (n_pairs < 2) throw Error("validate_sparsification: n_pairs must be >= 2");
  if (original.n_nodes() != sparse.n_nodes()) throw Error("validate_sparsification: node counts differ");
  const Index n = original.n_nodes();

  std::vector<std::pair<Index, Index>> pairs;
  if (n <= kDenseModeLimit) {
    pairs.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) pairs.emplace_back(p, q);
  } else {
    auto rng = stage_rng(seed, "validate-pairs");
    std::uniform_int_distribution<Index> pick(0, n - 1);
    pairs.reserve(static_cast<std::size_t>(n_pairs));
    while (static_cast<Index>(pairs.size()) < n_pairs) {
      const Index p = pick(rng), q = pick(rng);
      if (p != q) pairs.emplace_back(p, q);
    }
  }

  const ResistanceMode resolved = resolve_mode(mode, n);
  KrylovOptions options;
  options.m = m > 0 ? m : default_krylov_dimension(n);
  options.seed = seed;
  const auto est_a = ResistanceEstimator::build(original, resolved, options);
  const auto est_b = ResistanceEstimator::build(sparse, resolved, options);
  std::vector<double> ra(pairs.size()), rb(pairs.size());
  parallel_for(static_cast<Index>(pairs.size()), [&](Index i) {
    const auto [p, q] = pairs[static_cast<std::size_t>(i)];
    ra[static_cast<std::size_t>(i)] = est_a(p, q);
    rb[static_cast<std::size_t>(i)] = est_b(p, q);
  });

  FidelityReport r;
  r.pearson = pearson(ra, rb);
  r.spearman = spearman(ra, rb);
  r.mse = mean_squared_error(ra, rb);
  r.rel_err = mean_relative_error(ra, rb);
  r.edge_pct = original.n_edges() ? static_cast<double>(sparse.n_edges()) / static_cast<double>(original.n_edges()) : 1.0;
  r.n_pairs_sampled = static_cast<Index>(pairs.size());
  return r;
}

FidelityReport validate_sparsification(const SparsifiedManifold& manifold, Index n_pairs, std::uint64_t seed,
                                       ModeChoice mode, Index m) {
  return validate_sparsification(manifold.original, manifold.sparse, n_pairs, seed, mode, m);
}

double pgm_objective(const WeightedGraph& g, const RowMatrix& x, double sigma_sq, Index trace_k) {
  if (x.rows() != g.n_nodes()) throw Error("pgm_objective: X must have one row per node");
  if (!(sigma_sq > 0.0)) throw Error("pgm_objective: sigma_sq must be positive");
  const Index k = trace_k > 0 ? trace_k : x.cols();
  Eigen::MatrixXd theta = dense_laplacian(g);
  theta.diagonal().array() += 1.0 / sigma_sq;
  Eigen::LLT<Eigen::MatrixXd> llt(theta);
  if (llt.info() != Eigen::Success) throw Error("pgm_objective: precision matrix is not positive definite");
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double trace = (x.transpose() * theta * x).trace();
  return logdet - trace / static_cast<double>(k);
}

}  // namespace salman
