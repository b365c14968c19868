#include "salman/knn_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

namespace salman {
namespace {

bool closer(const NeighborList& a, const NeighborList& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.node < b.node);
}

void check_k(Index n, Index k) {
  if (k < 1 || k >= n)
    throw Error("k must satisfy 1 <= k < n_samples (k = " + std::to_string(k) + ", n = " + std::to_string(n) + ")");
}

std::vector<std::vector<NeighborList>> exact_knn(const RowMatrix& x, Index k) {
  const Index n = x.rows();
  const Index slack = std::min<Index>(n - 1, k + 8);
  DataDistanceView dist(x);
  std::vector<std::vector<NeighborList>> out(static_cast<std::size_t>(n));
  constexpr Index block = 128;
  const Index n_blocks = (n + block - 1) / block;
  parallel_for(n_blocks, [&](Index b) {
    const Index r0 = b * block;
    const Index rows = std::min(block, n - r0);
    const Eigen::MatrixXd gram = x.middleRows(r0, rows) * x.transpose();
    std::vector<NeighborList> cand;
    cand.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < rows; ++i) {
      const Index p = r0 + i;
      cand.clear();
      for (Index q = 0; q < n; ++q) {
        if (q == p) continue;
        cand.push_back({q, dist.squared_norms()(p) + dist.squared_norms()(q) - 2.0 * gram(i, q)});
      }
      std::nth_element(cand.begin(), cand.begin() + (slack - 1), cand.end(), closer);
      // Candidates tied with the slack boundary under the screening metric are kept too.
      const double cutoff = cand[static_cast<std::size_t>(slack - 1)].distance;
      std::vector<NeighborList> exact;
      for (const auto& c : cand)
        if (c.distance <= cutoff) exact.push_back({c.node, dist(p, c.node)});
      std::sort(exact.begin(), exact.end(), closer);
      exact.resize(static_cast<std::size_t>(k));
      out[static_cast<std::size_t>(p)] = std::move(exact);
    }
  });
  return out;
}

// NN-descent (Dong, Charikar, Li) with new/old flags, run sequentially so the
// result depends only on (x, k, seed).
std::vector<std::vector<NeighborList>> descent_knn(const RowMatrix& x, Index k, const KnnOptions& options) {
  const Index n = x.rows();
  DataDistanceView dist(x);
  const Index width = std::min<Index>(n - 1, k + std::max<Index>(5, k / 2));
  struct Slot {
    Index node;
    double distance;
    bool fresh;
  };
  std::vector<std::vector<Slot>> heap(static_cast<std::size_t>(n));
  auto rng = stage_rng(options.seed, "knn-descent");

  auto try_insert = [&](Index p, Index q, double d) {
    auto& h = heap[static_cast<std::size_t>(p)];
    const NeighborList cand{q, d};
    if (static_cast<Index>(h.size()) == width && !closer(cand, {h.back().node, h.back().distance})) return false;
    for (const auto& s : h)
      if (s.node == q) return false;
    auto it = std::lower_bound(h.begin(), h.end(), cand,
                               [](const Slot& a, const NeighborList& c) { return closer({a.node, a.distance}, c); });
    h.insert(it, Slot{q, d, true});
    if (static_cast<Index>(h.size()) > width) h.pop_back();
    return true;
  };

  for (Index p = 0; p < n; ++p) {
    std::uniform_int_distribution<Index> pick(0, n - 1);
    while (static_cast<Index>(heap[static_cast<std::size_t>(p)].size()) < width) {
      const Index q = pick(rng);
      if (q != p) try_insert(p, q, dist(p, q));
    }
  }

  const double stop = 0.001 * static_cast<double>(n * width);
  for (int iter = 0; iter < options.descent_iterations; ++iter) {
    std::vector<std::vector<Index>> fresh(static_cast<std::size_t>(n)), old(static_cast<std::size_t>(n));
    for (Index p = 0; p < n; ++p)
      for (auto& s : heap[static_cast<std::size_t>(p)]) {
        (s.fresh ? fresh : old)[static_cast<std::size_t>(p)].push_back(s.node);
        s.fresh = false;
      }
    std::vector<std::vector<Index>> rfresh(static_cast<std::size_t>(n)), rold(static_cast<std::size_t>(n));
    for (Index p = 0; p < n; ++p) {
      for (Index q : fresh[static_cast<std::size_t>(p)])
        if (static_cast<Index>(rfresh[static_cast<std::size_t>(q)].size()) < width)
          rfresh[static_cast<std::size_t>(q)].push_back(p);
      for (Index q : old[static_cast<std::size_t>(p)])
        if (static_cast<Index>(rold[static_cast<std::size_t>(q)].size()) < width)
          rold[static_cast<std::size_t>(q)].push_back(p);
    }
    std::size_t updates = 0;
    std::vector<Index> nf, no;
    for (Index p = 0; p < n; ++p) {
      nf = fresh[static_cast<std::size_t>(p)];
      nf.insert(nf.end(), rfresh[static_cast<std::size_t>(p)].begin(), rfresh[static_cast<std::size_t>(p)].end());
      no = old[static_cast<std::size_t>(p)];
      no.insert(no.end(), rold[static_cast<std::size_t>(p)].begin(), rold[static_cast<std::size_t>(p)].end());
      std::sort(nf.begin(), nf.end());
      nf.erase(std::unique(nf.begin(), nf.end()), nf.end());
      std::sort(no.begin(), no.end());
      no.erase(std::unique(no.begin(), no.end()), no.end());
      for (std::size_t i = 0; i < nf.size(); ++i) {
        for (std::size_t j = i + 1; j < nf.size(); ++j) {
          const double d = dist(nf[i], nf[j]);
          updates += try_insert(nf[i], nf[j], d);
          updates += try_insert(nf[j], nf[i], d);
        }
        for (Index o : no) {
          if (o == nf[i]) continue;
          const double d = dist(nf[i], o);
          updates += try_insert(nf[i], o, d);
          updates += try_insert(o, nf[i], d);
        }
      }
    }
    if (static_cast<double>(updates) <= stop) break;
  }

  std::vector<std::vector<NeighborList>> out(static_cast<std::size_t>(n));
  for (Index p = 0; p < n; ++p) {
    auto& h = heap[static_cast<std::size_t>(p)];
    for (Index i = 0; i < k; ++i) out[static_cast<std::size_t>(p)].push_back({h[static_cast<std::size_t>(i)].node, h[static_cast<std::size_t>(i)].distance});
  }
  return out;
}

}  // namespace

DataDistanceView::DataDistanceView(const RowMatrix& x) : x_(&x), sq_norms_(x.rowwise().squaredNorm()) {}

double DataDistanceView::screened(Index p, Index q) const {
  return sq_norms_(p) + sq_norms_(q) - 2.0 * x_->row(p).dot(x_->row(q));
}

double data_distance(const EmbeddingMatrix& x, Index p, Index q) {
  if (p < 0 || q < 0 || p >= x.n_samples() || q >= x.n_samples())
    throw Error("data_distance: index out of range (" + std::to_string(p) + ", " + std::to_string(q) + ")");
  return (x.values.row(p) - x.values.row(q)).squaredNorm();
}

std::vector<std::vector<NeighborList>> knn_lists(const RowMatrix& x, Index k, const KnnOptions& options) {
  check_k(x.rows(), k);
  return x.rows() <= options.exact_limit ? exact_knn(x, k) : descent_knn(x, k, options);
}

WeightedGraph build_knn_graph(const EmbeddingMatrix& x, Index k, const KnnOptions& options) {
  check_k(x.n_samples(), k);
  const auto lists = knn_lists(x.values, k, options);
  std::map<std::pair<Index, Index>, double> pairs;
  for (Index p = 0; p < x.n_samples(); ++p)
    for (const auto& nb : lists[static_cast<std::size_t>(p)])
      pairs.emplace(std::minmax(p, nb.node), nb.distance);

  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  std::vector<std::string> duplicates;
  for (const auto& [key, d] : pairs) {
    if (d < options.min_distance && duplicates.size() < 20)
      duplicates.push_back(x.sample_ids[static_cast<std::size_t>(key.first)] + "/" +
                           x.sample_ids[static_cast<std::size_t>(key.second)]);
    edges.push_back({key.first, key.second, 1.0 / std::max(d, options.min_distance)});
  }
  if (!duplicates.empty()) {
    std::string msg = "duplicate samples (d_dat clamped): ";
    for (std::size_t i = 0; i < duplicates.size(); ++i) msg += (i ? ", " : "") + duplicates[i];
    warn(msg);
  }
  return WeightedGraph(x.n_samples(), std::move(edges), x.sample_ids);
}

WeightedGraph ensure_connected(const WeightedGraph& g, const EmbeddingMatrix& x, ConnectivityRepair* report,
                               double min_distance) {
  if (g.n_nodes() != x.n_samples()) throw Error("ensure_connected: graph and embedding sizes differ");
  Index count = 0;
  const auto label = connected_components(g, &count);
  if (report) {
    report->components_before = count;
    report->added.clear();
  }
  if (count <= 1) return g;

  std::vector<std::vector<Index>> members(static_cast<std::size_t>(count));
  for (Index u = 0; u < g.n_nodes(); ++u) members[static_cast<std::size_t>(label[static_cast<std::size_t>(u)])].push_back(u);
  std::size_t principal = 0;
  for (std::size_t c = 1; c < members.size(); ++c)
    if (members[c].size() > members[principal].size()) principal = c;

  std::vector<Edge> bridges(members.size());
  parallel_for(static_cast<Index>(members.size()), [&](Index ci) {
    const auto c = static_cast<std::size_t>(ci);
    if (c == principal) return;
    double best = std::numeric_limits<double>::infinity();
    std::pair<Index, Index> best_pair{-1, -1};
    for (Index p : members[c])
      for (Index q : members[principal]) {
        const double d = (x.values.row(p) - x.values.row(q)).squaredNorm();
        const std::pair<Index, Index> key{std::min(p, q), std::max(p, q)};
        if (d < best || (d == best && key < best_pair)) {
          best = d;
          best_pair = key;
        }
      }
    bridges[c] = {best_pair.first, best_pair.second, 1.0 / std::max(best, min_distance)};
  });

  auto edges = g.edges();
  for (std::size_t c = 0; c < members.size(); ++c) {
    if (c == principal) continue;
    edges.push_back(bridges[c]);
    if (report) report->added.push_back(bridges[c]);
  }
  return WeightedGraph(g.n_nodes(), std::move(edges), g.node_ids());
}

}  // namespace salman
