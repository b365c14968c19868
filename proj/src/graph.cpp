#include "salman/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace salman {
namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

WeightedGraph::WeightedGraph(Index n_nodes, std::vector<Edge> edges, std::vector<std::string> node_ids)
    : n_nodes_(n_nodes), edges_(std::move(edges)), node_ids_(std::move(node_ids)) {
  if (n_nodes_ < 0) throw Error("negative node count");
  if (node_ids_.empty()) {
    node_ids_.reserve(static_cast<std::size_t>(n_nodes_));
    for (Index i = 0; i < n_nodes_; ++i) node_ids_.push_back(std::to_string(i));
  } else if (static_cast<Index>(node_ids_.size()) != n_nodes_) {
    throw Error("node id count does not match node count");
  }
  for (auto& e : edges_) {
    if (e.u < 0 || e.v < 0 || e.u >= n_nodes_ || e.v >= n_nodes_)
      throw Error("edge endpoint out of range: (" + std::to_string(e.u) + ", " + std::to_string(e.v) + ")");
    if (e.u == e.v) throw Error("self-loop at node " + std::to_string(e.u));
    if (!(e.weight > 0.0) || !std::isfinite(e.weight))
      throw Error("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) + ") has non-positive or non-finite weight");
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges_.begin(), edges_.end(),
            [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
  for (std::size_t i = 1; i < edges_.size(); ++i)
    if (edges_[i].u == edges_[i - 1].u && edges_[i].v == edges_[i - 1].v)
      throw Error("duplicate edge (" + std::to_string(edges_[i].u) + ", " + std::to_string(edges_[i].v) + ")");

  offsets_.assign(static_cast<std::size_t>(n_nodes_) + 1, 0);
  for (const auto& e : edges_) {
    ++offsets_[static_cast<std::size_t>(e.u) + 1];
    ++offsets_[static_cast<std::size_t>(e.v) + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  adjacency_.resize(offsets_.back());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    adjacency_[fill[static_cast<std::size_t>(e.u)]++] = {e.v, e.weight, static_cast<Index>(k)};
    adjacency_[fill[static_cast<std::size_t>(e.v)]++] = {e.u, e.weight, static_cast<Index>(k)};
  }
  for (Index u = 0; u < n_nodes_; ++u) {
    auto* first = adjacency_.data() + offsets_[static_cast<std::size_t>(u)];
    auto* last = adjacency_.data() + offsets_[static_cast<std::size_t>(u) + 1];
    std::sort(first, last, [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
  }
}

Index WeightedGraph::find_edge(Index u, Index v) const {
  if (u < 0 || v < 0 || u >= n_nodes_ || v >= n_nodes_) return -1;
  auto nb = neighbors(u);
  auto it = std::lower_bound(nb.begin(), nb.end(), v, [](const Neighbor& a, Index key) { return a.node < key; });
  return it != nb.end() && it->node == v ? it->edge : -1;
}

Eigen::VectorXd WeightedGraph::weighted_degrees() const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n_nodes_);
  for (const auto& e : edges_) {
    d(e.u) += e.weight;
    d(e.v) += e.weight;
  }
  return d;
}

Eigen::SparseMatrix<double> adjacency_matrix(const WeightedGraph& g) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(2 * g.edges().size());
  for (const auto& e : g.edges()) {
    t.emplace_back(e.u, e.v, e.weight);
    t.emplace_back(e.v, e.u, e.weight);
  }
  Eigen::SparseMatrix<double> a(g.n_nodes(), g.n_nodes());
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

Eigen::SparseMatrix<double> laplacian_matrix(const WeightedGraph& g) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(4 * g.edges().size());
  for (const auto& e : g.edges()) {
    t.emplace_back(e.u, e.v, -e.weight);
    t.emplace_back(e.v, e.u, -e.weight);
    t.emplace_back(e.u, e.u, e.weight);
    t.emplace_back(e.v, e.v, e.weight);
  }
  Eigen::SparseMatrix<double> l(g.n_nodes(), g.n_nodes());
  l.setFromTriplets(t.begin(), t.end());
  return l;
}

Eigen::MatrixXd dense_laplacian(const WeightedGraph& g) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(g.n_nodes(), g.n_nodes());
  for (const auto& e : g.edges()) {
    l(e.u, e.u) += e.weight;
    l(e.v, e.v) += e.weight;
    l(e.u, e.v) -= e.weight;
    l(e.v, e.u) -= e.weight;
  }
  return l;
}

std::vector<Index> connected_components(const WeightedGraph& g, Index* n_components) {
  std::vector<Index> label(static_cast<std::size_t>(g.n_nodes()), -1);
  std::vector<Index> stack;
  Index next = 0;
  for (Index s = 0; s < g.n_nodes(); ++s) {
    if (label[static_cast<std::size_t>(s)] >= 0) continue;
    label[static_cast<std::size_t>(s)] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (const auto& nb : g.neighbors(u)) {
        auto& l = label[static_cast<std::size_t>(nb.node)];
        if (l < 0) {
          l = next;
          stack.push_back(nb.node);
        }
      }
    }
    ++next;
  }
  if (n_components) *n_components = next;
  return label;
}

bool is_connected(const WeightedGraph& g) {
  Index count = 0;
  connected_components(g, &count);
  return count <= 1;
}

WeightedGraph scale_weights(const WeightedGraph& g, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw Error("scale factor must be positive and finite");
  auto edges = g.edges();
  for (auto& e : edges) e.weight *= factor;
  return WeightedGraph(g.n_nodes(), std::move(edges), g.node_ids());
}

WeightedGraph induced_subgraph(const WeightedGraph& g, std::span<const Index> nodes) {
  std::vector<Index> remap(static_cast<std::size_t>(g.n_nodes()), -1);
  std::vector<std::string> ids;
  ids.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Index u = nodes[i];
    if (u < 0 || u >= g.n_nodes()) throw Error("induced_subgraph: node out of range");
    if (remap[static_cast<std::size_t>(u)] >= 0) throw Error("induced_subgraph: repeated node");
    remap[static_cast<std::size_t>(u)] = static_cast<Index>(i);
    ids.push_back(g.node_ids()[static_cast<std::size_t>(u)]);
  }
  std::vector<Edge> edges;
  for (const auto& e : g.edges()) {
    const Index a = remap[static_cast<std::size_t>(e.u)], b = remap[static_cast<std::size_t>(e.v)];
    if (a >= 0 && b >= 0) edges.push_back({a, b, e.weight});
  }
  return WeightedGraph(static_cast<Index>(nodes.size()), std::move(edges), std::move(ids));
}

WeightedGraph largest_component(const WeightedGraph& g, std::vector<Index>* kept) {
  Index count = 0;
  const auto label = connected_components(g, &count);
  std::vector<Index> size(static_cast<std::size_t>(count), 0);
  for (Index l : label) ++size[static_cast<std::size_t>(l)];
  // Labels follow node order, so the first maximum holds the lowest node index.
  const Index best = static_cast<Index>(std::max_element(size.begin(), size.end()) - size.begin());
  std::vector<Index> nodes;
  for (Index u = 0; u < g.n_nodes(); ++u)
    if (label[static_cast<std::size_t>(u)] == best) nodes.push_back(u);
  if (kept) *kept = nodes;
  return induced_subgraph(g, nodes);
}

std::string graph_to_json(const WeightedGraph& g) {
  nlohmann::ordered_json doc;
  doc["n_nodes"] = g.n_nodes();
  doc["node_ids"] = g.node_ids();
  auto edges = nlohmann::ordered_json::array();
  for (const auto& e : g.edges()) edges.push_back({e.u, e.v, e.weight});
  doc["edges"] = std::move(edges);
  return doc.dump() + "\n";
}

WeightedGraph graph_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("graph JSON: ") + e.what());
  }
  try {
    const Index n = doc.at("n_nodes").get<Index>();
    auto ids = doc.at("node_ids").get<std::vector<std::string>>();
    std::vector<Edge> edges;
    edges.reserve(doc.at("edges").size());
    for (const auto& row : doc.at("edges")) {
      if (!row.is_array() || row.size() != 3) throw FormatError("graph JSON: edge entries must be [u, v, w]");
      edges.push_back({row[0].get<Index>(), row[1].get<Index>(), row[2].get<double>()});
    }
    return WeightedGraph(n, std::move(edges), std::move(ids));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("graph JSON: ") + e.what());
  }
}

void write_graph(const WeightedGraph& g, const std::filesystem::path& path) { spit(path, graph_to_json(g)); }

WeightedGraph read_graph(const std::filesystem::path& path) {
  try {
    return graph_from_json(slurp(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

WeightedGraph parse_edge_list(std::string_view text) {
  struct Raw {
    long long u, v;
    double w;
    std::size_t line;
  };
  std::vector<Raw> raw;
  long long min_index = -1, max_index = -1;
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#' || line[first] == '%') continue;
    std::istringstream ls(line);
    long long u, v;
    double w = 1.0;
    if (!(ls >> u >> v)) throw FormatError("edge list line " + std::to_string(line_no) + ": expected \"u v [w]\"", line_no);
    if (!(ls >> w)) {
      if (!ls.eof()) throw FormatError("edge list line " + std::to_string(line_no) + ": bad weight", line_no);
      w = 1.0;
    }
    std::string rest;
    if (ls >> rest) throw FormatError("edge list line " + std::to_string(line_no) + ": trailing fields", line_no);
    if (u < 0 || v < 0) throw FormatError("edge list line " + std::to_string(line_no) + ": negative index", line_no);
    if (!(w > 0.0) || !std::isfinite(w))
      throw FormatError("edge list line " + std::to_string(line_no) + ": weight must be positive", line_no);
    raw.push_back({u, v, w, line_no});
    const long long lo = std::min(u, v), hi = std::max(u, v);
    min_index = min_index < 0 ? lo : std::min(min_index, lo);
    max_index = std::max(max_index, hi);
  }
  if (raw.empty()) throw FormatError("edge list is empty");
  const long long base = min_index == 1 ? 1 : 0;
  std::map<std::pair<Index, Index>, double> unique;
  std::size_t loops = 0, repeats = 0;
  for (const auto& r : raw) {
    Index a = static_cast<Index>(r.u - base), b = static_cast<Index>(r.v - base);
    if (a == b) {
      ++loops;
      continue;
    }
    if (a > b) std::swap(a, b);
    if (!unique.emplace(std::make_pair(a, b), r.w).second) ++repeats;
  }
  if (loops) warn("edge list: dropped " + std::to_string(loops) + " self-loop(s)");
  if (repeats) warn("edge list: merged " + std::to_string(repeats) + " repeated pair(s), first weight kept");
  std::vector<Edge> edges;
  edges.reserve(unique.size());
  for (const auto& [key, w] : unique) edges.push_back({key.first, key.second, w});
  return WeightedGraph(static_cast<Index>(max_index - base + 1), std::move(edges));
}

WeightedGraph read_edge_list(const std::filesystem::path& path) {
  try {
    return parse_edge_list(slurp(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.row());
  }
}

}  // namespace salman
