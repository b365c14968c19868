#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "salman/common.hpp"

namespace salman {

struct Edge {
  Index u = 0;
  Index v = 0;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  Index node;
  double weight;
  Index edge;  // position in WeightedGraph::edges()
};

/// Undirected graph with strictly positive, finite edge weights.
///
/// Edges are stored canonically (u < v) and sorted lexicographically, so two
/// graphs with the same edge set compare and serialize identically.
class WeightedGraph {
 public:
  WeightedGraph() = default;

  /// Throws Error on self-loops, duplicate pairs, out-of-range endpoints or
  /// non-positive weights. When node_ids is empty, ids default to "0".."n-1".
  WeightedGraph(Index n_nodes, std::vector<Edge> edges, std::vector<std::string> node_ids = {});

  Index n_nodes() const { return n_nodes_; }
  Index n_edges() const { return static_cast<Index>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::string>& node_ids() const { return node_ids_; }

  std::span<const Neighbor> neighbors(Index u) const {
    return {adjacency_.data() + offsets_[static_cast<std::size_t>(u)],
            adjacency_.data() + offsets_[static_cast<std::size_t>(u) + 1]};
  }
  Index degree(Index u) const { return static_cast<Index>(neighbors(u).size()); }

  /// Index into edges() of {u, v}, or -1.
  Index find_edge(Index u, Index v) const;

  Eigen::VectorXd weighted_degrees() const;

  friend bool operator==(const WeightedGraph& a, const WeightedGraph& b) {
    return a.n_nodes_ == b.n_nodes_ && a.edges_ == b.edges_ && a.node_ids_ == b.node_ids_;
  }

 private:
  Index n_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::string> node_ids_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Neighbor> adjacency_;
};

Eigen::SparseMatrix<double> adjacency_matrix(const WeightedGraph& g);
Eigen::SparseMatrix<double> laplacian_matrix(const WeightedGraph& g);
Eigen::MatrixXd dense_laplacian(const WeightedGraph& g);

/// Component label per node, labels numbered by first appearance in node order.
std::vector<Index> connected_components(const WeightedGraph& g, Index* n_components = nullptr);
bool is_connected(const WeightedGraph& g);

WeightedGraph scale_weights(const WeightedGraph& g, double factor);

/// Subgraph induced by `nodes` (kept in the given order, renumbered 0..k-1).
WeightedGraph induced_subgraph(const WeightedGraph& g, std::span<const Index> nodes);

/// Largest connected component; ties go to the component containing the
/// lowest node index. `kept` receives the original indices when non-null.
WeightedGraph largest_component(const WeightedGraph& g, std::vector<Index>* kept = nullptr);

// JSON document {"n_nodes", "node_ids", "edges": [[u, v, w], ...]}.
std::string graph_to_json(const WeightedGraph& g);
WeightedGraph graph_from_json(std::string_view text);
void write_graph(const WeightedGraph& g, const std::filesystem::path& path);
WeightedGraph read_graph(const std::filesystem::path& path);

/// Edge-list text: one "u v [w]" per line, default w = 1. Indices are 1-based
/// when the smallest index seen is 1, otherwise 0-based. Lines starting with
/// '#' or '%' are comments. Self-loops are dropped and repeated pairs keep
/// their first weight; both are reported through warn().
WeightedGraph parse_edge_list(std::string_view text);
WeightedGraph read_edge_list(const std::filesystem::path& path);

}  // namespace salman
