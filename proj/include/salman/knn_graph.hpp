#pragma once

#include <cstdint>
#include <vector>

#include "salman/embedding_io.hpp"
#include "salman/graph.hpp"

namespace salman {

/// Squared Euclidean distances between rows of an embedding matrix.
class DataDistanceView {
 public:
  explicit DataDistanceView(const RowMatrix& x);

  /// ||x_p - x_q||^2, computed from the coordinate differences.
  double operator()(Index p, Index q) const { return (x_->row(p) - x_->row(q)).squaredNorm(); }

  /// Cheap Gram-form estimate |x_p|^2 + |x_q|^2 - 2 x_p.x_q; used for screening only.
  double screened(Index p, Index q) const;

  Index size() const { return x_->rows(); }
  const Eigen::VectorXd& squared_norms() const { return sq_norms_; }
  const RowMatrix& matrix() const { return *x_; }

 private:
  const RowMatrix* x_;
  Eigen::VectorXd sq_norms_;
};

/// Range-checked d_dat(p, q).
double data_distance(const EmbeddingMatrix& x, Index p, Index q);

struct KnnOptions {
  /// Exact search up to this many samples, NN-descent above.
  Index exact_limit = 20000;
  /// Zero distances (duplicate rows) are clamped to this before inversion.
  double min_distance = 1e-12;
  std::uint64_t seed = 0;
  int descent_iterations = 20;
};

struct NeighborList {
  Index node;
  double distance;  // squared Euclidean
};

/// Directed k-nearest lists, each sorted by (distance, index). Equidistant
/// candidates are resolved in favour of the lower index.
std::vector<std::vector<NeighborList>> knn_lists(const RowMatrix& x, Index k, const KnnOptions& options = {});

/// Union-symmetrized kNN graph with w = 1 / d_dat.
WeightedGraph build_knn_graph(const EmbeddingMatrix& x, Index k, const KnnOptions& options = {});

struct ConnectivityRepair {
  Index components_before = 1;
  std::vector<Edge> added;
};

/// Bridges every non-principal component to the principal (largest) one with
/// its minimum-distance cross pair, weighted 1 / d_dat.
WeightedGraph ensure_connected(const WeightedGraph& g, const EmbeddingMatrix& x, ConnectivityRepair* report = nullptr,
                               double min_distance = 1e-12);

}  // namespace salman
