#pragma once

// Tree-structured Gaussian kernels: Chow-Liu learning, information-matrix
// construction from a tree-consistent covariance, two-pass Gaussian BP and the
// tree log-determinant.

#include <utility>
#include <vector>

#include "fvsggm/gaussian.hpp"

namespace fvsggm {

/// Undirected edge with u < v.
struct Edge {
  Index u = 0;
  Index v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Acyclic edge set over nodes {0..size-1}. A spanning tree has size-1 edges;
/// fewer edges describe a forest, which the BP kernels also accept.
class SpanningTree {
 public:
  struct Rooted {
    std::vector<Index> order;        // pre-order, roots first in each component
    std::vector<Index> parent;       // -1 at roots
    std::vector<Index> parent_edge;  // index into edges(), -1 at roots
  };

  SpanningTree() = default;
  /// Input error on self loops, duplicate edges, cycles or out-of-range nodes.
  SpanningTree(Index size, std::vector<Edge> edges, std::vector<double> weights = {});

  Index size() const { return size_; }
  const std::vector<Edge>& edges() const { return edges_; }
  /// Empty unless the tree came from a weighted construction such as Chow-Liu.
  const std::vector<double>& weights() const { return weights_; }
  bool is_spanning() const { return size_ == 0 || static_cast<Index>(edges_.size()) == size_ - 1; }

  /// (neighbor, edge index) pairs for each node.
  const std::vector<std::vector<std::pair<Index, Index>>>& adjacency() const { return adj_; }
  std::vector<Index> degrees() const;
  /// Rooted at the lowest-index node of every component.
  const Rooted& rooted() const { return rooted_; }
  std::vector<Edge> sorted_edges() const;

 private:
  Index size_ = 0;
  std::vector<Edge> edges_;
  std::vector<double> weights_;
  std::vector<std::vector<std::pair<Index, Index>>> adj_;
  Rooted rooted_;
};

/// Symmetric matrix whose off-diagonal support is the edge set of a tree.
struct TreeMatrix {
  SpanningTree tree;
  VectorXd diag;
  std::vector<double> edge;  // aligned with tree.edges()

  Index size() const { return tree.size(); }
  MatrixXd dense() const;
  MatrixXd multiply(const MatrixXd& x) const;
  VectorXd multiply(const VectorXd& x) const;
};

struct TreeBpResult {
  VectorXd node_variance;               // (J^{-1})_ii
  std::vector<double> edge_covariance;  // (J^{-1})_ij, aligned with tree.edges()
  MatrixXd solves;                      // column p is J^{-1} rhs.col(p)
};

struct ChowLiuResult {
  SymMatrix cov_cl;
  SpanningTree tree;
};

/// Gaussian mutual information -0.5 ln(1 - rho^2), |rho| clamped to 1 - 1e-12.
double gaussian_mutual_information(double rho);

/// Kruskal maximum-weight spanning tree over the complete graph on m nodes,
/// weight(i, j) given row-major for i < j. Ties go to the lexicographically
/// smaller edge.
SpanningTree max_weight_spanning_tree(Index m, const MatrixXd& weight);

/// Chow-Liu projection of a covariance onto tree-structured models.
ChowLiuResult chow_liu(const SymMatrix& cov);

/// Tree-consistent covariance for `tree`: diagonal and edge entries copied
/// from cov, remaining entries filled with path products of correlations.
SymMatrix tree_projection(const SymMatrix& cov, const SpanningTree& tree);

/// Nonzeros of cov^{-1}, assuming cov^{-1} is sparse on `tree`.
TreeMatrix tree_information_matrix(const SymMatrix& cov, const SpanningTree& tree);

/// Two-pass Gaussian BP on a PD tree matrix. rhs has one column per system and
/// may have zero columns.
TreeBpResult tree_bp(const TreeMatrix& j, const MatrixXd& rhs);

/// ln det(J^{-1}) from BP marginals.
double tree_log_det_inv(const TreeBpResult& bp, const SpanningTree& tree);

}  // namespace fvsggm
