#pragma once

// Gaussian models whose information matrix is a tree plus a small set of
// feedback nodes, and O(k^2 n) exact inference on them.

#include "fvsggm/gaussian.hpp"
#include "fvsggm/tree.hpp"

namespace fvsggm {

/// J = [[J_F, J_M^T], [J_M, J_T]] in block order (F first, then T).
/// j_f is indexed by part.fvs(), j_t and the rows of j_m by part.tree_nodes().
/// h is indexed by original node ids.
struct FvsModel {
  Partition part;
  MatrixXd j_f;  // k x k
  MatrixXd j_m;  // (n-k) x k
  TreeMatrix j_t;
  VectorXd h;    // length n; zero when empty

  Index n() const { return part.n(); }
  Index k() const { return part.k(); }

  /// Dense J in original node order.
  MatrixXd assemble() const;
  VectorXd potential() const;

  /// Shape, tree and positive-definiteness checks; throws Input for shape or
  /// structure problems and Numerical when J is not PD.
  void validate() const;
};

struct Marginals {
  VectorXd mean;      // original node order
  VectorXd variance;  // original node order
};

/// Tree solves that every FVS computation starts from.
struct FeedbackSolve {
  TreeBpResult bp;  // solves: columns of J_M, then (optionally) h_T
  MatrixXd j_hat_f; // J_F - J_M^T J_T^{-1} J_M
};

/// BP on J_T against the columns of J_M (plus h_T when with_potential), and
/// the k x k Schur complement built from the neighbor sums.
FeedbackSolve feedback_solve(const FvsModel& model, bool with_potential);

/// ln det J.
double fvs_log_det(const FvsModel& model);

/// ln of the normalizer of exp(-x^T J x / 2 + h^T x).
double log_partition(const FvsModel& model);

Marginals fvs_marginals(const FvsModel& model);

}  // namespace fvsggm
