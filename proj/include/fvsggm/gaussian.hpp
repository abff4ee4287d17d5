#pragma once

// Dense Gaussian building blocks: symmetric matrices, node partitions,
// empirical moments, Schur complements and the Gaussian K-L divergence.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace fvsggm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Dense symmetric matrix. Every write keeps (i, j) and (j, i) identical.
class SymMatrix {
 public:
  SymMatrix() = default;
  /// Zero matrix of size dim x dim; dim must be positive.
  explicit SymMatrix(Index dim);
  /// Symmetrizes as (m + m^T) / 2, which is exactly symmetric in floating point.
  explicit SymMatrix(const MatrixXd& m);

  static SymMatrix identity(Index dim);
  /// Rejects (Input error) a non-square matrix or one whose asymmetry exceeds
  /// `tol` relative to its largest entry.
  static SymMatrix checked(const MatrixXd& m, double tol = 1e-12);

  Index dim() const { return m_.rows(); }
  double operator()(Index i, Index j) const { return m_(i, j); }
  void set(Index i, Index j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }
  const MatrixXd& dense() const { return m_; }

  /// Cholesky succeeds.
  bool is_pd() const;
  double min_eigenvalue() const;
  double max_eigenvalue() const;
  /// ln det via Cholesky; Numerical error when not PD.
  double log_det() const;

  SymMatrix principal(const std::vector<Index>& idx) const;

 private:
  MatrixXd m_;
};

/// Split of nodes {0..n-1} into a feedback set F (in selection order) and the
/// remaining tree nodes T (ascending).
class Partition {
 public:
  Partition() = default;
  /// Input error on duplicates or out-of-range indices.
  Partition(Index n, std::vector<Index> fvs);

  Index n() const { return n_; }
  Index k() const { return static_cast<Index>(fvs_.size()); }
  Index m() const { return static_cast<Index>(tree_.size()); }
  const std::vector<Index>& fvs() const { return fvs_; }
  const std::vector<Index>& tree_nodes() const { return tree_; }

  /// Permutation listing F first, then T.
  std::vector<Index> block_order() const;

 private:
  Index n_ = 0;
  std::vector<Index> fvs_;
  std::vector<Index> tree_;
};

struct EmpiricalStats {
  Index samples = 0;
  VectorXd mean;
  SymMatrix cov;
};

struct GaussianDensity {
  VectorXd mean;
  SymMatrix cov;

  static GaussianDensity zero_mean(SymMatrix cov);
};

/// Rows are observations. Uses the biased 1/s normalization.
EmpiricalStats empirical_stats(const MatrixXd& samples);

/// Stats wrapper for a covariance given directly; the sample count is 0.
EmpiricalStats stats_from_covariance(SymMatrix cov);

/// D(p_hat || q) for two Gaussians of equal dimension.
double kl_gaussian(const GaussianDensity& p_hat, const GaussianDensity& q);

/// Conditional covariance of T given F: cov_T - cov_M cov_F^{-1} cov_M^T,
/// indexed by part.tree_nodes().
SymMatrix schur_conditional(const SymMatrix& cov, const Partition& part);

/// Inverse via the Schur-complement block formulas, F block first; the result
/// is returned in the original node order.
SymMatrix block_inverse(const SymMatrix& m, const Partition& part);

/// s x n matrix of i.i.d. draws using the Cholesky factor of model.cov.
MatrixXd sample_gaussian(const GaussianDensity& model, Index s, std::uint64_t seed);

/// Extract rows/cols of a dense matrix.
MatrixXd submatrix(const MatrixXd& m, const std::vector<Index>& rows,
                   const std::vector<Index>& cols);

}  // namespace fvsggm
