#include "fvsggm/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "fvsggm/error.hpp"

namespace fvsggm {

SymMatrix::SymMatrix(Index dim) {
  if (dim < 1) throw_input("SymMatrix dimension must be positive");
  m_ = MatrixXd::Zero(dim, dim);
}

SymMatrix::SymMatrix(const MatrixXd& m) {
  if (m.rows() != m.cols()) throw_input("SymMatrix requires a square matrix");
  if (m.rows() < 1) throw_input("SymMatrix dimension must be positive");
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(Index dim) {
  SymMatrix s(dim);
  s.m_.setIdentity();
  return s;
}

SymMatrix SymMatrix::checked(const MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) {
    throw_input("matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                ", expected square");
  }
  if (m.rows() < 1) throw_input("empty matrix");
  if (!m.allFinite()) throw_input("matrix has non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol * scale) {
    throw_input("matrix is not symmetric (max |a_ij - a_ji| = " + std::to_string(asym) + ")");
  }
  return SymMatrix(m);
}

bool SymMatrix::is_pd() const {
  if (m_.size() == 0) return false;
  Eigen::LLT<MatrixXd> llt(m_);
  return llt.info() == Eigen::Success;
}

double SymMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double SymMatrix::max_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(m_.rows() - 1);
}

double SymMatrix::log_det() const {
  Eigen::LLT<MatrixXd> llt(m_);
  if (llt.info() != Eigen::Success) throw_numerical("log_det: matrix is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

SymMatrix SymMatrix::principal(const std::vector<Index>& idx) const {
  return SymMatrix(submatrix(m_, idx, idx));
}

MatrixXd submatrix(const MatrixXd& m, const std::vector<Index>& rows,
                   const std::vector<Index>& cols) {
  MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (Index r = 0; r < out.rows(); ++r) {
    for (Index c = 0; c < out.cols(); ++c) out(r, c) = m(rows[r], cols[c]);
  }
  return out;
}

Partition::Partition(Index n, std::vector<Index> fvs) : n_(n), fvs_(std::move(fvs)) {
  if (n < 0) throw_input("partition size must be nonnegative");
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  for (Index v : fvs_) {
    if (v < 0 || v >= n) throw_input("FVS node " + std::to_string(v) + " out of range");
    if (taken[v]) throw_input("FVS node " + std::to_string(v) + " listed twice");
    taken[v] = 1;
  }
  for (Index v = 0; v < n; ++v) {
    if (!taken[v]) tree_.push_back(v);
  }
}

std::vector<Index> Partition::block_order() const {
  std::vector<Index> order(fvs_);
  order.insert(order.end(), tree_.begin(), tree_.end());
  return order;
}

GaussianDensity GaussianDensity::zero_mean(SymMatrix cov) {
  GaussianDensity g;
  g.mean = VectorXd::Zero(cov.dim());
  g.cov = std::move(cov);
  return g;
}

EmpiricalStats empirical_stats(const MatrixXd& samples) {
  const Index s = samples.rows();
  const Index n = samples.cols();
  if (s < 2) throw_input("empirical_stats needs at least 2 samples, got " + std::to_string(s));
  if (n < 1) throw_input("empirical_stats needs at least one variable");
  EmpiricalStats st;
  st.samples = s;
  st.mean = samples.colwise().mean().transpose();
  const MatrixXd centered = samples.rowwise() - st.mean.transpose();
  // Centering first is algebraically the 1/s sum of outer products minus mu mu^T.
  st.cov = SymMatrix(MatrixXd(centered.transpose() * centered / static_cast<double>(s)));
  return st;
}

EmpiricalStats stats_from_covariance(SymMatrix cov) {
  EmpiricalStats st;
  st.mean = VectorXd::Zero(cov.dim());
  st.cov = std::move(cov);
  return st;
}

double kl_gaussian(const GaussianDensity& p_hat, const GaussianDensity& q) {
  const Index n = q.cov.dim();
  if (p_hat.cov.dim() != n || p_hat.mean.size() != n || q.mean.size() != n) {
    throw_input("kl_gaussian: dimension mismatch");
  }
  Eigen::LLT<MatrixXd> llt(q.cov.dense());
  if (llt.info() != Eigen::Success) throw_numerical("kl_gaussian: q covariance is not PD");
  const MatrixXd prod = llt.solve(p_hat.cov.dense());  // Sigma^{-1} Sigma_hat
  const VectorXd diff = q.mean - p_hat.mean;
  const double maha = diff.dot(llt.solve(diff));
  // ln det(Sigma^{-1} Sigma_hat) = ln det Sigma_hat - ln det Sigma
  const double ld_q = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  Eigen::LDLT<MatrixXd> ldlt_p(p_hat.cov.dense());
  if (ldlt_p.info() != Eigen::Success || !(ldlt_p.vectorD().array() > 0.0).all()) {
    throw_numerical("kl_gaussian: p_hat covariance is singular");
  }
  const double ld_p = ldlt_p.vectorD().array().log().sum();
  const double kl = 0.5 * (prod.trace() + maha - static_cast<double>(n) - (ld_p - ld_q));
  return std::max(kl, 0.0);
}

SymMatrix schur_conditional(const SymMatrix& cov, const Partition& part) {
  if (cov.dim() != part.n()) throw_input("schur_conditional: partition size mismatch");
  if (part.m() == 0) throw_input("schur_conditional: no tree nodes");
  const MatrixXd& c = cov.dense();
  MatrixXd t = submatrix(c, part.tree_nodes(), part.tree_nodes());
  if (part.k() == 0) return SymMatrix(t);
  const MatrixXd f = submatrix(c, part.fvs(), part.fvs());
  const MatrixXd mblk = submatrix(c, part.tree_nodes(), part.fvs());
  Eigen::LLT<MatrixXd> llt(f);
  if (llt.info() != Eigen::Success) throw_numerical("schur_conditional: FVS block is singular");
  t.noalias() -= mblk * llt.solve(mblk.transpose());
  return SymMatrix(t);
}

SymMatrix block_inverse(const SymMatrix& m, const Partition& part) {
  if (m.dim() != part.n()) throw_input("block_inverse: partition size mismatch");
  const MatrixXd& d = m.dense();
  const auto& fi = part.fvs();
  const auto& ti = part.tree_nodes();
  MatrixXd out(part.n(), part.n());

  auto chol = [](const MatrixXd& a, const char* what) {
    Eigen::LLT<MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) {
      throw_numerical(std::string("block_inverse: ") + what + " is not positive definite");
    }
    return llt;
  };
  auto scatter = [&out](const std::vector<Index>& r, const std::vector<Index>& c,
                        const MatrixXd& blk) {
    for (Index a = 0; a < blk.rows(); ++a)
      for (Index b = 0; b < blk.cols(); ++b) out(r[a], c[b]) = blk(a, b);
  };

  if (part.k() == 0 || part.m() == 0) {
    const auto llt = chol(d, "matrix");
    return SymMatrix(MatrixXd(llt.solve(MatrixXd::Identity(d.rows(), d.cols()))));
  }
  // A = F block, B = A-to-T cross block, D = T block; S = D - C A^{-1} B.
  const MatrixXd a = submatrix(d, fi, fi);
  const MatrixXd b = submatrix(d, fi, ti);
  const MatrixXd dt = submatrix(d, ti, ti);
  const auto llt_a = chol(a, "leading block");
  const MatrixXd a_inv_b = llt_a.solve(b);
  const MatrixXd s = dt - b.transpose() * a_inv_b;
  const auto llt_s = chol(s, "Schur complement");
  const MatrixXd s_inv = llt_s.solve(MatrixXd::Identity(s.rows(), s.cols()));
  const MatrixXd off = -a_inv_b * s_inv;  // -A^{-1} B S^{-1}
  const MatrixXd top = llt_a.solve(MatrixXd::Identity(a.rows(), a.cols())) - off * a_inv_b.transpose();
  scatter(fi, fi, top);
  scatter(fi, ti, off);
  scatter(ti, fi, off.transpose());
  scatter(ti, ti, s_inv);
  return SymMatrix(out);
}

MatrixXd sample_gaussian(const GaussianDensity& model, Index s, std::uint64_t seed) {
  const Index n = model.cov.dim();
  if (s < 1) throw_input("sample_gaussian: sample count must be positive");
  if (model.mean.size() != n) throw_input("sample_gaussian: mean/cov dimension mismatch");
  Eigen::LLT<MatrixXd> llt(model.cov.dense());
  if (llt.info() != Eigen::Success) throw_numerical("sample_gaussian: covariance is not PD");
  const MatrixXd l = llt.matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd z(s, n);
  for (Index r = 0; r < s; ++r)
    for (Index c = 0; c < n; ++c) z(r, c) = normal(rng);
  MatrixXd out = z * l.transpose();
  out.rowwise() += model.mean.transpose();
  return out;
}

}  // namespace fvsggm
