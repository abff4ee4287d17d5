#include "fvsggm/fvs_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fvsggm/error.hpp"

namespace fvsggm {

namespace {

Eigen::LLT<MatrixXd> chol_or_throw(const MatrixXd& a, const char* what) {
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw_numerical(std::string(what) + " is not positive definite");
  return llt;
}

}  // namespace

MatrixXd FvsModel::assemble() const {
  const auto& f = part.fvs();
  const auto& t = part.tree_nodes();
  MatrixXd j = MatrixXd::Zero(n(), n());
  for (Index a = 0; a < k(); ++a)
    for (Index b = 0; b < k(); ++b) j(f[a], f[b]) = j_f(a, b);
  for (Index i = 0; i < part.m(); ++i) {
    for (Index a = 0; a < k(); ++a) {
      j(t[i], f[a]) = j_m(i, a);
      j(f[a], t[i]) = j_m(i, a);
    }
    j(t[i], t[i]) = j_t.diag(i);
  }
  const auto& es = j_t.tree.edges();
  for (std::size_t e = 0; e < es.size(); ++e) {
    j(t[es[e].u], t[es[e].v]) = j_t.edge[e];
    j(t[es[e].v], t[es[e].u]) = j_t.edge[e];
  }
  return j;
}

VectorXd FvsModel::potential() const {
  return h.size() == 0 ? VectorXd::Zero(n()) : h;
}

void FvsModel::validate() const {
  const Index kk = k(), mm = part.m();
  if (j_f.rows() != kk || j_f.cols() != kk) throw_input("model: J_F must be k x k");
  if (j_m.rows() != mm || j_m.cols() != kk) throw_input("model: J_M must be (n-k) x k");
  if (j_t.size() != mm || j_t.diag.size() != mm) throw_input("model: J_T size must be n-k");
  if (j_t.edge.size() != j_t.tree.edges().size()) throw_input("model: J_T edge values misaligned");
  if (!j_t.tree.is_spanning()) throw_input("model: J_T structure is not a spanning tree");
  if (h.size() != 0 && h.size() != n()) throw_input("model: h must have length n");
  if (kk > 0 && j_f != j_f.transpose()) throw_input("model: J_F is not symmetric");
  if (!j_f.allFinite() || !j_m.allFinite() || !j_t.diag.allFinite()) {
    throw_input("model: non-finite entries");
  }
  // J is PD iff J_T is PD and J_F - J_M^T J_T^{-1} J_M is PD.
  const FeedbackSolve fs = feedback_solve(*this, false);
  chol_or_throw(fs.j_hat_f, "model: feedback Schur complement");
}

FeedbackSolve feedback_solve(const FvsModel& model, bool with_potential) {
  const Index kk = model.k(), mm = model.part.m();
  MatrixXd rhs(mm, kk + (with_potential ? 1 : 0));
  rhs.leftCols(kk) = model.j_m;
  if (with_potential) {
    const VectorXd h = model.potential();
    const auto& t = model.part.tree_nodes();
    for (Index i = 0; i < mm; ++i) rhs(i, kk) = h(t[i]);
  }
  FeedbackSolve fs;
  fs.bp = tree_bp(model.j_t, rhs);
  // (J_hat_F)_pq = J_pq - sum over tree neighbors j of p of J_pj g^q_j.
  fs.j_hat_f = model.j_f;
  for (Index p = 0; p < kk; ++p) {
    for (Index j = 0; j < mm; ++j) {
      const double jpj = model.j_m(j, p);
      if (jpj == 0.0) continue;
      fs.j_hat_f.row(p) -= jpj * fs.bp.solves.block(j, 0, 1, kk);
    }
  }
  fs.j_hat_f = 0.5 * (fs.j_hat_f + fs.j_hat_f.transpose()).eval();
  return fs;
}

double fvs_log_det(const FvsModel& model) {
  const FeedbackSolve fs = feedback_solve(model, false);
  double ld = -tree_log_det_inv(fs.bp, model.j_t.tree);
  if (model.k() > 0) {
    const auto llt = chol_or_throw(fs.j_hat_f, "fvs_log_det: feedback Schur complement");
    ld += 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  return ld;
}

Marginals fvs_marginals(const FvsModel& model) {
  const Index kk = model.k(), mm = model.part.m();
  const auto& f = model.part.fvs();
  const auto& t = model.part.tree_nodes();
  const VectorXd h = model.potential();
  const FeedbackSolve fs = feedback_solve(model, true);
  const MatrixXd g = fs.bp.solves.leftCols(kk);  // J_T^{-1} J_M
  const VectorXd g_h = fs.bp.solves.col(kk);     // J_T^{-1} h_T

  Marginals out;
  out.mean.resize(model.n());
  out.variance.resize(model.n());
  if (kk == 0) {
    for (Index i = 0; i < mm; ++i) {
      out.mean(t[i]) = g_h(i);
      out.variance(t[i]) = fs.bp.node_variance(i);
    }
    return out;
  }

  const auto llt = chol_or_throw(fs.j_hat_f, "fvs_marginals: feedback Schur complement");
  VectorXd h_f(kk);
  for (Index a = 0; a < kk; ++a) h_f(a) = h(f[a]);
  const VectorXd mu_f = llt.solve(h_f - model.j_m.transpose() * g_h);
  const MatrixXd sigma_f = llt.solve(MatrixXd::Identity(kk, kk));
  for (Index a = 0; a < kk; ++a) {
    out.mean(f[a]) = mu_f(a);
    out.variance(f[a]) = sigma_f(a, a);
  }
  const VectorXd mu_t = g_h - g * mu_f;
  for (Index i = 0; i < mm; ++i) {
    out.mean(t[i]) = mu_t(i);
    out.variance(t[i]) = fs.bp.node_variance(i) + g.row(i).dot(sigma_f * g.row(i).transpose());
  }
  return out;
}

double log_partition(const FvsModel& model) {
  const double n = static_cast<double>(model.n());
  const VectorXd h = model.potential();
  double quad = 0.0;
  if (h.squaredNorm() > 0.0) quad = h.dot(fvs_marginals(model).mean);
  return 0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * fvs_log_det(model) + 0.5 * quad;
}

}  // namespace fvsggm
