#include "fvsggm/observed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fvsggm/error.hpp"
#include "fvsggm/parallel.hpp"

namespace fvsggm {

namespace {

// Covariance of the nodes still in `remaining` conditioned on the eliminated
// ones, obtained by one-pivot Schur updates.
struct Conditioned {
  MatrixXd cov;
  std::vector<Index> remaining;
  double log_det_eliminated = 0.0;
};

Conditioned start_conditioning(const SymMatrix& cov) {
  Conditioned c;
  c.cov = cov.dense();
  c.remaining.resize(static_cast<std::size_t>(cov.dim()));
  for (Index i = 0; i < cov.dim(); ++i) c.remaining[i] = i;
  return c;
}

Conditioned eliminate(const Conditioned& in, Index pos) {
  const Index m = in.cov.rows();
  const double pivot = in.cov(pos, pos);
  if (!(pivot > 0.0)) {
    throw_numerical("conditional variance of node " + std::to_string(in.remaining[pos]) +
                    " is not positive (covariance not PD)");
  }
  Conditioned out;
  out.cov.resize(m - 1, m - 1);
  for (Index r = 0, ro = 0; r < m; ++r) {
    if (r == pos) continue;
    const double scale = in.cov(r, pos) / pivot;
    for (Index c = 0, co = 0; c < m; ++c) {
      if (c == pos) continue;
      out.cov(ro, co) = in.cov(r, c) - scale * in.cov(pos, c);
      ++co;
    }
    ++ro;
  }
  // Rounding of scale * x differs between (r, c) and (c, r); mirror the upper part.
  out.cov.triangularView<Eigen::StrictlyLower>() = out.cov.transpose().triangularView<Eigen::StrictlyLower>();
  out.remaining = in.remaining;
  out.remaining.erase(out.remaining.begin() + pos);
  out.log_det_eliminated = in.log_det_eliminated + std::log(pivot);
  return out;
}

Index position_of(const std::vector<Index>& v, Index id) {
  const auto it = std::find(v.begin(), v.end(), id);
  return static_cast<Index>(it - v.begin());
}

// d(F) = 1/2 (-ln det S + ln det S_F + sum_i ln C_ii) - sum_{MST} I(x_i; x_j | x_F)
double cost_of(const Conditioned& c, double log_det_full) {
  const Index m = c.cov.rows();
  double log_diag = 0.0;
  for (Index i = 0; i < m; ++i) {
    if (!(c.cov(i, i) > 0.0)) throw_numerical("conditional covariance is not PD");
    log_diag += std::log(c.cov(i, i));
  }
  MatrixXd w = MatrixXd::Zero(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = i + 1; j < m; ++j)
      w(i, j) = gaussian_mutual_information(c.cov(i, j) / std::sqrt(c.cov(i, i) * c.cov(j, j)));
  const SpanningTree tree = max_weight_spanning_tree(m, w);
  double mi = 0.0;
  for (double x : tree.weights()) mi += x;
  const double d = 0.5 * (-log_det_full + c.log_det_eliminated + log_diag) - mi;
  return std::max(d, 0.0);
}

double checked_log_det(const SymMatrix& cov) {
  Eigen::LLT<MatrixXd> llt(cov.dense());
  if (llt.info() != Eigen::Success) throw_numerical("empirical covariance is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

void require_subset_size(Index n, Index k) {
  if (k < 0 || k > n - 2) {
    throw_input("FVS size " + std::to_string(k) + " must lie in [0, n-2] for n = " + std::to_string(n));
  }
}

}  // namespace

std::vector<Edge> ObservedFit::global_tree_edges() const {
  const auto& t = part.tree_nodes();
  std::vector<Edge> out;
  out.reserve(tree.edges().size());
  for (const Edge& e : tree.edges()) {
    Index a = t[e.u], b = t[e.v];
    if (a > b) std::swap(a, b);
    out.push_back({a, b});
  }
  std::sort(out.begin(), out.end());
  return out;
}

ObservedFit conditioned_chow_liu(const EmpiricalStats& stats, const std::vector<Index>& fvs) {
  const SymMatrix& cov = stats.cov;
  const Index n = cov.dim();
  ObservedFit fit;
  fit.part = Partition(n, fvs);
  if (fit.part.m() < 1) throw_input("conditioned_chow_liu: FVS must leave at least one tree node");
  const auto& f = fit.part.fvs();
  const auto& t = fit.part.tree_nodes();
  const Index k = fit.part.k(), m = fit.part.m();

  const SymMatrix cond = schur_conditional(cov, fit.part);
  ChowLiuResult cl = chow_liu(cond);
  fit.tree = std::move(cl.tree);
  fit.sigma_cl = std::move(cl.cov_cl);

  MatrixXd t_block = fit.sigma_cl.dense();
  if (k > 0) {
    const MatrixXd s_f = submatrix(cov.dense(), f, f);
    const MatrixXd s_m = submatrix(cov.dense(), t, f);
    Eigen::LLT<MatrixXd> llt(s_f);
    if (llt.info() != Eigen::Success) throw_numerical("conditioned_chow_liu: FVS block is singular");
    t_block.noalias() += s_m * llt.solve(s_m.transpose());
  }
  MatrixXd full = cov.dense();
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) full(t[i], t[j]) = t_block(i, j);
  // Moment matching: diagonal and tree-edge entries are exactly the empirical ones.
  for (Index i = 0; i < m; ++i) full(t[i], t[i]) = cov(t[i], t[i]);
  for (const Edge& e : fit.tree.edges()) {
    full(t[e.u], t[e.v]) = cov(t[e.u], t[e.v]);
    full(t[e.v], t[e.u]) = cov(t[e.v], t[e.u]);
  }
  fit.sigma_ml = SymMatrix(full);
  fit.j_ml = ml_information_matrix(fit);
  fit.divergence = kl_gaussian(GaussianDensity::zero_mean(cov), GaussianDensity::zero_mean(fit.sigma_ml));
  return fit;
}

FvsModel ml_information_matrix(const ObservedFit& fit) {
  const auto& f = fit.part.fvs();
  const auto& t = fit.part.tree_nodes();
  const Index k = fit.part.k(), m = fit.part.m();
  FvsModel model;
  model.part = fit.part;
  model.j_t = tree_information_matrix(fit.sigma_cl, fit.tree);
  model.h = VectorXd::Zero(fit.part.n());
  if (k == 0) {
    model.j_f.resize(0, 0);
    model.j_m.resize(m, 0);
    return model;
  }
  const MatrixXd s_f = submatrix(fit.sigma_ml.dense(), f, f);
  const MatrixXd s_m = submatrix(fit.sigma_ml.dense(), t, f);
  Eigen::LLT<MatrixXd> llt(s_f);
  if (llt.info() != Eigen::Success) throw_numerical("ml_information_matrix: Sigma_F is singular");
  const MatrixXd jt_sm = model.j_t.multiply(s_m);                    // J_T Sigma_M, O(kn)
  const MatrixXd sm_sfinv = llt.solve(s_m.transpose()).transpose();  // Sigma_M Sigma_F^{-1}
  model.j_m = -llt.solve(jt_sm.transpose()).transpose();
  const MatrixXd inner = MatrixXd::Identity(k, k) + jt_sm.transpose() * sm_sfinv;
  const MatrixXd j_f = llt.solve(inner);
  model.j_f = 0.5 * (j_f + j_f.transpose());
  return model;
}

double fvs_cost(const EmpiricalStats& stats, const std::vector<Index>& fvs) {
  const Partition part(stats.cov.dim(), fvs);
  if (part.m() < 1) throw_input("fvs_cost: FVS must leave at least one tree node");
  const double ld = checked_log_det(stats.cov);
  Conditioned c = start_conditioning(stats.cov);
  for (Index v : part.fvs()) c = eliminate(c, position_of(c.remaining, v));
  return cost_of(c, ld);
}

ObservedFit learn_exact_fvs(const EmpiricalStats& stats, Index k, std::uint64_t cap) {
  const Index n = stats.cov.dim();
  require_subset_size(n, k);
  std::uint64_t count = 1;
  for (Index i = 0; i < k; ++i) {
    // C(n, i+1) = C(n, i) * (n - i) / (i + 1), exact at every step.
    const auto num = static_cast<std::uint64_t>(n - i);
    if (count > std::numeric_limits<std::uint64_t>::max() / num) {
      count = std::numeric_limits<std::uint64_t>::max();
      break;
    }
    count = count * num / static_cast<std::uint64_t>(i + 1);
  }
  if (count > cap) {
    throw_resource("exact FVS search over C(" + std::to_string(n) + ", " + std::to_string(k) +
                   ") subsets exceeds the cap of " + std::to_string(cap) +
                   "; use the greedy mode instead");
  }

  const double ld = checked_log_det(stats.cov);
  const Conditioned root = start_conditioning(stats.cov);
  std::vector<Index> subset(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) subset[i] = i;
  std::vector<Index> best = subset;
  double best_cost = std::numeric_limits<double>::infinity();
  while (true) {
    Conditioned c = root;
    for (Index v : subset) c = eliminate(c, position_of(c.remaining, v));
    const double d = cost_of(c, ld);
    if (d < best_cost) {
      best_cost = d;
      best = subset;
    }
    // Next combination in lexicographic order.
    Index i = k - 1;
    while (i >= 0 && subset[i] == n - k + i) --i;
    if (i < 0) break;
    ++subset[i];
    for (Index j = i + 1; j < k; ++j) subset[j] = subset[j - 1] + 1;
  }
  // Report d(F) from the search so exact and greedy values are comparable bit for bit.
  ObservedFit fit = conditioned_chow_liu(stats, best);
  fit.divergence = best_cost;
  return fit;
}

GreedyTrace learn_greedy_fvs(const EmpiricalStats& stats, Index k) {
  const Index n = stats.cov.dim();
  require_subset_size(n, k);
  const double ld = checked_log_det(stats.cov);
  Conditioned cur = start_conditioning(stats.cov);
  GreedyTrace trace;
  std::vector<Index> fvs;
  for (Index step = 0; step < k; ++step) {
    const std::size_t cands = cur.remaining.size();
    std::vector<double> cost(cands);
    parallel_for(cands, [&](std::size_t p) { cost[p] = cost_of(eliminate(cur, static_cast<Index>(p)), ld); });
    // remaining is ascending, so the first minimum is the smallest node id.
    std::size_t best = 0;
    for (std::size_t p = 1; p < cands; ++p) {
      if (cost[p] < cost[best]) best = p;
    }
    const Index node = cur.remaining[best];
    trace.steps.push_back({node, cost[best]});
    fvs.push_back(node);
    cur = eliminate(cur, static_cast<Index>(best));
  }
  trace.final_fit = conditioned_chow_liu(stats, fvs);
  if (!trace.steps.empty()) trace.final_fit.divergence = trace.steps.back().divergence;
  return trace;
}

double default_ridge(const SymMatrix& cov) {
  return 1e-8 * cov.dense().trace() / static_cast<double>(cov.dim());
}

SymMatrix add_ridge(const SymMatrix& cov, double eps) {
  MatrixXd m = cov.dense();
  m.diagonal().array() += eps;
  return SymMatrix(m);
}

}  // namespace fvsggm
