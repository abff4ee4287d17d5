#include "fvsggm/latent.hpp"

#include <cmath>
#include <random>
#include <string>

#include "fvsggm/error.hpp"

namespace fvsggm {

namespace {

std::vector<Edge> observed_edges(const FvsModel& model) { return model.j_t.tree.sorted_edges(); }

double trace_tree_product(const TreeMatrix& j, const MatrixXd& s) {
  double tr = 0.0;
  for (Index i = 0; i < j.size(); ++i) tr += j.diag(i) * s(i, i);
  const auto& es = j.tree.edges();
  for (std::size_t e = 0; e < es.size(); ++e) tr += 2.0 * j.edge[e] * s(es[e].u, es[e].v);
  return tr;
}

}  // namespace

Partition latent_partition(Index k, Index m) {
  std::vector<Index> fvs(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) fvs[i] = i;
  return Partition(k + m, std::move(fvs));
}

double latent_objective(const SymMatrix& sigma_t_hat, const FvsModel& model) {
  return latent_objective(sigma_t_hat, sigma_t_hat.log_det(), model);
}

double latent_objective(const SymMatrix& sigma_t_hat, double log_det_sigma_t_hat,
                        const FvsModel& model) {
  const Index m = sigma_t_hat.dim();
  const Index k = model.k();
  if (model.part.m() != m) throw_input("latent_objective: model has wrong number of observed nodes");
  const MatrixXd& s = sigma_t_hat.dense();
  // Marginal information on T: J_T - J_M J_F^{-1} J_M^T.
  double tr = trace_tree_product(model.j_t, s);
  double ld_marginal = fvs_log_det(model);
  if (k > 0) {
    Eigen::LLT<MatrixXd> llt(model.j_f);
    if (llt.info() != Eigen::Success) throw_numerical("latent_objective: J_F is not PD");
    const MatrixXd sjm = s * model.j_m;  // O(k m^2)
    tr -= (llt.solve(model.j_m.transpose() * sjm)).trace();
    ld_marginal -= 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  const double kl = 0.5 * (tr - static_cast<double>(m) - ld_marginal - log_det_sigma_t_hat);
  return std::max(kl, 0.0);
}

SymMatrix project_p1(const FvsModel& model, const SymMatrix& sigma_t_hat) {
  const Index k = model.k(), m = model.part.m();
  if (sigma_t_hat.dim() != m) throw_input("project_p1: observed covariance size mismatch");
  const MatrixXd& s = sigma_t_hat.dense();
  MatrixXd full(k + m, k + m);
  full.bottomRightCorner(m, m) = s;
  if (k > 0) {
    Eigen::LLT<MatrixXd> llt(model.j_f);
    if (llt.info() != Eigen::Success) throw_numerical("project_p1: J_F is singular");
    const MatrixXd y = llt.solve(model.j_m.transpose()).transpose();  // J_M J_F^{-1}
    const MatrixXd s_m = -s * y;
    const MatrixXd s_f = llt.solve(MatrixXd::Identity(k, k)) - y.transpose() * s_m;
    full.topLeftCorner(k, k) = 0.5 * (s_f + s_f.transpose());
    full.bottomLeftCorner(m, k) = s_m;
    full.topRightCorner(k, m) = s_m.transpose();
  }
  // Latent-first ordering is the identity permutation of latent_partition.
  const auto& f = model.part.fvs();
  const auto& t = model.part.tree_nodes();
  MatrixXd ordered(k + m, k + m);
  std::vector<Index> order(f);
  order.insert(order.end(), t.begin(), t.end());
  for (Index a = 0; a < k + m; ++a)
    for (Index b = 0; b < k + m; ++b) ordered(order[a], order[b]) = full(a, b);
  return SymMatrix(ordered);
}

P2Result project_p2(const SymMatrix& sigma_full, const Partition& part) {
  if (sigma_full.dim() != part.n()) throw_input("project_p2: partition size mismatch");
  P2Result r;
  r.fit = conditioned_chow_liu(stats_from_covariance(sigma_full), part.fvs());
  r.model = r.fit.j_ml;
  return r;
}

FvsModel normalize_latent_gauge(const FvsModel& model) {
  if (model.k() == 0) return model;
  Eigen::LLT<MatrixXd> llt(model.j_f);
  if (llt.info() != Eigen::Success) throw_numerical("normalize_latent_gauge: J_F is not PD");
  FvsModel out = model;
  // J_M L^{-T} = (L^{-1} J_M^T)^T
  out.j_m = llt.matrixL().solve(model.j_m.transpose()).transpose();
  out.j_f = MatrixXd::Identity(model.k(), model.k());
  return out;
}

FvsModel default_init(const SymMatrix& sigma_t_hat, Index k, std::uint64_t seed) {
  if (k < 1) throw_input("default_init: latent size must be at least 1");
  const Index m = sigma_t_hat.dim();
  const ChowLiuResult cl = chow_liu(sigma_t_hat);
  FvsModel model;
  model.part = latent_partition(k, m);
  model.j_t = tree_information_matrix(cl.cov_cl, cl.tree);
  model.j_f = MatrixXd::Identity(k, k);
  model.h = VectorXd::Zero(k + m);

  const double sigma = 0.1 * std::sqrt(model.j_t.diag.minCoeff()) / std::sqrt(static_cast<double>(k));
  if (!(sigma > 0.0)) throw_numerical("default_init: tree information matrix has nonpositive diagonal");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-sigma, sigma);
  model.j_m.resize(m, k);
  for (Index i = 0; i < m; ++i)
    for (Index a = 0; a < k; ++a) model.j_m(i, a) = unif(rng);

  for (int attempt = 0; attempt <= 50; ++attempt) {
    try {
      model.validate();
      return model;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Numerical) throw;
    }
    model.j_m *= 0.5;
  }
  throw_numerical("default_init: could not make the initial model PD after 50 halvings");
}

LatentTrace latent_chow_liu(const SymMatrix& sigma_t_hat, Index k,
                            const std::optional<FvsModel>& init, const LatentOptions& options) {
  if (k < 1) throw_input("latent_chow_liu: latent size must be at least 1");
  if (options.max_iters < 1) throw_input("latent_chow_liu: max_iters must be at least 1");
  const Index m = sigma_t_hat.dim();
  if (!sigma_t_hat.is_pd()) throw_numerical("latent_chow_liu: observed covariance is not PD");
  const double ld = sigma_t_hat.log_det();
  const Partition part = latent_partition(k, m);

  FvsModel model;
  if (init) {
    if (init->k() != k || init->part.m() != m) throw_input("latent_chow_liu: initial model has wrong shape");
    model = *init;
    model.validate();
  } else {
    model = default_init(sigma_t_hat, k, options.seed);
  }
  if (options.normalize_gauge) model = normalize_latent_gauge(model);

  LatentTrace trace;
  double obj = latent_objective(sigma_t_hat, ld, model);
  trace.states.push_back({0, obj, observed_edges(model)});
  Index iter = 0;
  for (iter = 1; iter <= options.max_iters; ++iter) {
    try {
      const SymMatrix full = project_p1(model, sigma_t_hat);
      P2Result p2 = project_p2(full, part);
      model = options.normalize_gauge ? normalize_latent_gauge(p2.model) : std::move(p2.model);
      model.validate();
    } catch (const Error& e) {
      throw Error(e.kind(), "latent_chow_liu iteration " + std::to_string(iter) + ": " + e.what());
    }
    const double next = latent_objective(sigma_t_hat, ld, model);
    trace.states.push_back({iter, next, observed_edges(model)});
    const double decrease = obj - next;
    obj = next;
    if (decrease < options.tol) {
      trace.converged = true;
      trace.stop = StopReason::Tolerance;
      break;
    }
  }
  trace.final.model = std::move(model);
  trace.final.iteration = trace.states.back().iteration;
  trace.final.objective = obj;
  return trace;
}

}  // namespace fvsggm
