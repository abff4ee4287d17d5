#include "fvsggm/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "fvsggm/error.hpp"
#include "fvsggm/parallel.hpp"

namespace fvsggm {

SymMatrix fbm_covariance(Index n, double hurst) {
  if (n < 2) throw_input("fbm_covariance: need at least 2 time samples");
  if (!(hurst > 0.0 && hurst < 1.0)) throw_input("fbm_covariance: Hurst parameter must lie in (0, 1)");
  SymMatrix s(n);
  const double two_h = 2.0 * hurst;
  for (Index i = 0; i < n; ++i) {
    const double ti = static_cast<double>(i + 1) / static_cast<double>(n);
    for (Index j = i; j < n; ++j) {
      const double tj = static_cast<double>(j + 1) / static_cast<double>(n);
      s.set(i, j, 0.5 * (std::pow(ti, two_h) + std::pow(tj, two_h) - std::pow(std::abs(ti - tj), two_h)));
    }
  }
  return s;
}

SpanningTree pruefer_decode(Index m, const std::vector<Index>& code) {
  if (m <= 1) return SpanningTree(std::max<Index>(m, 0), {});
  if (static_cast<Index>(code.size()) != m - 2) throw_input("pruefer_decode: code must have length m-2");
  std::vector<Index> degree(static_cast<std::size_t>(m), 1);
  for (Index c : code) {
    if (c < 0 || c >= m) throw_input("pruefer_decode: label out of range");
    ++degree[c];
  }
  std::set<Index> leaves;
  for (Index i = 0; i < m; ++i)
    if (degree[i] == 1) leaves.insert(i);
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(m - 1));
  for (Index c : code) {
    const Index leaf = *leaves.begin();
    leaves.erase(leaves.begin());
    edges.push_back({std::min(leaf, c), std::max(leaf, c)});
    if (--degree[c] == 1) leaves.insert(c);
  }
  const Index a = *leaves.begin();
  const Index b = *std::next(leaves.begin());
  edges.push_back({a, b});
  return SpanningTree(m, std::move(edges));
}

FvsModel random_fvs_model(Index n, Index k, std::uint64_t seed, DiagonalLoading loading) {
  if (k < 0 || n < k + 2) throw_input("random_fvs_model: need n >= k + 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  std::vector<Index> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(ids[i], ids[pick(rng)]);
  }
  std::vector<Index> fvs(ids.begin(), ids.begin() + k);
  std::sort(fvs.begin(), fvs.end());

  FvsModel model;
  model.part = Partition(n, fvs);
  const Index m = model.part.m();
  std::vector<Index> code(static_cast<std::size_t>(std::max<Index>(m - 2, 0)));
  std::uniform_int_distribution<Index> label(0, m - 1);
  for (Index& c : code) c = label(rng);
  SpanningTree tree = pruefer_decode(m, code);

  model.j_t.tree = std::move(tree);
  model.j_t.diag = VectorXd::Zero(m);
  model.j_t.edge.resize(model.j_t.tree.edges().size());
  for (double& e : model.j_t.edge) e = unif(rng);
  model.j_f = MatrixXd::Zero(k, k);
  for (Index a = 0; a < k; ++a)
    for (Index b = a + 1; b < k; ++b) {
      model.j_f(a, b) = unif(rng);
      model.j_f(b, a) = model.j_f(a, b);
    }
  model.j_m.resize(m, k);
  for (Index i = 0; i < m; ++i)
    for (Index a = 0; a < k; ++a) model.j_m(i, a) = unif(rng);
  model.h = VectorXd::Zero(n);

  double c;
  if (loading == DiagonalLoading::MinEigenvalue) {
    c = std::abs(SymMatrix(model.assemble()).min_eigenvalue()) + 0.5;
  } else {
    const MatrixXd j = model.assemble();
    c = j.cwiseAbs().rowwise().sum().maxCoeff() + 0.5;
  }
  model.j_t.diag.array() += c;
  model.j_f.diagonal().array() += c;
  return model;
}

std::vector<Edge> global_tree_edges(const FvsModel& model) {
  const auto& t = model.part.tree_nodes();
  std::vector<Edge> out;
  for (const Edge& e : model.j_t.tree.edges()) {
    out.push_back({std::min(t[e.u], t[e.v]), std::max(t[e.u], t[e.v])});
  }
  std::sort(out.begin(), out.end());
  return out;
}

SweepResult kl_vs_k_sweep(const SymMatrix& sigma_t, const std::vector<Index>& k_values, Index iters,
                          const std::vector<std::uint64_t>& seeds, double tol) {
  if (k_values.empty()) throw_input("kl_vs_k_sweep: empty list of FVS sizes");
  if (seeds.empty()) throw_input("kl_vs_k_sweep: need at least one seed");
  if (!sigma_t.is_pd()) throw_numerical("kl_vs_k_sweep: covariance is not PD");
  using clock = std::chrono::steady_clock;
  SweepResult res;
  res.seeds = seeds;
  const Index n = sigma_t.dim();
  const auto t0 = clock::now();
  const ChowLiuResult cl = chow_liu(sigma_t);
  const double kl_tree =
      kl_gaussian(GaussianDensity::zero_mean(sigma_t), GaussianDensity::zero_mean(cl.cov_cl));
  const double tree_seconds = std::chrono::duration<double>(clock::now() - t0).count();

  for (Index k : k_values) {
    SweepRow row;
    row.n = n;
    row.k = k;
    if (k == 0) {
      row.kl = kl_tree;
      row.kl_ratio_vs_tree = 1.0;
      row.wall_seconds = tree_seconds;
      row.seed_objectives.assign(seeds.size(), kl_tree);
      row.best_seed = seeds.front();
      res.rows.push_back(std::move(row));
      continue;
    }
    if (k < 0) throw_input("kl_vs_k_sweep: FVS sizes must be nonnegative");
    const auto start = clock::now();
    std::vector<LatentTrace> traces(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t s) {
      LatentOptions opt;
      opt.max_iters = iters;
      opt.tol = tol;
      opt.seed = seeds[s];
      traces[s] = latent_chow_liu(sigma_t, k, std::nullopt, opt);
    });
    std::size_t best = 0;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      row.seed_objectives.push_back(traces[s].final.objective);
      if (traces[s].final.objective < traces[best].final.objective) best = s;
    }
    row.kl = traces[best].final.objective;
    row.kl_ratio_vs_tree = kl_tree > 0.0 ? row.kl / kl_tree : 0.0;
    row.iterations = traces[best].final.iteration;
    row.best_seed = seeds[best];
    row.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    res.rows.push_back(std::move(row));
  }
  return res;
}

RecoveryReport greedy_recovery_study(Index runs, Index n, Index k, Index samples_per_run,
                                     std::uint64_t seed) {
  if (runs < 1 || n < 2 || k < 0 || samples_per_run < 2) {
    throw_input("greedy_recovery_study: runs, n and samples must be positive (samples >= 2)");
  }
  RecoveryReport rep;
  rep.runs = runs;
  rep.per_run.resize(static_cast<std::size_t>(runs));
  parallel_for(static_cast<std::size_t>(runs), [&](std::size_t r) {
    RecoveryRun& run = rep.per_run[r];
    run.seed = seed + r;
    const FvsModel truth = random_fvs_model(n, k, run.seed);
    const MatrixXd j = truth.assemble();
    Eigen::LLT<MatrixXd> llt(j);
    const SymMatrix sigma(MatrixXd(llt.solve(MatrixXd::Identity(n, n))));
    // Decorrelate the sampling stream from the model stream.
    const MatrixXd x = sample_gaussian(GaussianDensity::zero_mean(sigma), samples_per_run,
                                       run.seed ^ 0x9e3779b97f4a7c15ULL);
    const EmpiricalStats stats = empirical_stats(x);
    const GreedyTrace g = learn_greedy_fvs(stats, k);

    run.true_fvs = truth.part.fvs();
    for (const GreedyStep& st : g.steps) {
      run.learned_fvs.push_back(st.node);
      run.d_trace.push_back(st.divergence);
    }
    std::vector<Index> learned_sorted = run.learned_fvs;
    std::sort(learned_sorted.begin(), learned_sorted.end());
    run.fvs_match = learned_sorted == run.true_fvs;
    run.tree_match = run.fvs_match && g.final_fit.global_tree_edges() == global_tree_edges(truth);
  });
  for (const auto& r : rep.per_run) rep.successes += r.success() ? 1 : 0;
  return rep;
}

}  // namespace fvsggm
