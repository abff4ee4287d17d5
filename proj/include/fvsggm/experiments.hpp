#pragma once

// Synthetic generators and experiment drivers: fractional Brownian motion
// covariances, random FVS-structured models, K-L versus FVS-size sweeps and
// greedy structure-recovery studies.

#include <cstdint>
#include <string>
#include <vector>

#include "fvsggm/fvs_model.hpp"
#include "fvsggm/latent.hpp"

namespace fvsggm {

/// fBM covariance on the grid t_i = i / n, i = 1..n.
SymMatrix fbm_covariance(Index n, double hurst);

enum class DiagonalLoading {
  MinEigenvalue,  // c = |lambda_min(J)| + 0.5
  RowSum,         // c = max_i sum_j |J_ij| + 0.5, no eigensolve
};

/// Random FVS of size k, uniform random spanning tree on the rest (Pruefer
/// code), U[-1, 1] entries on tree edges and on every pair touching F, then
/// c * I added to make J PD.
FvsModel random_fvs_model(Index n, Index k, std::uint64_t seed,
                          DiagonalLoading loading = DiagonalLoading::MinEigenvalue);

/// Labeled tree on m nodes from a Pruefer sequence of length m - 2.
SpanningTree pruefer_decode(Index m, const std::vector<Index>& code);

struct SweepRow {
  Index n = 0;
  Index k = 0;
  double kl = 0.0;
  double kl_ratio_vs_tree = 0.0;
  Index iterations = 0;
  double wall_seconds = 0.0;
  std::uint64_t best_seed = 0;
  std::vector<double> seed_objectives;  // one per seed, in seed order
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::uint64_t> seeds;
  double hurst = 0.0;  // 0 when the input is not an fBM covariance
  std::string algorithm = "latent_chow_liu";
  std::string grid = "t_i=i/n";
};

/// For each k: k = 0 is the Chow-Liu tree; k >= 1 runs the latent learner once
/// per seed and keeps the lowest final objective.
SweepResult kl_vs_k_sweep(const SymMatrix& sigma_t, const std::vector<Index>& k_values, Index iters,
                          const std::vector<std::uint64_t>& seeds, double tol = 1e-9);

struct RecoveryRun {
  std::uint64_t seed = 0;
  bool fvs_match = false;
  bool tree_match = false;
  std::vector<Index> true_fvs;
  std::vector<Index> learned_fvs;  // selection order
  std::vector<double> d_trace;     // d(F_t), t = 1..k
  bool success() const { return fvs_match && tree_match; }
};

struct RecoveryReport {
  Index runs = 0;
  Index successes = 0;
  std::vector<RecoveryRun> per_run;
};

/// Run r uses model seed `seed + r`.
RecoveryReport greedy_recovery_study(Index runs, Index n, Index k, Index samples_per_run,
                                     std::uint64_t seed);

/// Original-id tree edges of an FVS model, sorted.
std::vector<Edge> global_tree_edges(const FvsModel& model);

}  // namespace fvsggm
