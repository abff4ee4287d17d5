#pragma once

// Latent-FVS learning by alternating projections: P1 matches the observed
// marginal while keeping q(x_F | x_T), P2 is a conditioned Chow-Liu fit on all
// nodes. Latent models put the k hidden nodes first (ids 0..k-1) and observed
// variable i at node id k + i.

#include <cstdint>
#include <optional>
#include <vector>

#include "fvsggm/fvs_model.hpp"
#include "fvsggm/observed.hpp"

namespace fvsggm {

struct LatentIterate {
  Index iteration = 0;
  double objective = 0.0;
  std::vector<Edge> tree_edges;  // over observed variables, sorted
};

enum class StopReason { MaxIterations, Tolerance };

struct LatentState {
  FvsModel model;
  Index iteration = 0;
  double objective = 0.0;
};

/// states[0] is the initial model; states[t] follows the t-th P1/P2 round.
struct LatentTrace {
  std::vector<LatentIterate> states;
  bool converged = false;
  StopReason stop = StopReason::MaxIterations;
  LatentState final;
};

struct LatentOptions {
  Index max_iters = 40;
  double tol = 1e-9;
  /// Re-express each iterate with J_F = I (only J_M J_F^{-1} J_M^T is identifiable).
  bool normalize_gauge = true;
  std::uint64_t seed = 0;  // used when no initial model is supplied
};

/// F = {0..k-1}, T = {k..k+m-1}.
Partition latent_partition(Index k, Index m);

/// D(N(0, sigma_t_hat) || marginal of the model on T).
double latent_objective(const SymMatrix& sigma_t_hat, const FvsModel& model);
/// Same, with ln det sigma_t_hat supplied by the caller.
double latent_objective(const SymMatrix& sigma_t_hat, double log_det_sigma_t_hat,
                        const FvsModel& model);

/// Covariance of p_hat(x_T) q(x_F | x_T) over all k + m nodes, latent first.
SymMatrix project_p1(const FvsModel& model, const SymMatrix& sigma_t_hat);

struct P2Result {
  FvsModel model;
  ObservedFit fit;
};

/// Best Q_F fit of a full covariance: conditioned Chow-Liu plus sparse J recovery.
P2Result project_p2(const SymMatrix& sigma_full, const Partition& part);

/// Equivalent model with J_F = I and J_M <- J_M L^{-T}, where J_F = L L^T.
FvsModel normalize_latent_gauge(const FvsModel& model);

/// Chow-Liu tree on the observed block, J_F = I, small random J_M repaired to PD.
FvsModel default_init(const SymMatrix& sigma_t_hat, Index k, std::uint64_t seed);

LatentTrace latent_chow_liu(const SymMatrix& sigma_t_hat, Index k,
                            const std::optional<FvsModel>& init = std::nullopt,
                            const LatentOptions& options = {});

}  // namespace fvsggm
