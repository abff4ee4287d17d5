#pragma once

// Maximum-likelihood learning of FVS models when every node is observed:
// conditioned Chow-Liu for a known FVS, sparse recovery of J_ML, the set
// function d(F), exhaustive FVS search and greedy FVS selection.

#include <cstdint>
#include <vector>

#include "fvsggm/fvs_model.hpp"

namespace fvsggm {

struct ObservedFit {
  Partition part;
  SpanningTree tree;  // over part.tree_nodes() positions
  SymMatrix sigma_cl; // Chow-Liu projection of the conditional covariance
  SymMatrix sigma_ml; // original node order
  FvsModel j_ml;
  double divergence = 0.0;

  /// Tree edges translated to original node ids, sorted.
  std::vector<Edge> global_tree_edges() const;
};

struct GreedyStep {
  Index node = 0;
  double divergence = 0.0;
};

struct GreedyTrace {
  std::vector<GreedyStep> steps;
  ObservedFit final_fit;
};

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

/// Exact ML fit over models with FVS `fvs` (kept in the given order).
ObservedFit conditioned_chow_liu(const EmpiricalStats& stats, const std::vector<Index>& fvs);

/// Sparse J_ML = Sigma_ML^{-1} from a conditioned Chow-Liu fit in O(k^2 n).
FvsModel ml_information_matrix(const ObservedFit& fit);

/// d(F), from entropies and conditional mutual information.
double fvs_cost(const EmpiricalStats& stats, const std::vector<Index>& fvs);

/// Best size-k FVS over all subsets; Resource error when C(n, k) > cap.
ObservedFit learn_exact_fvs(const EmpiricalStats& stats, Index k,
                            std::uint64_t cap = kDefaultEnumerationCap);

/// Greedy FVS selection, one node per step.
GreedyTrace learn_greedy_fvs(const EmpiricalStats& stats, Index k);

/// 1e-8 * trace / n.
double default_ridge(const SymMatrix& cov);
SymMatrix add_ridge(const SymMatrix& cov, double eps);

}  // namespace fvsggm
