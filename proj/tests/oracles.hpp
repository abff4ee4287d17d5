#pragma once

// Independent reference computations for the tests. Everything here is dense
// and slow on purpose and shares no code path with the library kernels.

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using EdgeList = std::vector<std::pair<Index, Index>>;

/// A A^T / n + 0.1 I with A standard normal.
MatrixXd random_pd(Index n, std::uint64_t seed);

/// Random tree-structured PD covariance: random tree, correlations in
/// [-0.9, 0.9] on edges, random scales. Returns the edge list too.
std::pair<MatrixXd, EdgeList> random_tree_covariance(Index n, std::uint64_t seed);

MatrixXd inverse(const MatrixXd& m);
double log_det(const MatrixXd& m);  // via LU, requires det > 0
double kl(const MatrixXd& p, const MatrixXd& q);
double kl(const VectorXd& mp, const MatrixXd& p, const VectorXd& mq, const MatrixXd& q);

/// Calls visit(edges) for every labeled spanning tree on m nodes.
void for_each_spanning_tree(Index m, const std::function<void(const EdgeList&)>& visit);

/// Information matrix of the ML model whose graph is F complete and fully
/// joined to T, plus the tree `edges` on T (indices into `t`). Built from
/// clique and separator marginal inverses of `cov`.
MatrixXd junction_tree_information(const MatrixXd& cov, const std::vector<Index>& f,
                                   const std::vector<Index>& t, const EdgeList& edges);

/// min over all spanning trees of T of D(cov || model with that tree).
double brute_force_divergence(const MatrixXd& cov, const std::vector<Index>& f);

/// Chow-Liu by Prim's algorithm on |rho|.
EdgeList chow_liu_edges(const MatrixXd& cov);

/// Dense tree projection via path products of correlations.
MatrixXd tree_projected(const MatrixXd& cov, const EdgeList& edges);

/// One naive round of alternating projections on a latent-first dense J
/// (k latent nodes then m observed). Applies the J_F = I normalization.
MatrixXd naive_latent_step(const MatrixXd& j, Index k, const MatrixXd& sigma_t_hat);

/// D(sigma_t_hat || observed marginal of dense latent-first J).
double naive_latent_objective(const MatrixXd& j, Index k, const MatrixXd& sigma_t_hat);

}  // namespace oracle
