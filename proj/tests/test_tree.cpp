#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fvsggm/error.hpp"
#include "fvsggm/experiments.hpp"
#include "fvsggm/tree.hpp"
#include "oracles.hpp"

using namespace fvsggm;

namespace {

SpanningTree from_list(Index m, const oracle::EdgeList& list) {
  std::vector<Edge> edges;
  for (auto [u, v] : list) edges.push_back({u, v});
  return SpanningTree(m, edges);
}

TreeMatrix chain3() {
  TreeMatrix j;
  j.tree = SpanningTree(3, {{0, 1}, {1, 2}});
  j.diag = VectorXd::Constant(3, 2.0);
  j.edge = {-1.0, -1.0};
  return j;
}

oracle::EdgeList as_list(const std::vector<Edge>& edges) {
  oracle::EdgeList out;
  for (const Edge& e : edges) out.emplace_back(e.u, e.v);
  return out;
}

}  // namespace

TEST_CASE("SpanningTree rejects invalid edge sets") {
  CHECK_THROWS_AS(SpanningTree(3, {{0, 0}}), Error);
  CHECK_THROWS_AS(SpanningTree(3, {{0, 1}, {0, 1}}), Error);
  CHECK_THROWS_AS(SpanningTree(3, {{0, 1}, {1, 2}, {0, 2}}), Error);
  CHECK_THROWS_AS(SpanningTree(3, {{0, 3}}), Error);
  const SpanningTree t(4, {{1, 3}, {0, 1}, {1, 2}});
  CHECK(t.is_spanning());
  CHECK(t.degrees() == std::vector<Index>{1, 3, 1, 1});
  CHECK(t.rooted().order.front() == 0);
  CHECK(t.rooted().parent[3] == 1);
  CHECK_FALSE(SpanningTree(4, {{0, 1}}).is_spanning());
}

TEST_CASE("gaussian_mutual_information") {
  CHECK(gaussian_mutual_information(0.0) == 0.0);
  CHECK(gaussian_mutual_information(0.5) == doctest::Approx(-0.5 * std::log(0.75)));
  CHECK(gaussian_mutual_information(-0.5) == gaussian_mutual_information(0.5));
  CHECK(std::isfinite(gaussian_mutual_information(1.0)));
}

TEST_CASE("chow_liu matches Prim's algorithm on random covariances") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const MatrixXd cov = oracle::random_pd(9, seed);
    const ChowLiuResult cl = chow_liu(SymMatrix(cov));
    CHECK(as_list(cl.tree.sorted_edges()) == oracle::chow_liu_edges(cov));
  }
}

TEST_CASE("chow_liu minimizes K-L over all 1296 spanning trees of 6 nodes") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const MatrixXd cov = oracle::random_pd(6, seed + 500);
    const ChowLiuResult cl = chow_liu(SymMatrix(cov));
    double best = std::numeric_limits<double>::infinity();
    int count = 0;
    oracle::for_each_spanning_tree(6, [&](const oracle::EdgeList& e) {
      best = std::min(best, oracle::kl(cov, oracle::tree_projected(cov, e)));
      ++count;
    });
    CHECK(count == 1296);
    CHECK(oracle::kl(cov, cl.cov_cl.dense()) == doctest::Approx(best).epsilon(1e-10));
  }
}

TEST_CASE("tree_projection copies tree moments and fills path products") {
  const MatrixXd cov = oracle::random_pd(5, 3);
  const SpanningTree t(5, {{0, 1}, {1, 2}, {2, 3}, {2, 4}});
  const SymMatrix p = tree_projection(SymMatrix(cov), t);
  for (Index i = 0; i < 5; ++i) CHECK(p(i, i) == cov(i, i));
  for (const Edge& e : t.edges()) CHECK(p(e.u, e.v) == cov(e.u, e.v));
  CHECK((p.dense() - oracle::tree_projected(cov, as_list(t.edges()))).cwiseAbs().maxCoeff() < 1e-14);
  // A tree-consistent covariance is a fixed point.
  const SymMatrix again = tree_projection(p, t);
  CHECK((again.dense() - p.dense()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("tree_information_matrix on two nodes") {
  MatrixXd cov(2, 2);
  cov << 1.0, 0.5, 0.5, 1.0;
  const TreeMatrix j = tree_information_matrix(SymMatrix(cov), SpanningTree(2, {{0, 1}}));
  MatrixXd expect(2, 2);
  expect << 1.0, -0.5, -0.5, 1.0;
  expect /= 0.75;
  CHECK((j.dense() - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("tree_information_matrix equals the dense inverse of tree models") {
  for (Index n : {1, 2, 10, 37, 100}) {
    const auto [cov, edges] = oracle::random_tree_covariance(n, static_cast<std::uint64_t>(n));
    const TreeMatrix j = tree_information_matrix(SymMatrix(cov), from_list(n, edges));
    const MatrixXd dense_inv = oracle::inverse(cov);
    CHECK((j.dense() - dense_inv).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, dense_inv.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("tree_information_matrix rejects degenerate edges") {
  MatrixXd cov(2, 2);
  cov << 1.0, 1.0, 1.0, 1.0;
  CHECK_THROWS_AS(tree_information_matrix(SymMatrix(cov), SpanningTree(2, {{0, 1}})), Error);
}

TEST_CASE("tree_bp on a 3-node chain") {
  const TreeMatrix j = chain3();
  const TreeBpResult bp = tree_bp(j, MatrixXd::Zero(3, 0));
  CHECK(bp.node_variance(0) == doctest::Approx(0.75));
  CHECK(bp.node_variance(1) == doctest::Approx(1.0));
  CHECK(bp.node_variance(2) == doctest::Approx(0.75));
  CHECK(bp.edge_covariance[0] == doctest::Approx(0.5));
  CHECK(tree_log_det_inv(bp, j.tree) == doctest::Approx(-std::log(4.0)).epsilon(1e-14));
}

TEST_CASE("tree_bp matches dense solves on random tree models") {
  std::mt19937_64 rng(5);
  for (Index n : {2, 5, 40, 100}) {
    const FvsModel m = random_fvs_model(n, 0, static_cast<std::uint64_t>(n) + 3);
    const MatrixXd dense = m.j_t.dense();
    MatrixXd rhs = MatrixXd::Random(n, 3);
    const TreeBpResult bp = tree_bp(m.j_t, rhs);
    const MatrixXd inv = oracle::inverse(dense);
    CHECK((bp.solves - inv * rhs).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((bp.node_variance - inv.diagonal()).cwiseAbs().maxCoeff() < 1e-10);
    for (std::size_t e = 0; e < m.j_t.tree.edges().size(); ++e) {
      const Edge ed = m.j_t.tree.edges()[e];
      CHECK(bp.edge_covariance[e] == doctest::Approx(inv(ed.u, ed.v)).epsilon(1e-9));
    }
    const double chol = 2.0 * MatrixXd(dense.llt().matrixL()).diagonal().array().log().sum();
    CHECK(tree_log_det_inv(bp, m.j_t.tree) == doctest::Approx(-chol).epsilon(1e-9));
  }
}

TEST_CASE("tree_bp handles forests and rejects indefinite matrices") {
  TreeMatrix f;
  f.tree = SpanningTree(3, {{1, 2}});
  f.diag = VectorXd::Constant(3, 2.0);
  f.edge = {1.0};
  const TreeBpResult bp = tree_bp(f, MatrixXd::Zero(3, 0));
  CHECK(bp.node_variance(0) == doctest::Approx(0.5));
  CHECK(bp.node_variance(1) == doctest::Approx(2.0 / 3.0));

  TreeMatrix bad = chain3();
  bad.edge = {-3.0, -3.0};
  CHECK_THROWS_AS(tree_bp(bad, MatrixXd::Zero(3, 0)), Error);
}

TEST_CASE("TreeMatrix multiply agrees with the dense form") {
  const FvsModel m = random_fvs_model(12, 0, 77);
  const VectorXd x = VectorXd::LinSpaced(12, -2.0, 3.0);
  CHECK((m.j_t.multiply(x) - m.j_t.dense() * x).cwiseAbs().maxCoeff() < 1e-12);
}
