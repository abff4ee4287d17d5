#include <doctest.h>

#include <algorithm>
#include <limits>
#include <random>

#include "fvsggm/error.hpp"
#include "fvsggm/experiments.hpp"
#include "fvsggm/observed.hpp"
#include "oracles.hpp"

using namespace fvsggm;

namespace {

EmpiricalStats stats_of(const MatrixXd& cov) { return stats_from_covariance(SymMatrix(cov)); }

MatrixXd covariance_of(const FvsModel& m) { return oracle::inverse(m.assemble()); }

std::vector<Index> random_subset(Index n, Index k, std::mt19937_64& rng) {
  std::vector<Index> ids(n);
  for (Index i = 0; i < n; ++i) ids[i] = i;
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(k);
  return ids;
}

}  // namespace

TEST_CASE("conditioned_chow_liu reaches the brute-force minimum") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const MatrixXd cov = oracle::random_pd(8, seed + 1000);
    const std::vector<Index> f{static_cast<Index>(seed), 7};
    const ObservedFit fit = conditioned_chow_liu(stats_of(cov), f);
    CHECK(std::abs(fit.divergence - oracle::brute_force_divergence(cov, f)) < 1e-9);
    CHECK(std::abs(fvs_cost(stats_of(cov), f) - fit.divergence) < 1e-10);
  }
}

TEST_CASE("conditioned_chow_liu with an empty FVS is plain Chow-Liu") {
  const MatrixXd cov = oracle::random_pd(7, 3);
  const ObservedFit fit = conditioned_chow_liu(stats_of(cov), {});
  const ChowLiuResult cl = chow_liu(SymMatrix(cov));
  CHECK((fit.sigma_ml.dense() - cl.cov_cl.dense()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fit.j_ml.k() == 0);
}

TEST_CASE("sigma_ml matches the empirical moments on the model support") {
  const MatrixXd cov = oracle::random_pd(9, 17);
  const ObservedFit fit = conditioned_chow_liu(stats_of(cov), {2, 5});
  for (Index f : fit.part.fvs())
    for (Index j = 0; j < 9; ++j) CHECK(std::abs(fit.sigma_ml(f, j) - cov(f, j)) < 1e-12);
  for (Index i = 0; i < 9; ++i) CHECK(fit.sigma_ml(i, i) == cov(i, i));
  for (const Edge& e : fit.global_tree_edges()) CHECK(fit.sigma_ml(e.u, e.v) == cov(e.u, e.v));
}

TEST_CASE("ml_information_matrix on two nodes") {
  MatrixXd cov(2, 2);
  cov << 1.0, 0.5, 0.5, 1.0;
  const ObservedFit fit = conditioned_chow_liu(stats_of(cov), {0});
  MatrixXd expect(2, 2);
  expect << 1.0, -0.5, -0.5, 1.0;
  expect *= 4.0 / 3.0;
  CHECK((fit.j_ml.assemble() - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ml_information_matrix inverts sigma_ml") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const MatrixXd cov = oracle::random_pd(20, seed + 55);
    const ObservedFit fit = conditioned_chow_liu(stats_of(cov), {1, 8, 13});
    const MatrixXd prod = fit.j_ml.assemble() * fit.sigma_ml.dense();
    CHECK((prod - MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK_NOTHROW(fit.j_ml.validate());
  }
}

TEST_CASE("fvs_cost is monotone under FVS inclusion") {
  std::mt19937_64 rng(4);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const EmpiricalStats st = stats_of(oracle::random_pd(10, seed + 70));
    const auto big = random_subset(10, 4, rng);
    const std::vector<Index> small(big.begin(), big.begin() + 2);
    CHECK(fvs_cost(st, big) <= fvs_cost(st, small) + 1e-12);
    CHECK(fvs_cost(st, small) >= 0.0);
  }
}

TEST_CASE("fvs_cost agrees with the brute-force oracle") {
  const MatrixXd cov = oracle::random_pd(8, 2024);
  CHECK(std::abs(fvs_cost(stats_of(cov), {6, 3}) - oracle::brute_force_divergence(cov, {6, 3})) < 1e-9);
}

TEST_CASE("exact search recovers a realizable FVS") {
  // Nodes 1 and 2 couple to everything; a chain runs over the rest.
  const Index n = 10;
  MatrixXd j = MatrixXd::Zero(n, n);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.2, 0.5);
  const std::vector<Index> chain{0, 3, 4, 5, 6, 7, 8, 9};
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) j(chain[i], chain[i + 1]) = j(chain[i + 1], chain[i]) = -u(rng);
  for (Index f : {1, 2})
    for (Index i = 0; i < n; ++i)
      if (i != f) j(f, i) = j(i, f) = u(rng);
  j(1, 2) = j(2, 1) = 0.3;
  j.diagonal().array() = 4.0;
  const ObservedFit fit = learn_exact_fvs(stats_of(oracle::inverse(j)), 2);
  std::vector<Index> got = fit.part.fvs();
  std::sort(got.begin(), got.end());
  CHECK(got == std::vector<Index>{1, 2});
  CHECK(fit.divergence <= 1e-8);
}

TEST_CASE("exact search beats random subsets") {
  const EmpiricalStats st = stats_of(oracle::random_pd(12, 99));
  const ObservedFit best = learn_exact_fvs(st, 2);
  std::mt19937_64 rng(12);
  for (int r = 0; r < 50; ++r) CHECK(best.divergence <= fvs_cost(st, random_subset(12, 2, rng)) + 1e-12);
}

TEST_CASE("exact search honors the enumeration cap") {
  const EmpiricalStats st = stats_of(oracle::random_pd(12, 1));
  try {
    learn_exact_fvs(st, 3, 100);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Resource);
  }
  CHECK_THROWS_AS(learn_exact_fvs(st, 11), Error);
}

TEST_CASE("greedy trace is non-increasing and ends in the stated fit") {
  const EmpiricalStats st = stats_of(oracle::random_pd(15, 5));
  const GreedyTrace g = learn_greedy_fvs(st, 5);
  REQUIRE(g.steps.size() == 5);
  for (std::size_t s = 1; s < g.steps.size(); ++s) CHECK(g.steps[s].divergence <= g.steps[s - 1].divergence + 1e-12);
  CHECK(g.final_fit.divergence == doctest::Approx(g.steps.back().divergence).epsilon(1e-10));
  std::vector<Index> order;
  for (const auto& s : g.steps) order.push_back(s.node);
  CHECK(g.final_fit.part.fvs() == order);
}

TEST_CASE("greedy with k = 1 equals exact search") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const EmpiricalStats st = stats_of(oracle::random_pd(9, seed + 300));
    const GreedyTrace g = learn_greedy_fvs(st, 1);
    const ObservedFit e = learn_exact_fvs(st, 1);
    CHECK(g.steps[0].node == e.part.fvs()[0]);
    CHECK(g.steps[0].divergence == e.divergence);
  }
}

TEST_CASE("greedy recovers the FVS of a generated model from its covariance") {
  const FvsModel truth = random_fvs_model(20, 3, 7);
  const GreedyTrace g = learn_greedy_fvs(stats_of(covariance_of(truth)), 3);
  std::vector<Index> got = g.final_fit.part.fvs();
  std::sort(got.begin(), got.end());
  CHECK(got == truth.part.fvs());
  CHECK(g.final_fit.global_tree_edges() == global_tree_edges(truth));
  CHECK(g.final_fit.divergence < 1e-10);
}

TEST_CASE("ridge helpers") {
  const SymMatrix c(MatrixXd(MatrixXd::Identity(3, 3) * 2.0));
  CHECK(default_ridge(c) == doctest::Approx(2e-8));
  CHECK(add_ridge(c, 0.5)(1, 1) == 2.5);
  CHECK(add_ridge(c, 0.5)(0, 1) == 0.0);
}

TEST_CASE("greedy d-values strictly decrease on a coupled model") {
  const FvsModel truth = random_fvs_model(20, 3, 21);
  const GreedyTrace g = learn_greedy_fvs(stats_of(covariance_of(truth)), 3);
  double prev = fvs_cost(stats_of(covariance_of(truth)), {});
  for (const auto& s : g.steps) {
    CHECK(s.divergence < prev);
    prev = s.divergence;
  }
}
