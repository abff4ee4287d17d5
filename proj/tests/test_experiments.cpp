#include <doctest.h>

#include <cmath>
#include <set>

#include "fvsggm/error.hpp"
#include "fvsggm/experiments.hpp"
#include "oracles.hpp"

using namespace fvsggm;

TEST_CASE("fbm_covariance with H = 1/2 is Brownian motion") {
  const SymMatrix s = fbm_covariance(20, 0.5);
  for (Index i = 0; i < 20; ++i)
    for (Index j = 0; j < 20; ++j) CHECK(std::abs(s(i, j) - std::min(i + 1, j + 1) / 20.0) < 1e-12);
}

TEST_CASE("fbm_covariance for n = 64, H = 0.2") {
  const SymMatrix s = fbm_covariance(64, 0.2);
  CHECK(s.min_eigenvalue() > 0.0);
  const double t1 = 1.0 / 64.0, tn = 1.0, h2 = 0.4;
  const double direct = 0.5 * (std::pow(t1, h2) + std::pow(tn, h2) - std::pow(tn - t1, h2));
  CHECK(s(0, 63) == doctest::Approx(direct).epsilon(1e-14));
  CHECK(s(63, 63) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(fbm_covariance(64, 1.0), Error);
  CHECK_THROWS_AS(fbm_covariance(1, 0.3), Error);
}

TEST_CASE("pruefer_decode") {
  const SpanningTree t = pruefer_decode(5, {3, 3, 3});
  CHECK(t.sorted_edges() == std::vector<Edge>{{0, 3}, {1, 3}, {2, 3}, {3, 4}});
  CHECK(pruefer_decode(2, {}).edges().size() == 1);
  std::set<std::vector<Edge>> seen;
  for (Index a = 0; a < 4; ++a)
    for (Index b = 0; b < 4; ++b) seen.insert(pruefer_decode(4, {a, b}).sorted_edges());
  CHECK(seen.size() == 16);
}

TEST_CASE("random_fvs_model structure and determinism") {
  const FvsModel tree = random_fvs_model(3, 0, 1);
  const MatrixXd j = tree.assemble();
  int pairs = 0;
  for (Index a = 0; a < 3; ++a)
    for (Index b = a + 1; b < 3; ++b) pairs += j(a, b) != 0.0;
  CHECK(pairs == 2);

  const FvsModel a = random_fvs_model(20, 3, 7), b = random_fvs_model(20, 3, 7);
  CHECK(a.assemble() == b.assemble());
  CHECK(a.part.fvs() == b.part.fvs());
  CHECK(a.assemble() != random_fvs_model(20, 3, 8).assemble());
  CHECK(a.j_t.diag.minCoeff() > 0.0);
  CHECK_THROWS_AS(random_fvs_model(4, 3, 0), Error);
}

TEST_CASE("random_fvs_model is always PD") {
  int pd = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const FvsModel m = random_fvs_model(20, 3, seed);
    pd += m.assemble().llt().info() == Eigen::Success ? 1 : 0;
  }
  CHECK(pd == 1000);
  const FvsModel rows = random_fvs_model(40, 4, 3, DiagonalLoading::RowSum);
  CHECK_NOTHROW(rows.validate());
}

TEST_CASE("random_fvs_model marginals match the dense inverse") {
  const FvsModel m = random_fvs_model(25, 3, 19);
  const Marginals mg = fvs_marginals(m);
  CHECK((mg.variance - oracle::inverse(m.assemble()).diagonal()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("kl_vs_k_sweep rows") {
  const SweepResult r = kl_vs_k_sweep(fbm_covariance(16, 0.3), {0, 1, 2}, 5, {0, 1});
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].kl_ratio_vs_tree == 1.0);
  for (const SweepRow& row : r.rows) {
    CHECK(std::isfinite(row.kl_ratio_vs_tree));
    CHECK(row.kl_ratio_vs_tree >= 0.0);
    CHECK(row.seed_objectives.size() == 2);
  }
  CHECK(r.rows[1].kl <= r.rows[0].kl);
  CHECK_THROWS_AS(kl_vs_k_sweep(fbm_covariance(16, 0.3), {}, 5, {0}), Error);
}

TEST_CASE("greedy recovery is consistent at large sample size") {
  const RecoveryReport r = greedy_recovery_study(5, 20, 3, 1000000, 0);
  CHECK(r.successes == 5);
}

TEST_CASE("recovery without feedback nodes reduces to Chow-Liu") {
  const RecoveryReport r = greedy_recovery_study(3, 10, 0, 200000, 11);
  CHECK(r.successes == 3);
  for (const auto& run : r.per_run) CHECK(run.learned_fvs.empty());
}
