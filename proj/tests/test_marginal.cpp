#include <doctest.h>

#include <bit>
#include <random>

#include "apperf/marginal.hpp"
#include "apperf/oracles.hpp"
#include "test_util.hpp"

using namespace apperf;
using apperf::testing::load;

TEST_SUITE("marginal") {

TEST_CASE("membership in Delta") {
  CHECK(is_in_delta(MarginalMatrix::zero(4), 1e-10));
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 0) = 2.0;
  CHECK_FALSE(is_in_delta(MarginalMatrix(bad), 1e-10));
  Matrix coupling = Matrix::Zero(2, 2);
  coupling(0, 1) = 0.5;  // k = 2 column needs both entries equal
  CHECK_FALSE(is_in_delta(MarginalMatrix(coupling), 1e-10));
  Matrix neg = Matrix::Zero(2, 2);
  neg(1, 0) = -0.1;
  CHECK_FALSE(is_in_delta(MarginalMatrix(neg), 1e-10));
}

TEST_CASE("marginalized distributions lie in Delta") {
  std::mt19937_64 rng(3);
  for (int n = 1; n <= 7; ++n)
    for (int t = 0; t < 10; ++t) {
      auto p = oracle::FullDistribution::random(n, rng, t % 3 == 0 ? 0.6 : 0.0);
      CHECK(delta_violation(p.marginal().values()) <= 1e-12);
    }
}

TEST_CASE("derived stats of point masses") {
  DerivedStats a = derived_stats(oracle::FullDistribution::point_mass(Labels{1, 0}).marginal());
  CHECK(a.r(0) == doctest::Approx(1.0));
  CHECK(a.r(1) == doctest::Approx(0.0));
  CHECK(a.prob_empty == doctest::Approx(0.0));
  CHECK(a.prob_full == doctest::Approx(0.0));
  DerivedStats b = derived_stats(oracle::FullDistribution::point_mass(Labels{1, 1}).marginal());
  CHECK(b.r(0) == doctest::Approx(0.0));
  CHECK(b.r(1) == doctest::Approx(1.0));
  CHECK(b.prob_full == doctest::Approx(1.0));
  DerivedStats c = derived_stats(MarginalMatrix::zero(3));
  CHECK(c.prob_empty == 1.0);
}

TEST_CASE("r equals the enumerated count distribution") {
  std::mt19937_64 rng(8);
  const int n = 4;
  auto p = oracle::FullDistribution::random(n, rng);
  DerivedStats s = derived_stats(p.marginal());
  Vector want = Vector::Zero(n + 1);
  for (std::uint32_t idx = 0; idx < (1u << n); ++idx)
    want(std::popcount(idx)) += p.weights[idx];
  for (int k = 1; k <= n; ++k) CHECK(std::abs(s.r(k - 1) - want(k)) <= 1e-12);
  CHECK(std::abs(s.prob_empty - want(0)) <= 1e-12);
  CHECK(s.p0_cols.minCoeff() >= -1e-10);
}

TEST_CASE("point masses collapse the expectation") {
  for (const auto& name : apperf::testing::unconstrained_metrics()) {
    MetricExpr m = load(name);
    const int n = 3;
    CompiledMetric cm = compile(m, n);
    for (std::uint32_t a = 0; a < 8; ++a)
      for (std::uint32_t b = 0; b < 8; ++b) {
        Labels yhat = oracle::labels_of(a, n), y = oracle::labels_of(b, n);
        double got = expected_metric(cm, oracle::FullDistribution::point_mass(yhat).marginal(),
                                     oracle::FullDistribution::point_mass(y).marginal());
        CHECK(got == doctest::Approx(evaluate_discrete(m, yhat, y)).epsilon(1e-12));
      }
  }
}

TEST_CASE("accuracy at n = 1") {
  CompiledMetric cm = compile(load("accuracy"), 1);
  for (double p : {0.0, 0.3, 1.0})
    for (double q : {0.0, 0.6, 1.0}) {
      MarginalMatrix pm(Matrix::Constant(1, 1, p)), qm(Matrix::Constant(1, 1, q));
      CHECK(expected_metric(cm, pm, qm) ==
            doctest::Approx(p * q + (1 - p) * (1 - q)));
    }
}

TEST_CASE("expectation matches enumeration") {
  std::mt19937_64 rng(21);
  for (const auto& name : apperf::testing::unconstrained_metrics()) {
    MetricExpr m = load(name);
    for (int n = 1; n <= 5; ++n) {
      CompiledMetric cm = compile(m, n);
      for (int t = 0; t < 10; ++t) {
        auto p = oracle::FullDistribution::random(n, rng, t % 2 ? 0.5 : 0.0);
        auto q = oracle::FullDistribution::random(n, rng);
        double got = expected_metric(cm, p.marginal(), q.marginal());
        INFO(name << " n=" << n);
        CHECK(std::abs(got - oracle::brute_force_expected_metric(m, p, q)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("expectation is affine in P") {
  std::mt19937_64 rng(4);
  CompiledMetric cm = compile(load("kappa"), 5);
  MarginalMatrix q = random_marginal(5, 99);
  Matrix a = random_marginal(5, 1).values(), b = random_marginal(5, 2).values();
  double fa = expected_metric(cm, MarginalMatrix(a), q);
  double fb = expected_metric(cm, MarginalMatrix(b), q);
  for (double t : {0.25, 0.5, 0.9}) {
    double ft = expected_metric(cm, MarginalMatrix((1 - t) * a + t * b), q);
    CHECK(ft == doctest::Approx((1 - t) * fa + t * fb).epsilon(1e-12));
  }
}

TEST_CASE("expectation against labels") {
  MetricExpr m = parse_metric("c { define: tp/all constraint: 1 >= 0.5 "
                              "constraint: tp / ap >= 0.8 cs_special_case_positive(2) }");
  const int n = 3;
  CompiledMetric cm = compile(m, n);
  Labels y = {1, 0, 1};
  auto forms = compile_constraints(cm, y);
  CHECK(expected_metric_vs_labels(forms[0], random_marginal(n, 5)) == doctest::Approx(1.0));
  for (std::uint32_t a = 0; a < 8; ++a) {
    Labels yhat = oracle::labels_of(a, n);
    CHECK(expected_metric_vs_labels(forms[1], oracle::FullDistribution::point_mass(yhat).marginal()) ==
          doctest::Approx(evaluate_constraint(cm.constraints[1], yhat, y)));
  }
  auto u = oracle::FullDistribution::uniform(n);
  CHECK(std::abs(expected_metric_vs_labels(forms[1], u.marginal()) -
                 oracle::brute_force_constraint_expectation(cm.constraints[1], u, y)) <= 1e-9);
}

TEST_CASE("random marginals") {
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    CHECK(is_in_delta(random_marginal(3, seed), 1e-12));
  CHECK(random_marginal(4, 7).values() == random_marginal(4, 7).values());
  MarginalMatrix one = random_marginal(1, 3);
  CHECK(one(0, 0) >= 0.0);
  CHECK(one(0, 0) <= 1.0);
}

TEST_CASE("size mismatch is rejected") {
  CompiledMetric cm = compile(load("f1"), 3);
  CHECK_THROWS(expected_metric(cm, MarginalMatrix::zero(2), MarginalMatrix::zero(3)));
}

}  // TEST_SUITE
