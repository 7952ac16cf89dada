#include <doctest.h>

#include <algorithm>
#include <random>
#include <thread>

#include "apperf/ap_loss.hpp"
#include "apperf/lp.hpp"
#include "apperf/oracles.hpp"
#include "test_util.hpp"

using namespace apperf;
using apperf::testing::load;
using apperf::testing::normal_vector;
using apperf::testing::random_labels;

namespace {

ApConfig lp_config() {
  ApConfig cfg;
  cfg.solver = SolverPath::kLp;
  return cfg;
}

}  // namespace

TEST_SUITE("ap_loss") {

TEST_CASE("gradient entries are bounded") {
  std::mt19937_64 rng(1);
  for (const auto& name : apperf::testing::unconstrained_metrics()) {
    ApObjective obj(load(name));
    for (int n : {3, 8}) {
      LossResult r = obj(normal_vector(n, rng, 2.0), random_labels(n, rng));
      CHECK(r.grad.minCoeff() >= -1.0 - 1e-8);
      CHECK(r.grad.maxCoeff() <= 1.0 + 1e-8);
      CHECK(r.stats.path == SolverPath::kAdmm);
    }
  }
}

TEST_CASE("value is the negated game value minus y . psi") {
  std::mt19937_64 rng(2);
  CompiledMetric cm = compile(load("f1"), 4);
  Vector psi = normal_vector(4, rng);
  Labels y = {1, 0, 1, 1};
  LossResult r = ap_objective(psi, y, cm, lp_config());
  double game = lp::game_value_and_q(cm, psi).objective;
  CHECK(r.game_value == doctest::Approx(game));
  CHECK(r.value == doctest::Approx(-game - (psi(0) + psi(2) + psi(3))));
  for (int i = 0; i < 4; ++i) CHECK(r.grad(i) == doctest::Approx(r.q_marginals(i) - y[i]));
}

TEST_CASE("gradient matches finite differences of the LP value") {
  std::mt19937_64 rng(3);
  for (const auto& name : apperf::testing::unconstrained_metrics()) {
    CompiledMetric cm = compile(load(name), 4);
    Vector psi = normal_vector(4, rng);
    Labels y = random_labels(4, rng);
    auto value = [&](const Vector& p) { return ap_objective(p, y, cm, lp_config()).value; };
    Vector fd = oracle::finite_diff_grad(value, psi, 1e-6);
    Vector g = ap_objective(psi, y, cm, lp_config()).grad;
    INFO(name);
    CHECK((fd - g).lpNorm<Eigen::Infinity>() <= 1e-4 * std::max(1.0, g.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("large potentials with all-positive labels give a zero gradient") {
  CompiledMetric cm = compile(load("accuracy"), 4);
  Labels y(4, 1);
  LossResult r = ap_objective(Vector::Constant(4, 50.0), y, cm, lp_config());
  CHECK(r.grad.cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("game value is concave along lines") {
  std::mt19937_64 rng(4);
  CompiledMetric cm = compile(load("mcc"), 4);
  for (int t = 0; t < 10; ++t) {
    Vector a = normal_vector(4, rng), b = normal_vector(4, rng);
    auto g = [&](const Vector& p) { return lp::game_value_and_q(cm, p).objective; };
    CHECK(g(0.5 * (a + b)) >= 0.5 * (g(a) + g(b)) - 1e-9);
  }
}

TEST_CASE("ADMM and LP gradients agree") {
  std::mt19937_64 rng(5);
  ApConfig admm_cfg;
  admm_cfg.admm_iters = 2000;
  admm_cfg.admm_tol = 1e-8;
  for (const char* name : {"f2", "accuracy", "gpr"}) {
    CompiledMetric cm = compile(load(name), 5);
    Vector psi = normal_vector(5, rng);
    Labels y = random_labels(5, rng);
    Vector ga = ap_objective(psi, y, cm, admm_cfg).grad;
    Vector gl = ap_objective(psi, y, cm, lp_config()).grad;
    INFO(name);
    CHECK((ga - gl).lpNorm<Eigen::Infinity>() <= 1e-2);
  }
}

TEST_CASE("permuting the batch permutes the gradient") {
  std::mt19937_64 rng(6);
  CompiledMetric cm = compile(load("kappa"), 5);
  Vector psi = normal_vector(5, rng);
  Labels y = random_labels(5, rng);
  std::vector<int> perm = {3, 0, 4, 1, 2};
  Vector ppsi(5);
  Labels py(5);
  for (int i = 0; i < 5; ++i) {
    ppsi(i) = psi(perm[i]);
    py[i] = y[perm[i]];
  }
  LossResult a = ap_objective(psi, y, cm, lp_config());
  LossResult b = ap_objective(ppsi, py, cm, lp_config());
  CHECK(a.value == doctest::Approx(b.value));
  for (int i = 0; i < 5; ++i) CHECK(b.grad(i) == doctest::Approx(a.grad(perm[i])).epsilon(1e-6));
}

TEST_CASE("constrained metrics route to the LP") {
  ApObjective obj(load("precision_at_recall"));
  std::mt19937_64 rng(7);
  Labels y = {1, 0, 1, 0};
  LossResult r = obj(normal_vector(4, rng), y);
  CHECK(r.stats.path == SolverPath::kLp);
  CHECK_THROWS_AS(obj(normal_vector(16, rng), Labels(16, 1)), ConfigError);
  ApConfig forced;
  forced.solver = SolverPath::kAdmm;
  ApObjective bad(load("precision_at_recall"), forced);
  CHECK_THROWS_AS(bad(normal_vector(4, rng), y), ConfigError);
}

TEST_CASE("inputs are validated") {
  ApObjective obj(load("f1"));
  CHECK_THROWS_AS(obj(Vector::Zero(3), Labels{1, 0}), DataError);
  CHECK_THROWS_AS(obj(Vector::Zero(2), Labels{1, 2}), DataError);
  CHECK_THROWS_AS(parse_solver_path("simplex"), ConfigError);
}

TEST_CASE("constants are cached per batch size") {
  ApObjective obj(load("f2"));
  std::mt19937_64 rng(8);
  obj(normal_vector(6, rng), random_labels(6, rng));
  long count = admm::eigendecomposition_count();
  obj(normal_vector(6, rng), random_labels(6, rng));
  CHECK(admm::eigendecomposition_count() == count);
  obj(normal_vector(4, rng), random_labels(4, rng));
  CHECK(obj.cached_sizes() == 2);
}

TEST_CASE("concurrent calls agree with serial ones") {
  ApObjective obj(load("f1"));
  std::mt19937_64 rng(9);
  std::vector<Vector> psis;
  std::vector<Labels> ys;
  for (int t = 0; t < 8; ++t) {
    int n = 3 + t % 3;
    psis.push_back(normal_vector(n, rng));
    ys.push_back(random_labels(n, rng));
  }
  std::vector<double> serial(8), parallel(8);
  for (int t = 0; t < 8; ++t) serial[t] = obj(psis[t], ys[t]).value;
  ApObjective fresh(load("f1"));
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&, t] { parallel[t] = fresh(psis[t], ys[t]).value; });
  for (auto& th : threads) th.join();
  CHECK(serial == parallel);
}

}  // TEST_SUITE
