#include <doctest.h>

#include <random>
#include <sstream>

#include "apperf/lp.hpp"
#include "apperf/oracles.hpp"
#include "test_util.hpp"

using namespace apperf;
using apperf::testing::load;
using apperf::testing::normal_vector;

namespace {

Eigen::RowVectorXd row(std::initializer_list<double> v) {
  Eigen::RowVectorXd r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) r(i++) = x;
  return r;
}

}  // namespace

TEST_SUITE("lp") {

TEST_CASE("one variable bounded below") {
  lp::LpProblem p = lp::make_problem(1);
  p.objective(0) = 1.0;
  p.add_row(row({1.0}), lp::Sense::kGreaterEqual, 3.0);
  lp::LpSolution s = lp::simplex_solve(p);
  REQUIRE(s.status == lp::LpStatus::kOptimal);
  CHECK(s.objective == doctest::Approx(3.0));
}

TEST_CASE("two-variable vertex optimum") {
  // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18: optimum (2, 6) = 36.
  lp::LpProblem p = lp::make_problem(2);
  p.objective << -3.0, -5.0;
  p.add_row(row({1, 0}), lp::Sense::kLessEqual, 4);
  p.add_row(row({0, 2}), lp::Sense::kLessEqual, 12);
  p.add_row(row({3, 2}), lp::Sense::kLessEqual, 18);
  lp::LpSolution s = lp::simplex_solve(p);
  REQUIRE(s.status == lp::LpStatus::kOptimal);
  CHECK(s.objective == doctest::Approx(-36.0));
  CHECK(s.x(0) == doctest::Approx(2.0));
  CHECK(s.x(1) == doctest::Approx(6.0));
  // Duals of the binding rows: 0, -1.5, -1.
  CHECK(s.duals(1) == doctest::Approx(-1.5));
  CHECK(s.duals(2) == doctest::Approx(-1.0));
}

TEST_CASE("free variables and equalities") {
  // min x + y  s.t. x - y = -2, y <= 1, x free: x = -1, y = 1.
  lp::LpProblem p = lp::make_problem(2);
  p.objective << 1.0, 1.0;
  p.lower(0) = -std::numeric_limits<double>::infinity();
  p.add_row(row({1, -1}), lp::Sense::kEqual, -2);
  p.add_row(row({0, 1}), lp::Sense::kLessEqual, 1);
  p.add_row(row({1, 1}), lp::Sense::kGreaterEqual, -5);
  lp::LpSolution s = lp::simplex_solve(p);
  REQUIRE(s.status == lp::LpStatus::kOptimal);
  CHECK(s.objective == doctest::Approx(-2.0));
  CHECK(s.x(0) - s.x(1) == doctest::Approx(-2.0));
}

TEST_CASE("infeasible and unbounded verdicts") {
  lp::LpProblem inf = lp::make_problem(1);
  inf.objective(0) = 1.0;
  inf.add_row(row({1}), lp::Sense::kGreaterEqual, 3);
  inf.add_row(row({1}), lp::Sense::kLessEqual, 1);
  CHECK(lp::simplex_solve(inf).status == lp::LpStatus::kInfeasible);
  lp::LpProblem unb = lp::make_problem(2);
  unb.objective << -1.0, 0.0;
  unb.add_row(row({1, -1}), lp::Sense::kLessEqual, 1);
  CHECK(lp::simplex_solve(unb).status == lp::LpStatus::kUnbounded);
}

TEST_CASE("degenerate cycling example terminates") {
  // Beale's example cycles under textbook Dantzig pricing.
  lp::LpProblem p = lp::make_problem(4);
  p.objective << -0.75, 150, -0.02, 6;
  p.add_row(row({0.25, -60, -0.04, 9}), lp::Sense::kLessEqual, 0);
  p.add_row(row({0.5, -90, -0.02, 3}), lp::Sense::kLessEqual, 0);
  p.add_row(row({0, 0, 1, 0}), lp::Sense::kLessEqual, 1);
  lp::SimplexOptions opts;
  opts.bland_after = 1;
  lp::LpSolution s = lp::simplex_solve(p, opts);
  REQUIRE(s.status == lp::LpStatus::kOptimal);
  CHECK(s.objective == doctest::Approx(-0.05));
}

TEST_CASE("pivot cap is reported") {
  lp::LpProblem p = lp::make_problem(2);
  p.objective << -1.0, -1.0;
  p.add_row(row({1, 2}), lp::Sense::kLessEqual, 4);
  p.add_row(row({3, 1}), lp::Sense::kLessEqual, 6);
  lp::SimplexOptions opts;
  opts.max_pivots = 1;
  CHECK(lp::simplex_solve(p, opts).status == lp::LpStatus::kPivotLimit);
}

TEST_CASE("near-degenerate kappa game terminates") {
  // Cycled with a 1e-9 pivot tolerance.
  Vector psi(12);
  psi << -0.20826771930303523, -0.57121452443975107, -0.77008669259096652,
      -0.8027463279942767, 0.3752360384988857, -1.1811935497412216,
      -0.092896675367071316, -0.83878908420876419, -0.39801672010277361,
      0.17434032492581311, 0.69866178327433048, 0.99592287873339191;
  lp::GameLp g = lp::build_lp(compile(load("kappa"), 12), psi);
  lp::SimplexOptions opts;
  opts.max_pivots = 20000;
  lp::LpSolution s = lp::simplex_solve(g.problem, opts);
  CHECK(s.status == lp::LpStatus::kOptimal);
}

TEST_CASE("f1 game LP at n = 2") {
  CompiledMetric cm = compile(load("f1"), 2);
  lp::GameLp g = lp::build_lp(cm, Vector::Zero(2));
  CHECK(g.problem.num_vars() == 9);
  lp::LpSolution s = lp::simplex_solve(g.problem);
  CHECK(s.status == lp::LpStatus::kOptimal);
  CHECK(std::isfinite(s.objective));
}

TEST_CASE("constant metric is worth 1") {
  CompiledMetric cm = compile(parse_metric("one { define: 1 }"), 3);
  CHECK(lp::game_value_and_q(cm, Vector::Zero(3)).objective == doctest::Approx(1.0));
}

TEST_CASE("constraint adds a beta block") {
  CompiledMetric cm = compile(load("precision_at_recall"), 3);
  Labels y = {1, 0, 1};
  lp::GameLp g = lp::build_lp(cm, Vector::Zero(3), compile_constraints(cm, y));
  CHECK(g.layout.num_constraints == 1);
  CHECK(g.problem.num_vars() == 2 * 9 + 1 + 1);
  CHECK_THROWS_AS(lp::game_value_and_q(cm, Vector::Zero(3)), SolverError);
}

TEST_CASE("bilinear form equals the expectation") {
  std::mt19937_64 rng(1);
  for (const auto& name : apperf::testing::unconstrained_metrics()) {
    CompiledMetric cm = compile(load(name), 5);
    lp::BilinearForm form(cm);
    for (int t = 0; t < 10; ++t) {
      MarginalMatrix p = random_marginal(5, rng()), q = random_marginal(5, rng());
      CHECK(std::abs(form.value(q.values(), p.values()) - expected_metric(cm, p, q)) <= 1e-10);
    }
  }
}

TEST_CASE("bilinear form derivative in P") {
  CompiledMetric cm = compile(load("kappa"), 4);
  lp::BilinearForm form(cm);
  Matrix q = random_marginal(4, 2).values();
  Matrix p = random_marginal(4, 3).values();
  Matrix z = form.z(q);
  const double h = 1e-6;
  for (int i = 0; i < 4; ++i)
    for (int c = 0; c < 4; ++c) {
      Matrix a = p, b = p;
      a(i, c) += h;
      b(i, c) -= h;
      double fd = (form.value(q, a) - form.value(q, b)) / (2 * h);
      CHECK(fd == doctest::Approx(z(i, c)).epsilon(1e-6));
    }
}

TEST_CASE("game value matches the brute-force game") {
  std::mt19937_64 rng(2);
  for (const auto& name : apperf::testing::unconstrained_metrics()) {
    MetricExpr m = load(name);
    for (int n = 1; n <= 4; ++n) {
      CompiledMetric cm = compile(m, n);
      Vector psi = normal_vector(n, rng);
      lp::GameSolution g = lp::game_value_and_q(cm, psi);
      oracle::GameResult b = oracle::brute_force_game(m, psi);
      INFO(name << " n=" << n);
      CHECK(std::abs(g.objective - b.value) <= 1e-6);
      CHECK(delta_violation(g.q.values()) <= 1e-9);
      lp::BilinearForm form(cm);
      CHECK(std::abs(lp::inner_max(form, g.q.values(), psi) - g.objective) <= 1e-7);
    }
  }
}

TEST_CASE("matching pennies at n = 1") {
  lp::GameSolution g = lp::game_value_and_q(compile(load("accuracy"), 1), Vector::Zero(1));
  CHECK(g.objective == doctest::Approx(0.5));
  CHECK(g.q(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("large positive potentials push Q to all ones") {
  const int n = 4;
  lp::GameSolution g = lp::game_value_and_q(compile(load("accuracy"), n),
                                            Vector::Constant(n, 50.0));
  Vector marg = g.q.row_sums();
  for (int i = 0; i < n; ++i) CHECK(marg(i) == doctest::Approx(1.0));
}

TEST_CASE("LP optimum is a lower envelope") {
  std::mt19937_64 rng(3);
  for (const char* name : {"f2", "mcc", "informedness"}) {
    CompiledMetric cm = compile(load(name), 5);
    Vector psi = normal_vector(5, rng);
    lp::BilinearForm form(cm);
    double best = lp::game_value_and_q(cm, psi).objective;
    for (int t = 0; t < 30; ++t)
      CHECK(best <= lp::inner_max(form, random_marginal(5, rng()).values(), psi) + 1e-8);
  }
}

TEST_CASE("constrained witness satisfies the constraint") {
  std::mt19937_64 rng(4);
  MetricExpr m = load("precision_at_recall");
  for (int n : {3, 5, 7}) {
    CompiledMetric cm = compile(m, n);
    CompiledMetric free_cm = compile(load("precision"), n);
    Labels y = apperf::testing::random_labels(n, rng);
    y[0] = 1;
    Vector psi = normal_vector(n, rng);
    lp::GameSolution g = lp::game_value_and_q(cm, psi, y);
    auto forms = compile_constraints(cm, y);
    CHECK(delta_violation(g.p_witness.values()) <= 1e-8);
    CHECK(expected_metric_vs_labels(forms[0], g.p_witness) >= forms[0].tau - 1e-6);
    CHECK(lp::game_value_and_q(free_cm, psi).objective >= g.objective - 1e-8);
  }
}

TEST_CASE("dump format") {
  CompiledMetric cm = compile(load("accuracy"), 1);
  lp::GameLp g = lp::build_lp(cm, Vector::Zero(1));
  std::ostringstream os;
  g.problem.dump(os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "vars 3 rows 3");
  std::getline(is, line);
  CHECK(line.rfind("obj ", 0) == 0);
  std::getline(is, line);
  CHECK(line == "lower 0 0 0");
  int rows = 0;
  while (std::getline(is, line)) rows += line.rfind("row ", 0) == 0;
  CHECK(rows == 3);
}

}  // TEST_SUITE
