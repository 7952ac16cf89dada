#include "apperf/lp.hpp"

#include "apperf/admm.hpp"
#include "apperf/error.hpp"

namespace apperf::lp {

BilinearForm::BilinearForm(const CompiledMetric& cm) : n_(cm.n) {
  const int n = n_;
  Matrix m = cm.effective_inter();
  slope_ = cm.slope.bottomRightCorner(n, n);
  g_.resize(n, n);
  h_.resize(n);
  c_lin_.resize(n);
  c0_ = m(0, 0);
  for (int k = 1; k <= n; ++k) {
    h_(k - 1) = m(k, 0) - m(0, 0);
    c_lin_(k - 1) = m(0, k) - m(0, 0);
    for (int l = 1; l <= n; ++l)
      g_(k - 1, l - 1) = m(k, l) - m(0, l) - m(k, 0) + m(0, 0);
  }
}

namespace {

Vector column_rates(const Matrix& q) {
  Vector s = q.colwise().sum().transpose();
  for (int c = 0; c < s.size(); ++c) s(c) /= (c + 1);
  return s;
}

}  // namespace

Matrix BilinearForm::z(const Matrix& q) const {
  Vector s = column_rates(q);
  Vector w = h_ + g_ * s;
  for (int c = 0; c < n_; ++c) w(c) /= (c + 1);
  Matrix out = q * slope_.transpose();
  out.rowwise() += w.transpose();
  return out;
}

double BilinearForm::c(const Matrix& q) const {
  return c0_ + c_lin_.dot(column_rates(q));
}

double BilinearForm::value(const Matrix& q, const Matrix& p) const {
  return (z(q).array() * p.array()).sum() + c(q);
}

double inner_max(const BilinearForm& form, const Matrix& q, const Vector& psi) {
  return admm::sum_k_largest_objective(form.z(q)) + form.c(q) -
         psi.dot(q.rowwise().sum());
}

GameLp build_lp(const CompiledMetric& cm, const Vector& psi,
                const std::vector<ConstraintLinearForm>& constraints) {
  const int n = cm.n;
  if (psi.size() != n) throw SolverError("potential vector length mismatch");
  if (constraints.size() != cm.constraints.size())
    throw SolverError("metric constraints need compiled linear forms");
  BilinearForm form(cm);
  GameLp out;
  LpLayout& L = out.layout;
  L.n = n;
  L.num_constraints = static_cast<int>(constraints.size());
  const int nv = L.num_vars();
  const int nrows = n * n + 1 + n * n;

  LpProblem& lp = out.problem;
  lp.objective = Vector::Zero(nv);
  lp.lower = Vector::Zero(nv);
  lp.rows = Matrix::Zero(nrows, nv);
  lp.rhs = Vector::Zero(nrows);
  lp.senses.assign(nrows, Sense::kLessEqual);

  // Objective: v + c(Q) - <Q, psi 1'> + sum_j beta_j (mu_j - tau_j).
  lp.objective(L.v()) = 1.0;
  lp.objective_offset = form.c_constant();
  for (int c = 0; c < n; ++c) {
    const int k = c + 1;
    for (int i = 0; i < n; ++i)
      lp.objective(L.q(i, c)) = form.c_linear()(c) - k * psi(i);
  }
  for (int j = 0; j < L.num_constraints; ++j)
    lp.objective(L.beta(j)) = constraints[j].mu - constraints[j].tau;

  // Q in Delta, on the scaled variables.
  for (int c = 0; c < n; ++c) {
    const double inv_k = 1.0 / (c + 1);
    for (int i = 0; i < n; ++i) {
      const int r = c * n + i;
      for (int j = 0; j < n; ++j) lp.rows(r, L.q(j, c)) -= inv_k;
      lp.rows(r, L.q(i, c)) += 1.0;
    }
  }
  for (int c = 0; c < n; ++c)
    for (int i = 0; i < n; ++i) lp.rows(n * n, L.q(i, c)) = 1.0;
  lp.rhs(n * n) = 1.0;

  // v >= k Z(Q)(i,k) - alpha(i,k) + (1/k) sum_j alpha(j,k)
  //      + sum_j beta_j k B_j(i,k).
  for (int c = 0; c < n; ++c) {
    const int k = c + 1;
    const double inv_k = 1.0 / k;
    for (int i = 0; i < n; ++i) {
      const int r = L.epigraph_row(i, c);
      for (int lc = 0; lc < n; ++lc) {
        const double gv = form.g()(c, lc);
        for (int j = 0; j < n; ++j) lp.rows(r, L.q(j, lc)) = gv;
        lp.rows(r, L.q(i, lc)) += k * (lc + 1) * form.slope()(c, lc);
      }
      for (int j = 0; j < n; ++j) lp.rows(r, L.alpha(j, c)) = inv_k;
      lp.rows(r, L.alpha(i, c)) -= 1.0;
      for (int j = 0; j < L.num_constraints; ++j)
        lp.rows(r, L.beta(j)) = k * constraints[j].b(i, c);
      lp.rows(r, L.v()) = -1.0;
      lp.rhs(r) = -form.h()(c);
    }
  }
  return out;
}

GameSolution game_value_and_q(const CompiledMetric& cm, const Vector& psi,
                              std::span<const int> y,
                              const SimplexOptions& opts) {
  std::vector<ConstraintLinearForm> forms;
  if (cm.has_constraints()) {
    if (static_cast<int>(y.size()) != cm.n)
      throw SolverError("constrained metrics need the batch labels");
    forms = compile_constraints(cm, y);
  }
  GameLp glp = build_lp(cm, psi, forms);
  LpSolution sol = simplex_solve(glp.problem, opts);
  // An unbounded minimization here means no predictor meets the constraints.
  if (sol.status == LpStatus::kUnbounded && !forms.empty())
    throw SolverError("metric constraints are infeasible for this batch");
  if (sol.status != LpStatus::kOptimal)
    throw SolverError(std::string("game LP ") + status_name(sol.status));

  const int n = cm.n;
  const LpLayout& L = glp.layout;
  Matrix q(n, n), p(n, n);
  for (int c = 0; c < n; ++c) {
    const int k = c + 1;
    for (int i = 0; i < n; ++i) {
      q(i, c) = k * std::max(sol.x(L.q(i, c)), 0.0);
      p(i, c) = k * std::max(-sol.duals(L.epigraph_row(i, c)), 0.0);
    }
  }
  GameSolution out;
  out.q = MarginalMatrix(std::move(q));
  out.p_witness = MarginalMatrix(std::move(p));
  out.objective = sol.objective;
  out.pivots = sol.pivots;
  return out;
}

}  // namespace apperf::lp
