#pragma once

#include <span>
#include <vector>

#include "apperf/marginal.hpp"
#include "apperf/metric_expr.hpp"
#include "apperf/simplex.hpp"

namespace apperf::lp {

// O(Q, P) = <Z(Q), P> + c(Q), read off the compiled grids.
//   Z(Q)(i,k) = sum_l slope(k,l) Q(i,l) + kappa_k [h_k + sum_l g(k,l) s_l]
//   c(Q)      = m(0,0) + sum_l (m(0,l) - m(0,0)) s_l
// with m the effective inter grid and s_l = colsum(Q)_l / l.
class BilinearForm {
 public:
  explicit BilinearForm(const CompiledMetric& cm);

  int n() const { return n_; }
  Matrix z(const Matrix& q) const;
  double c(const Matrix& q) const;
  double value(const Matrix& q, const Matrix& p) const;

  const Matrix& slope() const { return slope_; }
  const Matrix& g() const { return g_; }
  const Vector& h() const { return h_; }
  const Vector& c_linear() const { return c_lin_; }
  double c_constant() const { return c0_; }

 private:
  int n_;
  Matrix slope_;  // [k][l], k,l in 1..n
  Matrix g_;
  Vector h_;
  Vector c_lin_;
  double c0_;
};

// Variable layout: qa (n*n, column-major, Q(i,k) = k * qa(i,k)), alpha (n*n),
// beta (one per constraint), v.
struct LpLayout {
  int n = 0;
  int num_constraints = 0;
  int q(int i, int c) const { return c * n + i; }
  int alpha(int i, int c) const { return n * n + c * n + i; }
  int beta(int j) const { return 2 * n * n + j; }
  int v() const { return 2 * n * n + num_constraints; }
  int num_vars() const { return 2 * n * n + num_constraints + 1; }
  // Row of the epigraph constraint for cell (i, c).
  int epigraph_row(int i, int c) const { return n * n + 1 + c * n + i; }
};

struct GameLp {
  LpProblem problem;
  LpLayout layout;
};

GameLp build_lp(const CompiledMetric& cm, const Vector& psi,
                const std::vector<ConstraintLinearForm>& constraints = {});

struct GameSolution {
  MarginalMatrix q;
  double objective = 0.0;
  // Inner-max maximizer recovered from the epigraph-row duals.
  MarginalMatrix p_witness;
  int pivots = 0;
};

GameSolution game_value_and_q(const CompiledMetric& cm, const Vector& psi,
                              std::span<const int> y = {},
                              const SimplexOptions& opts = {});

// max over P in Delta of O(Q,P) - <Q, psi 1'> for a fixed Q.
double inner_max(const BilinearForm& form, const Matrix& q, const Vector& psi);

}  // namespace apperf::lp
