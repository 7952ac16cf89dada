#pragma once

#include <memory>
#include <vector>

#include "apperf/marginal.hpp"
#include "apperf/metric_expr.hpp"
#include "apperf/types.hpp"

namespace apperf::admm {

// Number of dense eigendecompositions performed so far in this process.
long eigendecomposition_count();

// Diagonalization of the X-update equation  A X Bt + X = Ft  where A is the
// all-ones matrix, Bt = (n B B' + C B' + B C')(C C' + I)^-1 and
// Ft = -F (C C' + I)^-1.
struct SylvesterCache {
  int n = 0;
  Matrix b, c;
  Matrix cbar;      // (C C' + I)^-1
  Matrix u;         // Householder reflector, u = u' = u^-1, u e1 = 1/sqrt(n)
  Vector s;         // eigenvalues of A in the basis u: (n, 0, ..., 0)
  Matrix v, v_inv;  // Bt = v diag(t) v_inv
  Vector t;
};

SylvesterCache build_sylvester_cache(const Matrix& b, const Matrix& c);
Matrix sylvester_rhs(const SylvesterCache& cache, const Matrix& f);
Matrix solve_sylvester(const SylvesterCache& cache, const Matrix& f);
// ||A X Bt + X - Ft||_F for the rhs produced by sylvester_rhs(f).
double sylvester_residual(const SylvesterCache& cache, const Matrix& x,
                          const Matrix& f);

// Potential-free constants for one (metric, n). E = e0 - psi 1'.
struct Constants {
  int n = 0;
  Matrix b, c, d, e0;
  double offset = 0.0;
  Vector kappa;
  SylvesterCache sylvester;
};

std::shared_ptr<const Constants> build_constants(const CompiledMetric& cm);

// Per-column active-set sizes of a previous projection, used to warm-start the
// next one. Only a starting guess; results do not depend on it.
struct ProjectionHint {
  std::vector<int> clamped, middle;
};

struct Workspace {
  std::shared_ptr<const Constants> constants;
  Vector psi;
  Matrix omega;  // psi 1'
  Matrix e;
  double rho = 1.0;
  double relaxation = 1.0;
  Matrix q, z, x, u, w;
  ProjectionHint q_hint, z_hint;

  int n() const { return constants->n; }
};

Workspace assemble(const CompiledMetric& cm, const Vector& psi,
                   double rho = 1.0);
Workspace assemble(std::shared_ptr<const Constants> constants,
                   const Vector& psi, double rho = 1.0);

// A X B + X C + D for A = 1 1'.
Matrix linear_map(const Constants& k, const Matrix& x);

// max(0, max_k sum of the k largest entries of column k).
double sum_k_largest_objective(const Matrix& x);

// f(A Q B + Q C + D) + <Q, E> + c.
double objective(const Workspace& ws, const Matrix& q);

struct ProjectionOptions {
  int max_iters = 20;
  ProjectionHint* hint = nullptr;  // read and updated when set
};

MarginalMatrix project_delta(const Matrix& a, ProjectionOptions opts = {});
Matrix prox_f(const Matrix& x, double rho, ProjectionHint* hint = nullptr);

struct Result {
  MarginalMatrix q;
  double objective = 0.0;
  int iterations = 0;
  double residual_z = 0.0;
  double residual_x = 0.0;
  bool converged = false;
};

// tol <= 0 runs exactly max_iters iterations.
Result solve(Workspace& ws, int max_iters = 100, double tol = 0.0);

}  // namespace apperf::admm
