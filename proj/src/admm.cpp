#include "apperf/admm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace apperf::admm {

namespace {

std::atomic<long> g_eigendecompositions{0};

Eigen::SelfAdjointEigenSolver<Matrix> eigensolve(const Matrix& m) {
  g_eigendecompositions.fetch_add(1, std::memory_order_relaxed);
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success)
    throw SolverError("eigendecomposition failed (non-finite metric grid?)");
  return es;
}

Matrix householder_to_ones(int n) {
  Vector v = -Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  v(0) += 1.0;
  double vv = v.squaredNorm();
  Matrix h = Matrix::Identity(n, n);
  if (vv > 1e-30) h -= (2.0 / vv) * v * v.transpose();
  return h;
}

// ---------------------------------------------------------------------------
// Per-column projection onto C_k = {p : 0 <= p_i <= sum(p) / k}, shifted by
// eta / k. Works on the column sorted in descending order.

struct SortedColumn {
  int k = 1;
  std::vector<int> order;   // order[j] = original row of the j-th largest
  std::vector<double> a;    // sorted values
};

struct ColumnSolution {
  double r = 0.0;
  double theta = 0.0;
  int clamped = 0;
  int middle = 0;
  double dr = 0.0;  // d r / d shift on this piece
};

// Tries the candidate with t entries clamped at r and z trailing entries at 0.
// Returns the largest KKT violation and fills s.
double column_candidate(const SortedColumn& col, double shift,
                        const std::vector<double>& prefix, int t, int z,
                        ColumnSolution& s) {
  const int n = static_cast<int>(col.a.size());
  const int k = col.k;
  const int m = n - t - z;
  auto b = [&](int j) { return col.a[j] - shift; };
  double theta, r, dr;
  if (t < k) {
    double st = prefix[t];
    double sm = prefix[t + m] - prefix[t];
    double kt = static_cast<double>(k - t);
    double det = kt * kt + static_cast<double>(t) * m;
    theta = (st * kt - t * sm) / det;
    r = (kt * sm + m * st) / det;
    dr = -static_cast<double>(m) * k / det;
  } else {
    if (m != 0) return std::numeric_limits<double>::infinity();
    r = prefix[t] / k;
    dr = -1.0;
    theta = std::max(0.0, t > 0 ? r - b(t - 1) : 0.0);
  }
  double viol = std::max(0.0, -theta);
  viol = std::max(viol, -r);
  if (t > 0) viol = std::max(viol, r - (b(t - 1) + theta));
  if (m > 0) {
    viol = std::max(viol, -(b(t + m - 1) + theta));
    viol = std::max(viol, b(t) + theta - r);
  }
  if (z > 0) viol = std::max(viol, b(t + m) + theta);
  s = {std::max(r, 0.0), theta, t, m, r > 0.0 ? dr : 0.0};
  return viol;
}

// KKT conditions are sufficient here, so any candidate passing them is the
// projection. The hint (usually the previous structure) is tried first.
ColumnSolution solve_column(const SortedColumn& col, double shift,
                            std::vector<double>& prefix,
                            const ColumnSolution* hint) {
  const int n = static_cast<int>(col.a.size());
  const int k = col.k;
  prefix[0] = 0.0;
  double scale = 1.0;
  for (int j = 0; j < n; ++j) {
    prefix[j + 1] = prefix[j] + (col.a[j] - shift);
    scale = std::max(scale, std::abs(col.a[j] - shift));
  }
  const double eps = 1e-12 * scale;

  ColumnSolution cand;
  if (hint != nullptr) {
    const int t0 = hint->clamped;
    const int z0 = n - hint->clamped - hint->middle;
    for (int dt : {0, -1, 1}) {
      for (int dz : {0, -1, 1}) {
        const int t = t0 + dt, z = z0 + dz;
        if (t < 0 || t > std::min(k, n) || z < 0 || z > n - t) continue;
        if (column_candidate(col, shift, prefix, t, z, cand) <= eps)
          return cand;
      }
    }
  }
  ColumnSolution best;
  double best_violation = std::numeric_limits<double>::infinity();
  for (int t = 0; t <= std::min(k, n); ++t) {
    for (int z = 0; z <= n - t; ++z) {
      double viol = column_candidate(col, shift, prefix, t, z, cand);
      if (viol <= eps) return cand;
      if (viol < best_violation) {
        best_violation = viol;
        best = cand;
      }
    }
  }
  return best;
}

void write_column(const SortedColumn& col, double shift,
                  const ColumnSolution& s, Matrix& out, int c) {
  const int n = static_cast<int>(col.a.size());
  for (int j = 0; j < n; ++j) {
    double v;
    if (j < s.clamped) {
      v = s.r;
    } else if (j < s.clamped + s.middle) {
      v = std::clamp(col.a[j] - shift + s.theta, 0.0, s.r);
    } else {
      v = 0.0;
    }
    out(col.order[j], c) = v;
  }
}

}  // namespace

long eigendecomposition_count() {
  return g_eigendecompositions.load(std::memory_order_relaxed);
}

// ---------------------------------------------------------------------------
// Sylvester

SylvesterCache build_sylvester_cache(const Matrix& b, const Matrix& c) {
  const int n = static_cast<int>(b.rows());
  SylvesterCache sc;
  sc.n = n;
  sc.b = b;
  sc.c = c;
  Matrix bbar = n * b * b.transpose() + c * b.transpose() + b * c.transpose();
  Matrix cc = c * c.transpose() + Matrix::Identity(n, n);
  auto ec = eigensolve(cc);
  const Vector& d = ec.eigenvalues();
  const Matrix& wc = ec.eigenvectors();
  Vector inv_sqrt = d.array().rsqrt();
  Vector sqrt_d = d.array().sqrt();
  sc.cbar = wc * d.cwiseInverse().asDiagonal() * wc.transpose();
  Matrix half = wc * inv_sqrt.asDiagonal() * wc.transpose();     // cbar^{1/2}
  Matrix neg_half = wc * sqrt_d.asDiagonal() * wc.transpose();   // cbar^{-1/2}
  Matrix sym = half * bbar * half;
  sym = 0.5 * (sym + sym.transpose());
  auto es = eigensolve(sym);
  sc.t = es.eigenvalues();
  sc.v = neg_half * es.eigenvectors();
  sc.v_inv = es.eigenvectors().transpose() * half;
  sc.u = householder_to_ones(n);
  sc.s = Vector::Zero(n);
  sc.s(0) = n;
  return sc;
}

Matrix sylvester_rhs(const SylvesterCache& cache, const Matrix& f) {
  return -f * cache.cbar;
}

Matrix solve_sylvester(const SylvesterCache& cache, const Matrix& f) {
  const int n = cache.n;
  Matrix g = cache.u * sylvester_rhs(cache, f) * cache.v;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      double den = cache.s(i) * cache.t(j) + 1.0;
      if (std::abs(den) < 1e-12)
        throw SolverError("singular X-update system: ill-posed metric/rho");
      g(i, j) /= den;
    }
  }
  return cache.u * g * cache.v_inv;
}

double sylvester_residual(const SylvesterCache& cache, const Matrix& x,
                          const Matrix& f) {
  const int n = cache.n;
  Matrix bt = (n * cache.b * cache.b.transpose() +
               cache.c * cache.b.transpose() + cache.b * cache.c.transpose()) *
              cache.cbar;
  Matrix ax = Matrix::Ones(n, n) * x;
  return (ax * bt + x - sylvester_rhs(cache, f)).norm();
}

// ---------------------------------------------------------------------------
// Assembly

std::shared_ptr<const Constants> build_constants(const CompiledMetric& cm) {
  if (cm.has_constraints())
    throw SolverError("metric constraints require the LP solver path");
  const int n = cm.n;
  auto k = std::make_shared<Constants>();
  k->n = n;
  k->kappa.resize(n);
  for (int i = 0; i < n; ++i) k->kappa(i) = 1.0 / (i + 1);
  const Vector& kap = k->kappa;
  Matrix m5 = cm.effective_inter();
  const double m00 = m5(0, 0);
  Vector row0 = m5.row(0).tail(n).transpose();  // indexed by l
  Vector col0 = m5.col(0).tail(n);              // indexed by k
  Matrix inner = m5.bottomRightCorner(n, n);    // [k][l]
  if (!m5.allFinite() || !cm.slope.allFinite())
    throw SolverError("non-finite metric grid");

  // Coefficient of P(i,k) in the expectation, split into A Q B + Q C + D.
  k->b.resize(n, n);
  for (int l = 0; l < n; ++l)
    for (int kk = 0; kk < n; ++kk)
      k->b(l, kk) = kap(l) * kap(kk) *
                    (inner(kk, l) + m00 - row0(l) - col0(kk));
  k->c = cm.slope.bottomRightCorner(n, n).transpose();
  k->d.resize(n, n);
  k->e0.resize(n, n);
  for (int c = 0; c < n; ++c) {
    k->d.col(c).setConstant(kap(c) * (col0(c) - m00));
    k->e0.col(c).setConstant(kap(c) * (row0(c) - m00));
  }
  k->offset = m00;
  k->sylvester = build_sylvester_cache(k->b, k->c);
  return k;
}

Workspace assemble(std::shared_ptr<const Constants> constants,
                   const Vector& psi, double rho) {
  const int n = constants->n;
  if (psi.size() != n) throw SolverError("potential vector length mismatch");
  if (!(rho > 0.0)) throw SolverError("penalty rho must be positive");
  Workspace ws;
  ws.constants = std::move(constants);
  ws.psi = psi;
  ws.omega = psi * Vector::Ones(n).transpose();
  ws.e = ws.constants->e0 - ws.omega;
  ws.rho = rho;
  ws.q = ws.z = ws.x = ws.u = ws.w = Matrix::Zero(n, n);
  return ws;
}

Workspace assemble(const CompiledMetric& cm, const Vector& psi, double rho) {
  return assemble(build_constants(cm), psi, rho);
}

Matrix linear_map(const Constants& k, const Matrix& x) {
  Eigen::RowVectorXd colsum = x.colwise().sum();
  Matrix out = k.d + x * k.c;
  out.rowwise() += colsum * k.b;
  return out;
}

double sum_k_largest_objective(const Matrix& x) {
  const int n = static_cast<int>(x.rows());
  double best = 0.0;
  std::vector<double> col(n);
  for (int c = 0; c < x.cols(); ++c) {
    for (int i = 0; i < n; ++i) col[i] = x(i, c);
    int k = std::min(c + 1, n);
    std::partial_sort(col.begin(), col.begin() + k, col.end(),
                      std::greater<>());
    best = std::max(best, std::accumulate(col.begin(), col.begin() + k, 0.0));
  }
  return best;
}

double objective(const Workspace& ws, const Matrix& q) {
  const Constants& k = *ws.constants;
  return sum_k_largest_objective(linear_map(k, q)) +
         (q.array() * ws.e.array()).sum() + k.offset;
}

// ---------------------------------------------------------------------------
// Projection onto the marginal polytope

MarginalMatrix project_delta(const Matrix& a, ProjectionOptions opts) {
  const int n = static_cast<int>(a.rows());
  std::vector<SortedColumn> cols(n);
  for (int c = 0; c < n; ++c) {
    SortedColumn& col = cols[c];
    col.k = c + 1;
    col.order.resize(n);
    std::iota(col.order.begin(), col.order.end(), 0);
    std::stable_sort(col.order.begin(), col.order.end(),
                     [&](int x, int y) { return a(x, c) > a(y, c); });
    col.a.resize(n);
    for (int j = 0; j < n; ++j) col.a[j] = a(col.order[j], c);
  }
  std::vector<ColumnSolution> sol(n);
  std::vector<ColumnSolution> last(n);
  bool warm = false;
  if (opts.hint != nullptr && static_cast<int>(opts.hint->clamped.size()) == n) {
    for (int c = 0; c < n; ++c)
      last[c] = {0.0, 0.0, opts.hint->clamped[c], opts.hint->middle[c], 0.0};
    warm = true;
  }
  std::vector<double> prefix(n + 1);
  // Budget slack as a function of the multiplier eta; nonincreasing.
  double slope = 0.0;  // d excess / d eta at the last evaluation
  auto excess = [&](double eta, std::vector<ColumnSolution>& out) {
    double total = 0.0;
    slope = 0.0;
    for (int c = 0; c < n; ++c) {
      out[c] = solve_column(cols[c], eta / cols[c].k, prefix,
                            warm ? &last[c] : nullptr);
      last[c] = out[c];
      total += out[c].r;
      slope += out[c].dr / cols[c].k;
    }
    warm = true;
    return total - 1.0;
  };

  double eta = 0.0;
  double g0 = excess(0.0, sol);
  if (g0 > 0.0) {
    double lo = 0.0;
    double g_lo = g0;
    double hi = 0.0;
    for (int c = 0; c < n; ++c) hi = std::max(hi, (c + 1) * a.col(c).maxCoeff());
    std::vector<ColumnSolution> trial(n);
    double g_hi = excess(hi, trial);
    while (g_hi > 0.0) {
      lo = hi;
      g_lo = g_hi;
      hi = 2.0 * hi + 1.0;
      g_hi = excess(hi, trial);
    }
    std::vector<ColumnSolution> hi_sol = trial;
    // The excess is piecewise linear in eta, so a Newton step from either end
    // lands on the root once it shares a piece with it. Otherwise take the
    // secant across the bracket, and bisect when the bracket stops halving.
    // The feasible (hi) side is the answer.
    double slope_hi = slope;
    double width = 2.0 * (hi - lo);
    bool exact = false;
    for (int it = 0; it < opts.max_iters && !exact; ++it) {
      double mid = 0.5 * (lo + hi);
      if (hi - lo <= 0.5 * width) {
        double step = slope_hi < 0.0 ? hi - g_hi / slope_hi : lo;
        if (!(step > lo && step < hi)) step = lo + (hi - lo) * g_lo / (g_lo - g_hi);
        if (step > lo && step < hi) mid = step;
      }
      width = hi - lo;
      double g = excess(mid, trial);
      if (std::abs(g) <= 1e-13) {
        hi = mid;
        hi_sol = trial;
        exact = true;
      } else if (g > 0.0) {
        lo = mid;
        g_lo = g;
        // Newton from the low side, kept only if it stays in the bracket.
        if (slope < 0.0) {
          double step = lo - g / slope;
          if (step > lo && step < hi) {
            double g2 = excess(step, trial);
            exact = std::abs(g2) <= 1e-13;
            if (g2 > 0.0 && !exact) {
              lo = step;
              g_lo = g2;
            } else {
              hi = step;
              g_hi = g2;
              slope_hi = slope;
              hi_sol = trial;
            }
          }
        }
      } else {
        hi = mid;
        g_hi = g;
        slope_hi = slope;
        hi_sol = trial;
      }
    }
    eta = hi;
    sol = hi_sol;
  }

  if (opts.hint != nullptr) {
    opts.hint->clamped.resize(n);
    opts.hint->middle.resize(n);
    for (int c = 0; c < n; ++c) {
      opts.hint->clamped[c] = sol[c].clamped;
      opts.hint->middle[c] = sol[c].middle;
    }
  }
  Matrix out(n, n);
  for (int c = 0; c < n; ++c)
    write_column(cols[c], eta / cols[c].k, sol[c], out, c);
  return MarginalMatrix(std::move(out));
}

Matrix prox_f(const Matrix& x, double rho, ProjectionHint* hint) {
  ProjectionOptions opts;
  opts.hint = hint;
  return x - project_delta(rho * x, opts).values() / rho;
}

// ---------------------------------------------------------------------------
// Iterations

Result solve(Workspace& ws, int max_iters, double tol) {
  const Constants& k = *ws.constants;
  const int n = k.n;
  const double rho = ws.rho;
  const Matrix ones = Matrix::Ones(n, n);
  Result res;
  ProjectionOptions q_opts;
  q_opts.hint = &ws.q_hint;
  // Every Q iterate lies in Delta, so its objective bounds the game value from
  // above; the iterates oscillate before settling, so keep the best one.
  Matrix best_q;
  double best = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iters; ++it) {
    Matrix q_prev = ws.q;
    Matrix z_prev = ws.z;
    ws.q = project_delta(ws.x + ws.w - ws.e / rho, q_opts).values();
    Matrix lx = linear_map(k, ws.x);
    ws.z = prox_f(lx + ws.u, rho, &ws.z_hint);
    // Over-relaxed copies of the first block; relaxation 1 is plain ADMM.
    const double a = ws.relaxation;
    Matrix z_hat = a * ws.z + (1.0 - a) * lx;
    Matrix q_hat = a * ws.q + (1.0 - a) * ws.x;
    Matrix g = k.d - z_hat + ws.u;
    Matrix f = ones * g * k.b.transpose() + g * k.c.transpose() + ws.w - q_hat;
    ws.x = solve_sylvester(k.sylvester, f);
    Matrix lx_new = linear_map(k, ws.x);
    ws.u += lx_new - z_hat;
    ws.w += ws.x - q_hat;
    Matrix r1 = lx_new - ws.z;
    Matrix r2 = ws.x - ws.q;
    res.iterations = it + 1;
    res.residual_z = r1.norm();
    res.residual_x = r2.norm();
    if (!std::isfinite(res.residual_z) || !std::isfinite(res.residual_x))
      throw SolverError("ADMM diverged at iteration " + std::to_string(it + 1));
    const double obj = objective(ws, ws.q);
    if (obj < best) {
      best = obj;
      best_q = ws.q;
    }
    // Zero iterates satisfy the primal residuals trivially, so the change in
    // (Q, Z) has to settle as well.
    double dual = rho * std::max((ws.q - q_prev).norm(), (ws.z - z_prev).norm());
    if (tol > 0.0 && res.residual_z <= tol && res.residual_x <= tol &&
        dual <= tol) {
      res.converged = true;
      break;
    }
  }
  if (best_q.size() == 0) best_q = ws.q;
  res.q = MarginalMatrix(std::move(best_q));
  res.objective = max_iters > 0 ? best : objective(ws, ws.q);
  return res;
}

}  // namespace apperf::admm
