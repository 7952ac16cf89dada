#include "apperf/oracles.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "apperf/error.hpp"
#include "apperf/simplex.hpp"

namespace apperf::oracle {

namespace {

void check_size(int n, int cap) {
  if (n < 1 || n > cap)
    throw Error("oracle size out of range: n=" + std::to_string(n));
}

std::vector<Labels> all_labelings(int n) {
  std::vector<Labels> out;
  for (std::uint32_t idx = 0; idx < (1u << n); ++idx)
    out.push_back(labels_of(idx, n));
  return out;
}

}  // namespace

Labels labels_of(std::uint32_t index, int n) {
  Labels y(n);
  for (int i = 0; i < n; ++i) y[i] = static_cast<int>(index >> i & 1u);
  return y;
}

FullDistribution FullDistribution::uniform(int n) {
  check_size(n, 20);
  FullDistribution d;
  d.n = n;
  d.weights.assign(size_t{1} << n, 1.0 / static_cast<double>(size_t{1} << n));
  return d;
}

FullDistribution FullDistribution::point_mass(std::span<const int> labels) {
  const int n = static_cast<int>(labels.size());
  check_size(n, 20);
  FullDistribution d;
  d.n = n;
  d.weights.assign(size_t{1} << n, 0.0);
  std::uint32_t idx = 0;
  for (int i = 0; i < n; ++i)
    if (labels[i]) idx |= 1u << i;
  d.weights[idx] = 1.0;
  return d;
}

FullDistribution FullDistribution::random(int n, std::mt19937_64& rng,
                                          double sparsity) {
  check_size(n, 20);
  FullDistribution d;
  d.n = n;
  d.weights.resize(size_t{1} << n);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double total = 0.0;
  for (double& w : d.weights) {
    w = expo(rng);
    if (sparsity > 0.0 && unif(rng) < sparsity) w = 0.0;
    total += w;
  }
  if (total == 0.0) {
    d.weights[0] = 1.0;
    total = 1.0;
  }
  for (double& w : d.weights) w /= total;
  return d;
}

double brute_force_expected_metric(const MetricExpr& metric,
                                   const FullDistribution& p,
                                   const FullDistribution& q) {
  check_size(p.n, 6);
  if (q.n != p.n) throw Error("distribution sizes differ");
  auto labels = all_labelings(p.n);
  double total = 0.0;
  for (size_t a = 0; a < labels.size(); ++a) {
    if (p.weights[a] == 0.0) continue;
    for (size_t b = 0; b < labels.size(); ++b) {
      if (q.weights[b] == 0.0) continue;
      total += p.weights[a] * q.weights[b] *
               evaluate_discrete(metric, labels[a], labels[b]);
    }
  }
  return total;
}

double brute_force_constraint_expectation(const MetricConstraint& con,
                                          const FullDistribution& p,
                                          std::span<const int> y) {
  check_size(p.n, 10);
  double total = 0.0;
  for (std::uint32_t a = 0; a < (1u << p.n); ++a) {
    if (p.weights[a] == 0.0) continue;
    total += p.weights[a] * evaluate_constraint(con, labels_of(a, p.n), y);
  }
  return total;
}

GameResult brute_force_game(const MetricExpr& metric, const Vector& psi) {
  const int n = static_cast<int>(psi.size());
  check_size(n, 5);
  const int m = 1 << n;
  auto labels = all_labelings(n);
  // Variables: Q over labelings, then a free epigraph variable v.
  lp::LpProblem prob = lp::make_problem(m + 1);
  prob.objective(m) = 1.0;
  prob.lower(m) = -std::numeric_limits<double>::infinity();
  prob.rows = Matrix::Zero(m + 1, m + 1);
  prob.rhs = Vector::Zero(m + 1);
  prob.senses.assign(m + 1, lp::Sense::kLessEqual);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      double shift = 0.0;
      for (int i = 0; i < n; ++i) shift += psi(i) * labels[b][i];
      prob.rows(a, b) = evaluate_discrete(metric, labels[a], labels[b]) - shift;
    }
    prob.rows(a, m) = -1.0;
  }
  for (int b = 0; b < m; ++b) prob.rows(m, b) = 1.0;
  prob.rhs(m) = 1.0;
  prob.senses[m] = lp::Sense::kEqual;

  lp::LpSolution sol = lp::simplex_solve(prob);
  if (sol.status != lp::LpStatus::kOptimal)
    throw SolverError(std::string("brute-force game LP ") +
                      lp::status_name(sol.status));
  GameResult out;
  out.value = sol.objective;
  out.q.n = n;
  out.q.weights.resize(m);
  for (int b = 0; b < m; ++b) out.q.weights[b] = std::max(sol.x(b), 0.0);
  return out;
}

Vector finite_diff_grad(const std::function<double(const Vector&)>& fn,
                        const Vector& x, double h) {
  if (!(h > 0.0)) throw Error("finite difference step must be positive");
  Vector g(x.size());
  Vector xp = x;
  for (int i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    double up = fn(xp);
    xp(i) = x(i) - h;
    double down = fn(xp);
    xp(i) = x(i);
    if (!std::isfinite(up) || !std::isfinite(down))
      throw Error("non-finite function value in finite differences");
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

// Goldfarb-Idnani dual active-set method for min 1/2 |x - a|^2 subject to
// N' x >= b, specialized to an identity Hessian.
Matrix projection_oracle(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  check_size(n, 10);
  const int dim = n * n;
  const int nc = 2 * dim + 1;
  auto var = [n](int i, int c) { return c * n + i; };
  Matrix normals = Matrix::Zero(dim, nc);
  Vector bounds = Vector::Zero(nc);
  for (int c = 0; c < n; ++c) {
    for (int i = 0; i < n; ++i) {
      normals(var(i, c), var(i, c)) = 1.0;
      const int j = dim + var(i, c);
      for (int r = 0; r < n; ++r) normals(var(r, c), j) = 1.0 / (c + 1);
      normals(var(i, c), j) -= 1.0;
      normals(var(i, c), 2 * dim) = -1.0 / (c + 1);
    }
  }
  bounds(2 * dim) = -1.0;

  Vector x = Eigen::Map<const Vector>(a.data(), dim);
  std::vector<int> active;
  std::vector<double> mult;
  const double eps = 1e-13;
  for (int outer = 0; outer < 100 * nc; ++outer) {
    Vector slack = normals.transpose() * x - bounds;
    int p = -1;
    double worst = -1e-12 * (1.0 + x.lpNorm<Eigen::Infinity>());
    for (int j = 0; j < nc; ++j) {
      if (slack(j) < worst) {
        worst = slack(j);
        p = j;
      }
    }
    if (p < 0) break;
    Vector np = normals.col(p);
    double mult_p = 0.0;
    while (true) {
      const int q = static_cast<int>(active.size());
      Vector r(q), z = np;
      if (q > 0) {
        Matrix act(dim, q);
        for (int j = 0; j < q; ++j) act.col(j) = normals.col(active[j]);
        r = (act.transpose() * act).ldlt().solve(act.transpose() * np);
        z -= act * r;
      }
      double t1 = std::numeric_limits<double>::infinity();
      int drop = -1;
      for (int j = 0; j < q; ++j) {
        if (r(j) > eps && mult[j] / r(j) < t1) {
          t1 = mult[j] / r(j);
          drop = j;
        }
      }
      double zn = z.dot(np);
      double t2 = std::numeric_limits<double>::infinity();
      if (z.squaredNorm() > 1e-20) t2 = -(np.dot(x) - bounds(p)) / zn;
      if (std::isinf(t1) && std::isinf(t2))
        throw SolverError("projection oracle: empty feasible set");
      double t = std::min(t1, t2);
      if (!std::isinf(t2)) x += t * z;
      for (int j = 0; j < q; ++j) mult[j] -= t * r(j);
      mult_p += t;
      if (t2 <= t1) {
        active.push_back(p);
        mult.push_back(mult_p);
        break;
      }
      active.erase(active.begin() + drop);
      mult.erase(mult.begin() + drop);
    }
  }
  return Eigen::Map<const Matrix>(x.data(), n, n);
}

}  // namespace apperf::oracle
