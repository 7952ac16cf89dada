#include "apperf/marginal.hpp"

#include <bit>
#include <cmath>
#include <random>

namespace apperf {

MarginalMatrix::MarginalMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols())
    throw Error("marginal matrix must be square");
}

MarginalMatrix MarginalMatrix::zero(int n) {
  return MarginalMatrix(Matrix::Zero(n, n));
}

double delta_violation(const Matrix& p) {
  const int n = static_cast<int>(p.rows());
  double worst = 0.0;
  double budget = 0.0;
  for (int c = 0; c < n; ++c) {
    double mean = p.col(c).sum() / (c + 1);
    budget += mean;
    for (int i = 0; i < n; ++i) {
      worst = std::max(worst, -p(i, c));
      worst = std::max(worst, p(i, c) - mean);
    }
  }
  return std::max(worst, budget - 1.0);
}

bool is_in_delta(const MarginalMatrix& p, double tol) {
  double v = delta_violation(p.values());
  return std::isfinite(v) && v <= tol;
}

DerivedStats derived_stats(const MarginalMatrix& p) {
  const int n = p.n();
  DerivedStats s;
  s.r.resize(n);
  s.p0_cols.resize(n, n);
  for (int c = 0; c < n; ++c) {
    s.r(c) = p.values().col(c).sum() / (c + 1);
    s.p0_cols.col(c) = Vector::Constant(n, s.r(c)) - p.values().col(c);
  }
  s.prob_empty = 1.0 - s.r.sum();
  s.prob_full = n > 0 ? s.r(n - 1) : 0.0;
  return s;
}

double expected_metric(const CompiledMetric& cm, const MarginalMatrix& p,
                       const MarginalMatrix& q) {
  const int n = cm.n;
  if (p.n() != n || q.n() != n)
    throw Error("marginal size does not match compiled metric");
  DerivedStats ps = derived_stats(p);
  DerivedStats qs = derived_stats(q);
  // Extended r and s with the k = 0 entry P(empty).
  Vector r(n + 1), s(n + 1);
  r(0) = ps.prob_empty;
  s(0) = qs.prob_empty;
  r.tail(n) = ps.r;
  s.tail(n) = qs.r;
  Matrix m5 = cm.effective_inter();
  Matrix pq = p.values().transpose() * q.values();  // p_k . q_l
  double total = r.dot(m5 * s);
  total += (cm.slope.bottomRightCorner(n, n).array() * pq.array()).sum();
  return total;
}

double expected_metric_vs_labels(const ConstraintLinearForm& form,
                                 const MarginalMatrix& p) {
  if (p.n() != form.b.rows())
    throw Error("marginal size does not match constraint form");
  return (form.b.array() * p.values().array()).sum() + form.mu;
}

MarginalMatrix marginalize(std::span<const double> weights, int n) {
  if (n < 1 || n > 30 || weights.size() != (size_t{1} << n))
    throw Error("weight vector must have 2^n entries");
  Matrix m = Matrix::Zero(n, n);
  for (size_t idx = 0; idx < weights.size(); ++idx) {
    int k = std::popcount(idx);
    if (k == 0) continue;
    for (int i = 0; i < n; ++i)
      if (idx >> i & 1) m(i, k - 1) += weights[idx];
  }
  return MarginalMatrix(std::move(m));
}

MarginalMatrix random_marginal(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> w(size_t{1} << n);
  double total = 0.0;
  for (double& x : w) total += (x = expo(rng));
  for (double& x : w) x /= total;
  return marginalize(w, n);
}

}  // namespace apperf
