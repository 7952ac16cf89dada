#pragma once

#include <cstdint>
#include <span>

#include "apperf/metric_expr.hpp"
#include "apperf/types.hpp"

namespace apperf {

// n x n marginals p(i, c) = P(yhat_i = 1, sum(yhat) = c + 1). Column c holds
// the k = c + 1 slice.
class MarginalMatrix {
 public:
  MarginalMatrix() = default;
  explicit MarginalMatrix(Matrix values);
  static MarginalMatrix zero(int n);

  int n() const { return static_cast<int>(values_.rows()); }
  const Matrix& values() const { return values_; }
  double operator()(int i, int c) const { return values_(i, c); }

  // Per-sample marginal P(yhat_i = 1).
  Vector row_sums() const { return values_.rowwise().sum(); }

 private:
  Matrix values_;
};

struct DerivedStats {
  Vector r;        // r(c) = P(sum = c + 1)
  Matrix p0_cols;  // r_k * 1 - p_k
  double prob_empty = 1.0;
  double prob_full = 0.0;
};

bool is_in_delta(const MarginalMatrix& p, double tol);
// Largest violation of the three constraint families; 0 when inside.
double delta_violation(const Matrix& p);

DerivedStats derived_stats(const MarginalMatrix& p);

double expected_metric(const CompiledMetric& cm, const MarginalMatrix& p,
                       const MarginalMatrix& q);
double expected_metric_vs_labels(const ConstraintLinearForm& form,
                                 const MarginalMatrix& p);

// Marginalizes a distribution over {0,1}^n. Bit i of the index is the label
// of sample i.
MarginalMatrix marginalize(std::span<const double> weights, int n);

MarginalMatrix random_marginal(int n, std::uint64_t seed);

}  // namespace apperf
