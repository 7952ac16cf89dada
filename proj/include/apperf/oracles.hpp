#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "apperf/marginal.hpp"
#include "apperf/metric_expr.hpp"
#include "apperf/types.hpp"

namespace apperf::oracle {

// Distribution over {0,1}^n. Bit i of the index is the label of sample i.
struct FullDistribution {
  int n = 0;
  std::vector<double> weights;

  static FullDistribution uniform(int n);
  static FullDistribution point_mass(std::span<const int> labels);
  // Exponential weights; with sparsity > 0 that fraction of the support is
  // zeroed first, which exercises boundary marginals.
  static FullDistribution random(int n, std::mt19937_64& rng,
                                 double sparsity = 0.0);

  MarginalMatrix marginal() const { return marginalize(weights, n); }
};

Labels labels_of(std::uint32_t index, int n);

double brute_force_expected_metric(const MetricExpr& metric,
                                   const FullDistribution& p,
                                   const FullDistribution& q);

// E_P[constraint(Yhat, y)] by enumeration.
double brute_force_constraint_expectation(const MetricConstraint& con,
                                          const FullDistribution& p,
                                          std::span<const int> y);

struct GameResult {
  double value = 0.0;
  FullDistribution q;
};

// min over distributions Q of max over pure yhat of
// E_Q[metric(yhat, Y) - psi . Y], as an LP over the 2^n label vectors.
GameResult brute_force_game(const MetricExpr& metric, const Vector& psi);

Vector finite_diff_grad(const std::function<double(const Vector&)>& fn,
                        const Vector& x, double h);

// Euclidean projection onto Delta with a dual active-set QP.
Matrix projection_oracle(const Matrix& a);

}  // namespace apperf::oracle
