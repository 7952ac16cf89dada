#pragma once

#include <map>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>

#include "apperf/admm.hpp"
#include "apperf/metric_expr.hpp"
#include "apperf/types.hpp"

namespace apperf {

enum class SolverPath { kAuto, kAdmm, kLp };

const char* solver_path_name(SolverPath p);
// "auto", "admm" or "lp"; throws ConfigError otherwise.
SolverPath parse_solver_path(const std::string& s);

struct ApConfig {
  SolverPath solver = SolverPath::kAuto;
  int admm_iters = 100;
  double admm_tol = 0.0;  // > 0 switches ADMM to tolerance mode
  double rho = 1.0;
  int lp_batch_cap = 15;  // largest batch the constrained LP path accepts
};

struct SolverStats {
  SolverPath path = SolverPath::kAdmm;
  int iterations = 0;  // ADMM iterations or simplex pivots
  double residual_z = 0.0;
  double residual_x = 0.0;
};

struct LossResult {
  // Minus the inner game value minus <y, psi>. Minimizing it maximizes the
  // metric against the adversary.
  double value = 0.0;
  Vector grad;         // Q*(yhat_i = 1) - y_i
  Vector q_marginals;  // Q*(yhat_i = 1)
  double game_value = 0.0;
  SolverStats stats;
};

// One loss evaluation against an already compiled metric. ADMM constants are
// rebuilt on every call; use ApObjective to reuse them across minibatches.
LossResult ap_objective(const Vector& psi, std::span<const int> y,
                        const CompiledMetric& cm, const ApConfig& cfg = {});

// Loss layer for one metric with compiled grids and ADMM constants cached per
// batch size. Safe to call from several threads.
class ApObjective {
 public:
  explicit ApObjective(MetricExpr metric, ApConfig cfg = {});

  LossResult operator()(const Vector& psi, std::span<const int> y) const;

  const MetricExpr& metric() const { return metric_; }
  const ApConfig& config() const { return cfg_; }
  std::shared_ptr<const CompiledMetric> compiled(int n) const;
  int cached_sizes() const;

 private:
  struct Entry {
    std::shared_ptr<const CompiledMetric> cm;
    std::shared_ptr<const admm::Constants> constants;  // null on the LP path
  };
  Entry entry(int n) const;

  MetricExpr metric_;
  ApConfig cfg_;
  mutable std::shared_mutex mu_;
  mutable std::map<int, Entry> cache_;
};

}  // namespace apperf
