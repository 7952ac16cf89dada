#include "apperf/ap_loss.hpp"

#include <mutex>

#include "apperf/error.hpp"
#include "apperf/lp.hpp"

namespace apperf {

const char* solver_path_name(SolverPath p) {
  switch (p) {
    case SolverPath::kAuto: return "auto";
    case SolverPath::kAdmm: return "admm";
    case SolverPath::kLp: return "lp";
  }
  return "?";
}

SolverPath parse_solver_path(const std::string& s) {
  if (s == "auto") return SolverPath::kAuto;
  if (s == "admm") return SolverPath::kAdmm;
  if (s == "lp") return SolverPath::kLp;
  throw ConfigError("unknown solver '" + s + "' (expected auto, admm or lp)");
}

namespace {

SolverPath choose_path(const CompiledMetric& cm, const ApConfig& cfg) {
  if (cm.has_constraints()) {
    if (cfg.solver == SolverPath::kAdmm)
      throw ConfigError("metric constraints are only supported by the LP solver");
    if (cm.n > cfg.lp_batch_cap)
      throw ConfigError("batch of " + std::to_string(cm.n) +
                        " exceeds the constrained LP cap of " +
                        std::to_string(cfg.lp_batch_cap));
    return SolverPath::kLp;
  }
  return cfg.solver == SolverPath::kLp ? SolverPath::kLp : SolverPath::kAdmm;
}

void check_inputs(const Vector& psi, std::span<const int> y, int n) {
  if (psi.size() != n || static_cast<int>(y.size()) != n)
    throw DataError("potentials, labels and compiled batch size disagree");
  for (int v : y)
    if (v != 0 && v != 1) throw DataError("labels must be 0 or 1");
  if (!psi.allFinite()) throw DataError("non-finite potential");
}

LossResult solve(const CompiledMetric& cm,
                 const std::shared_ptr<const admm::Constants>& constants,
                 const Vector& psi, std::span<const int> y,
                 const ApConfig& cfg) {
  check_inputs(psi, y, cm.n);
  LossResult out;
  out.stats.path = choose_path(cm, cfg);
  if (out.stats.path == SolverPath::kLp) {
    lp::GameSolution sol = lp::game_value_and_q(cm, psi, y);
    out.game_value = sol.objective;
    out.q_marginals = sol.q.row_sums();
    out.stats.iterations = sol.pivots;
  } else {
    auto k = constants ? constants : admm::build_constants(cm);
    admm::Workspace ws = admm::assemble(k, psi, cfg.rho);
    admm::Result res = admm::solve(ws, cfg.admm_iters, cfg.admm_tol);
    out.game_value = res.objective;
    out.q_marginals = res.q.row_sums();
    out.stats.iterations = res.iterations;
    out.stats.residual_z = res.residual_z;
    out.stats.residual_x = res.residual_x;
  }
  double ydotpsi = 0.0;
  out.grad.resize(cm.n);
  for (int i = 0; i < cm.n; ++i) {
    ydotpsi += y[i] * psi(i);
    out.grad(i) = out.q_marginals(i) - y[i];
  }
  out.value = -out.game_value - ydotpsi;
  return out;
}

}  // namespace

LossResult ap_objective(const Vector& psi, std::span<const int> y,
                        const CompiledMetric& cm, const ApConfig& cfg) {
  return solve(cm, nullptr, psi, y, cfg);
}

ApObjective::ApObjective(MetricExpr metric, ApConfig cfg)
    : metric_(std::move(metric)), cfg_(cfg) {}

ApObjective::Entry ApObjective::entry(int n) const {
  {
    std::shared_lock lock(mu_);
    auto it = cache_.find(n);
    if (it != cache_.end()) return it->second;
  }
  // Build outside the lock; a racing builder loses and its copy is dropped.
  Entry e;
  auto cm = std::make_shared<CompiledMetric>(compile(metric_, n));
  if (!cm->has_constraints() && cfg_.solver != SolverPath::kLp)
    e.constants = admm::build_constants(*cm);
  e.cm = std::move(cm);
  std::unique_lock lock(mu_);
  return cache_.emplace(n, std::move(e)).first->second;
}

LossResult ApObjective::operator()(const Vector& psi,
                                   std::span<const int> y) const {
  if (psi.size() == 0) throw DataError("empty minibatch");
  Entry e = entry(static_cast<int>(psi.size()));
  return solve(*e.cm, e.constants, psi, y, cfg_);
}

std::shared_ptr<const CompiledMetric> ApObjective::compiled(int n) const {
  return entry(n).cm;
}

int ApObjective::cached_sizes() const {
  std::shared_lock lock(mu_);
  return static_cast<int>(cache_.size());
}

}  // namespace apperf
