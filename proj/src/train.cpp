#include "apperf/train.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>

#include "apperf/error.hpp"

namespace apperf {

Objective parse_objective(const std::string& s) {
  if (s == "ap") return Objective::kAp;
  if (s == "bce") return Objective::kBce;
  throw ConfigError("unknown objective '" + s + "' (expected ap or bce)");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (batch < 1) throw ConfigError("batch size must be positive");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(l2 >= 0.0)) throw ConfigError("L2 weight must be nonnegative");
  if (!(ap.rho > 0.0)) throw ConfigError("rho must be positive");
  if (ap.admm_iters < 1) throw ConfigError("ADMM iterations must be positive");
}

BceResult bce_loss(const Vector& psi, std::span<const int> y) {
  const auto n = psi.size();
  if (n == 0 || static_cast<Eigen::Index>(y.size()) != n)
    throw DataError("BCE needs matching nonempty potentials and labels");
  BceResult out;
  out.grad.resize(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = psi(i);
    // log(1 + exp(-|s|)) + max(s, 0) - y s
    total += std::log1p(std::exp(-std::abs(s))) + std::max(s, 0.0) - y[i] * s;
    out.grad(i) = (1.0 / (1.0 + std::exp(-s)) - y[i]) / static_cast<double>(n);
  }
  out.value = total / static_cast<double>(n);
  return out;
}

double evaluate_model(const MetricExpr& metric, const Model& model,
                      const Dataset& ds) {
  Labels yhat = model.predict(ds.x);
  try {
    return evaluate_discrete(metric, yhat, ds.y);
  } catch (const MetricError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

TrainResult train(const TrainConfig& cfg, const MetricExpr& metric, Model init,
                  const Dataset& train_set, const Dataset& val_set) {
  cfg.validate();
  if (train_set.size() == 0 || val_set.size() == 0)
    throw DataError("training and validation sets must be nonempty");
  Model model = std::move(init);
  auto opt = make_optimizer(cfg.optimizer, cfg.lr);
  ApObjective ap(metric, cfg.ap);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult res;
  res.best = model;
  double best = -std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch) {
      size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch));
      std::vector<int> rows(order.begin() + start, order.begin() + end);
      Dataset mb = train_set.subset(rows);
      Vector psi = model.forward(mb.x);
      double value;
      Vector dpsi;
      if (cfg.objective == Objective::kBce) {
        BceResult b = bce_loss(psi, mb.y);
        value = b.value;
        dpsi = std::move(b.grad);
      } else {
        LossResult l = ap(psi, mb.y);
        const double scale = 1.0 / static_cast<double>(rows.size());
        value = l.value * scale;
        dpsi = l.grad * scale;
      }
      if (!std::isfinite(value) || !dpsi.allFinite())
        throw SolverError("non-finite loss at epoch " + std::to_string(epoch) +
                          ", batch " + std::to_string(batches + 1));
      opt->step(model, model.backward(mb.x, dpsi, cfg.l2));
      if (!model.finite())
        throw SolverError("parameters diverged at epoch " + std::to_string(epoch));
      loss_sum += value;
      ++batches;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / batches;
    rec.val_metric = evaluate_model(metric, model, val_set);
    res.history.push_back(rec);
    const double score = std::isnan(rec.val_metric)
                             ? -std::numeric_limits<double>::infinity()
                             : rec.val_metric;
    if (res.best_epoch == 0 || score > best) {
      best = score;
      res.best = model;
      res.best_epoch = epoch;
      res.best_val_metric = rec.val_metric;
    }
  }
  return res;
}

void save_history(const std::filesystem::path& path,
                  const std::vector<EpochRecord>& history) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path.string());
  f << "epoch,train_loss,val_metric\n" << std::setprecision(17);
  for (const auto& r : history)
    f << r.epoch << "," << r.train_loss << "," << r.val_metric << "\n";
}

}  // namespace apperf
