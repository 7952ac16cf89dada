#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "apperf/ap_loss.hpp"
#include "apperf/data.hpp"
#include "apperf/metric_expr.hpp"
#include "apperf/model.hpp"

namespace apperf {

enum class Objective { kAp, kBce };

// "ap" or "bce"; throws ConfigError otherwise.
Objective parse_objective(const std::string& s);

struct TrainConfig {
  int epochs = 100;
  double lr = 1e-3;
  std::string optimizer = "adam";
  double l2 = 0.0;
  int batch = 25;
  Objective objective = Objective::kAp;
  std::uint64_t seed = 0;
  ApConfig ap;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;  // nan when the metric is undefined
};

struct TrainResult {
  Model best;
  int best_epoch = 0;
  double best_val_metric = 0.0;
  std::vector<EpochRecord> history;
};

struct BceResult {
  double value = 0.0;  // mean over the batch
  Vector grad;         // (sigmoid(psi) - y) / batch
};

BceResult bce_loss(const Vector& psi, std::span<const int> y);

// Metric body on the model's predictions; nan where the metric is undefined.
double evaluate_model(const MetricExpr& metric, const Model& model,
                      const Dataset& ds);

// Shuffled minibatches, one optimizer step per batch. After every epoch the
// metric is evaluated on val and the best epoch's parameters are kept (nan
// counts as worst). The AP loss is divided by the batch size like the BCE mean.
TrainResult train(const TrainConfig& cfg, const MetricExpr& metric, Model init,
                  const Dataset& train_set, const Dataset& val_set);

void save_history(const std::filesystem::path& path,
                  const std::vector<EpochRecord>& history);

}  // namespace apperf
