#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "apperf/types.hpp"

namespace apperf {

struct Dense {
  Matrix w;  // out x in
  Vector b;
};

struct ModelGrad {
  std::vector<Matrix> w;
  std::vector<Vector> b;

  Vector flatten() const;
};

// Stack of dense layers with ReLU between them and a scalar linear output.
// A model without hidden layers is a linear scorer.
class Model {
 public:
  Model() = default;
  // Xavier-uniform weights, zero biases.
  static Model linear(int inputs, std::uint64_t seed);
  static Model mlp(int inputs, const std::vector<int>& hidden,
                   std::uint64_t seed);
  // "linear" or "mlp:H1,H2,...".
  static Model from_spec(const std::string& spec, int inputs,
                         std::uint64_t seed);

  int inputs() const;
  std::vector<int> hidden() const;
  std::string spec() const;

  // x is samples x features; returns one potential per sample.
  Vector forward(const Matrix& x) const;
  // Gradient of sum_i dpsi_i psi_i(x) + l2 * sum ||W||^2 (biases are not
  // penalized).
  ModelGrad backward(const Matrix& x, const Vector& dpsi, double l2) const;
  // 1 iff psi >= 0.
  Labels predict(const Matrix& x) const;

  Vector parameters() const;
  void set_parameters(const Vector& theta);
  bool finite() const;

  std::vector<Dense> layers;
  std::uint64_t seed = 0;
  std::string metric_name;
  // Standardization applied to raw features before forward(); empty when the
  // caller feeds prepared features.
  std::vector<std::string> feature_names;
  Vector feature_mean, feature_scale;
};

std::string model_to_json(const Model& m);
Model model_from_json(const std::string& text);
void save_model(const Model& m, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(Model& m, const ModelGrad& g) = 0;
};

class Sgd : public Optimizer {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void step(Model& m, const ModelGrad& g) override;

 private:
  double lr_;
};

class Adam : public Optimizer {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(Model& m, const ModelGrad& g) override;

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  ModelGrad m_, v_;
};

// "sgd" or "adam".
std::unique_ptr<Optimizer> make_optimizer(const std::string& name, double lr);

}  // namespace apperf
