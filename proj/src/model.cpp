#include "apperf/model.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "apperf/error.hpp"

namespace apperf {

using nlohmann::json;

Vector ModelGrad::flatten() const {
  Eigen::Index total = 0;
  for (size_t i = 0; i < w.size(); ++i) total += w[i].size() + b[i].size();
  Vector out(total);
  Eigen::Index pos = 0;
  for (size_t i = 0; i < w.size(); ++i) {
    out.segment(pos, w[i].size()) = w[i].reshaped();
    pos += w[i].size();
    out.segment(pos, b[i].size()) = b[i];
    pos += b[i].size();
  }
  return out;
}

namespace {

Model build(int inputs, const std::vector<int>& hidden, std::uint64_t seed) {
  if (inputs < 1) throw ConfigError("model needs at least one input feature");
  std::mt19937_64 rng(seed);
  Model m;
  m.seed = seed;
  int fan_in = inputs;
  std::vector<int> widths = hidden;
  widths.push_back(1);
  for (int width : widths) {
    if (width < 1) throw ConfigError("hidden layer widths must be positive");
    double limit = std::sqrt(6.0 / (fan_in + width));
    std::uniform_real_distribution<double> u(-limit, limit);
    Dense d;
    d.w.resize(width, fan_in);
    for (Eigen::Index i = 0; i < d.w.size(); ++i) d.w(i) = u(rng);
    d.b = Vector::Zero(width);
    m.layers.push_back(std::move(d));
    fan_in = width;
  }
  return m;
}

// Activations per layer, samples as columns. acts[0] is the input.
std::vector<Matrix> forward_all(const Model& m, const Matrix& x) {
  if (m.layers.empty()) throw ConfigError("empty model");
  if (x.cols() != m.inputs())
    throw DataError("feature width " + std::to_string(x.cols()) +
                    " does not match model input " +
                    std::to_string(m.inputs()));
  std::vector<Matrix> acts;
  acts.push_back(x.transpose());
  for (size_t i = 0; i < m.layers.size(); ++i) {
    const Dense& d = m.layers[i];
    Matrix h = d.w * acts.back();
    h.colwise() += d.b;
    if (i + 1 < m.layers.size()) h = h.cwiseMax(0.0);
    acts.push_back(std::move(h));
  }
  return acts;
}

}  // namespace

Model Model::linear(int inputs, std::uint64_t seed) {
  return build(inputs, {}, seed);
}

Model Model::mlp(int inputs, const std::vector<int>& hidden,
                 std::uint64_t seed) {
  return build(inputs, hidden, seed);
}

Model Model::from_spec(const std::string& spec, int inputs,
                       std::uint64_t seed) {
  if (spec == "linear") return linear(inputs, seed);
  if (spec.rfind("mlp:", 0) == 0) {
    std::vector<int> hidden;
    std::stringstream ss(spec.substr(4));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        size_t used = 0;
        int w = std::stoi(item, &used);
        if (used != item.size()) throw std::invalid_argument(item);
        hidden.push_back(w);
      } catch (const std::exception&) {
        throw ConfigError("bad layer width '" + item + "' in model spec");
      }
    }
    if (hidden.empty()) throw ConfigError("mlp spec needs layer widths");
    return mlp(inputs, hidden, seed);
  }
  throw ConfigError("unknown model '" + spec + "' (expected linear or mlp:H1,H2)");
}

int Model::inputs() const {
  return layers.empty() ? 0 : static_cast<int>(layers.front().w.cols());
}

std::vector<int> Model::hidden() const {
  std::vector<int> out;
  for (size_t i = 0; i + 1 < layers.size(); ++i)
    out.push_back(static_cast<int>(layers[i].w.rows()));
  return out;
}

std::string Model::spec() const {
  auto h = hidden();
  if (h.empty()) return "linear";
  std::string s = "mlp:";
  for (size_t i = 0; i < h.size(); ++i)
    s += (i ? "," : "") + std::to_string(h[i]);
  return s;
}

Vector Model::forward(const Matrix& x) const {
  return forward_all(*this, x).back().row(0).transpose();
}

ModelGrad Model::backward(const Matrix& x, const Vector& dpsi,
                          double l2) const {
  std::vector<Matrix> acts = forward_all(*this, x);
  if (dpsi.size() != x.rows())
    throw DataError("gradient length does not match the batch");
  const size_t nl = layers.size();
  ModelGrad g;
  g.w.resize(nl);
  g.b.resize(nl);
  Matrix delta = dpsi.transpose();  // 1 x batch
  for (size_t i = nl; i-- > 0;) {
    g.w[i] = delta * acts[i].transpose() + 2.0 * l2 * layers[i].w;
    g.b[i] = delta.rowwise().sum();
    if (i > 0) {
      delta = layers[i].w.transpose() * delta;
      delta = delta.cwiseProduct((acts[i].array() > 0.0).cast<double>().matrix());
    }
  }
  return g;
}

Labels Model::predict(const Matrix& x) const {
  Vector psi = forward(x);
  Labels out(psi.size());
  for (Eigen::Index i = 0; i < psi.size(); ++i) out[i] = psi(i) >= 0.0 ? 1 : 0;
  return out;
}

Vector Model::parameters() const {
  ModelGrad g;
  for (const Dense& d : layers) {
    g.w.push_back(d.w);
    g.b.push_back(d.b);
  }
  return g.flatten();
}

void Model::set_parameters(const Vector& theta) {
  Eigen::Index pos = 0;
  for (Dense& d : layers) {
    if (pos + d.w.size() + d.b.size() > theta.size())
      throw ConfigError("parameter vector too short");
    d.w.reshaped() = theta.segment(pos, d.w.size());
    pos += d.w.size();
    d.b = theta.segment(pos, d.b.size());
    pos += d.b.size();
  }
  if (pos != theta.size()) throw ConfigError("parameter vector too long");
}

bool Model::finite() const {
  for (const Dense& d : layers)
    if (!d.w.allFinite() || !d.b.allFinite()) return false;
  return true;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json vector_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector json_vector(const json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string model_to_json(const Model& m) {
  json layers = json::array();
  for (const Dense& d : m.layers) {
    json w = json::array();
    for (Eigen::Index r = 0; r < d.w.rows(); ++r) {
      Vector row = d.w.row(r).transpose();
      w.push_back(vector_json(row));
    }
    layers.push_back({{"weights", w}, {"bias", vector_json(d.b)}});
  }
  json j = {{"architecture", {{"inputs", m.inputs()},
                              {"hidden", m.hidden()},
                              {"activation", "relu"},
                              {"spec", m.spec()}}},
            {"layers", layers},
            {"seed", m.seed},
            {"metric", m.metric_name}};
  if (!m.feature_names.empty()) {
    j["standardization"] = {{"columns", m.feature_names},
                            {"mean", vector_json(m.feature_mean)},
                            {"scale", vector_json(m.feature_scale)}};
  }
  return j.dump(1);
}

Model model_from_json(const std::string& text) {
  try {
    json j = json::parse(text);
    Model m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.metric_name = j.value("metric", "");
    int in = j.at("architecture").at("inputs").get<int>();
    for (const json& lj : j.at("layers")) {
      Dense d;
      const json& w = lj.at("weights");
      d.b = json_vector(lj.at("bias"));
      d.w.resize(static_cast<Eigen::Index>(w.size()), in);
      for (size_t r = 0; r < w.size(); ++r) {
        Vector row = json_vector(w[r]);
        if (row.size() != in) throw DataError("ragged weight matrix in model");
        d.w.row(static_cast<Eigen::Index>(r)) = row.transpose();
      }
      if (d.b.size() != d.w.rows()) throw DataError("bias length mismatch in model");
      in = static_cast<int>(d.w.rows());
      m.layers.push_back(std::move(d));
    }
    if (m.layers.empty() || in != 1) throw DataError("model must end in one output");
    if (j.contains("standardization")) {
      const json& s = j["standardization"];
      m.feature_names = s.at("columns").get<std::vector<std::string>>();
      m.feature_mean = json_vector(s.at("mean"));
      m.feature_scale = json_vector(s.at("scale"));
      const auto nf = static_cast<Eigen::Index>(m.feature_names.size());
      if (m.feature_mean.size() != nf || m.feature_scale.size() != nf ||
          nf != m.inputs())
        throw DataError("standardization does not match the model inputs");
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  }
}

void save_model(const Model& m, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path.string());
  f << model_to_json(m) << "\n";
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return model_from_json(ss.str());
}

// ---------------------------------------------------------------------------
// Optimizers

void Sgd::step(Model& m, const ModelGrad& g) {
  for (size_t i = 0; i < m.layers.size(); ++i) {
    m.layers[i].w -= lr_ * g.w[i];
    m.layers[i].b -= lr_ * g.b[i];
  }
}

void Adam::step(Model& m, const ModelGrad& g) {
  if (t_ == 0) {
    for (size_t i = 0; i < g.w.size(); ++i) {
      m_.w.push_back(Matrix::Zero(g.w[i].rows(), g.w[i].cols()));
      m_.b.push_back(Vector::Zero(g.b[i].size()));
    }
    v_ = m_;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](auto& param, const auto& grad, auto& mom, auto& var) {
    mom = beta1_ * mom + (1.0 - beta1_) * grad;
    var = beta2_ * var + (1.0 - beta2_) * grad.cwiseProduct(grad);
    param.array() -= lr_ * (mom.array() / c1) /
                     ((var.array() / c2).sqrt() + eps_);
  };
  for (size_t i = 0; i < m.layers.size(); ++i) {
    update(m.layers[i].w, g.w[i], m_.w[i], v_.w[i]);
    update(m.layers[i].b, g.b[i], m_.b[i], v_.b[i]);
  }
}

std::unique_ptr<Optimizer> make_optimizer(const std::string& name, double lr) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (name == "sgd") return std::make_unique<Sgd>(lr);
  if (name == "adam") return std::make_unique<Adam>(lr);
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

}  // namespace apperf
