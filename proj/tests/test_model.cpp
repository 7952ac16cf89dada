#include <doctest.h>

#include <random>

#include "apperf/error.hpp"
#include "apperf/model.hpp"
#include "apperf/oracles.hpp"

using namespace apperf;

namespace {

Matrix random_inputs(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = nd(rng);
  return x;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("zero weights give the bias") {
  Model m = Model::mlp(3, {4, 5}, 1);
  for (auto& d : m.layers) d.w.setZero();
  m.layers.back().b(0) = 0.7;
  std::mt19937_64 rng(1);
  Vector psi = m.forward(random_inputs(6, 3, rng));
  for (int i = 0; i < 6; ++i) CHECK(psi(i) == 0.7);
}

TEST_CASE("linear forward") {
  Model m = Model::linear(2, 0);
  m.layers[0].w << 2.0, 3.0;
  m.layers[0].b(0) = 0.0;
  Matrix x(1, 2);
  x << 1.0, 0.0;
  CHECK(m.forward(x)(0) == 2.0);
  CHECK_THROWS_AS(m.forward(Matrix::Zero(1, 3)), DataError);
}

TEST_CASE("xavier initialization bounds") {
  Model m = Model::mlp(10, {30}, 4);
  double limit = std::sqrt(6.0 / 40.0);
  CHECK(m.layers[0].w.cwiseAbs().maxCoeff() <= limit);
  CHECK(m.layers[0].b.isZero());
  CHECK(Model::mlp(10, {30}, 4).parameters() == m.parameters());
  CHECK(Model::mlp(10, {30}, 5).parameters() != m.parameters());
}

TEST_CASE("zero upstream gradient") {
  Model m = Model::mlp(3, {4}, 2);
  std::mt19937_64 rng(2);
  ModelGrad g = m.backward(random_inputs(5, 3, rng), Vector::Zero(5), 0.0);
  CHECK(g.flatten().isZero());
}

TEST_CASE("linear gradient in closed form") {
  Model m = Model::linear(3, 3);
  std::mt19937_64 rng(3);
  Matrix x = random_inputs(7, 3, rng);
  Vector d = random_inputs(7, 1, rng).col(0);
  const double l2 = 0.3;
  ModelGrad g = m.backward(x, d, l2);
  Vector want = x.transpose() * d + 2.0 * l2 * m.layers[0].w.row(0).transpose();
  CHECK((g.w[0].row(0).transpose() - want).norm() <= 1e-12);
  CHECK(g.b[0](0) == doctest::Approx(d.sum()));
}

TEST_CASE("mlp backprop matches finite differences") {
  std::mt19937_64 rng(4);
  Model m = Model::mlp(4, {6, 5}, 7);
  for (auto& d : m.layers) d.b.setConstant(0.1);
  Matrix x = random_inputs(6, 4, rng);
  Vector c = random_inputs(6, 1, rng).col(0);
  const double l2 = 0.05;
  auto loss = [&](const Vector& theta) {
    Model t = m;
    t.set_parameters(theta);
    double reg = 0.0;
    for (const auto& d : t.layers) reg += d.w.squaredNorm();
    return c.dot(t.forward(x)) + l2 * reg;
  };
  Vector theta = m.parameters();
  Vector fd = oracle::finite_diff_grad(loss, theta, 1e-6);
  Vector g = m.backward(x, c, l2).flatten();
  CHECK((fd - g).norm() <= 1e-5 * std::max(1.0, g.norm()));
}

TEST_CASE("prediction threshold") {
  Model m = Model::linear(1, 0);
  m.layers[0].w(0, 0) = 1.0;
  Matrix x(3, 1);
  x << -1.0, 0.2, 0.0;
  CHECK(m.predict(x) == Labels{0, 1, 1});
}

TEST_CASE("json round trip") {
  Model m = Model::mlp(3, {4, 2}, 11);
  m.metric_name = "f2";
  m.feature_names = {"a", "b", "c"};
  m.feature_mean = Vector::Constant(3, 0.25);
  m.feature_scale = Vector::Constant(3, 1.0 / 3.0);
  Model r = model_from_json(model_to_json(m));
  CHECK(r.parameters() == m.parameters());
  CHECK(r.spec() == "mlp:4,2");
  CHECK(r.seed == 11);
  CHECK(r.metric_name == "f2");
  CHECK(r.feature_names == m.feature_names);
  CHECK(r.feature_scale == m.feature_scale);
  CHECK_THROWS_AS(model_from_json("{"), DataError);
  CHECK_THROWS_AS(model_from_json(R"({"seed": 1, "architecture": {"inputs": 2}, "layers": []})"),
                  DataError);
}

TEST_CASE("model specs") {
  CHECK(Model::from_spec("linear", 5, 0).spec() == "linear");
  CHECK(Model::from_spec("mlp:100,100", 2, 0).hidden() == std::vector<int>{100, 100});
  CHECK_THROWS_AS(Model::from_spec("mlp:", 2, 0), ConfigError);
  CHECK_THROWS_AS(Model::from_spec("mlp:3,x", 2, 0), ConfigError);
  CHECK_THROWS_AS(Model::from_spec("cnn", 2, 0), ConfigError);
}

TEST_CASE("optimizers") {
  Model m = Model::linear(2, 0);
  m.layers[0].w << 1.0, -1.0;
  ModelGrad g = m.backward(Matrix::Identity(2, 2), Vector::Ones(2), 0.0);
  Model s = m;
  Sgd(0.1).step(s, g);
  CHECK(s.layers[0].w(0, 0) == doctest::Approx(0.9));
  CHECK(s.layers[0].b(0) == doctest::Approx(-0.2));
  Model a = m;
  Adam adam(0.01);
  adam.step(a, g);
  // The first bias-corrected Adam step moves each weight by about lr.
  CHECK(a.layers[0].w(0, 0) == doctest::Approx(0.99).epsilon(1e-6));
  CHECK_THROWS_AS(make_optimizer("rmsprop", 0.1), ConfigError);
  CHECK_THROWS_AS(make_optimizer("sgd", 0.0), ConfigError);
}

}  // TEST_SUITE
