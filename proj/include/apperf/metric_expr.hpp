#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "apperf/error.hpp"
#include "apperf/types.hpp"

namespace apperf {

enum class Entity { kTp, kTn, kFp, kFn, kPp, kPn, kAp, kAn, kAll };

const char* entity_name(Entity e);

struct ConfusionCounts {
  long tp = 0, tn = 0, fp = 0, fn = 0;
  long pp = 0, pn = 0, ap = 0, an = 0;
  long all = 0;

  // Counts from TP, predicted positives k, actual positives l and size n.
  static ConfusionCounts from_sums(long tp, long k, long l, long n);
  static ConfusionCounts from_labels(std::span<const int> yhat,
                                     std::span<const int> y);

  long get(Entity e) const;
  bool consistent() const;
};

// Immutable arithmetic tree over confusion entities. Nodes live in a flat
// vector; children always precede their parent.
class Expr {
 public:
  enum class Op { kNumber, kEntity, kAdd, kSub, kMul, kDiv, kPow, kSqrt, kNeg };

  struct Node {
    Op op = Op::kNumber;
    double number = 0.0;
    Entity entity = Entity::kTp;
    int exponent = 0;
    int lhs = -1;
    int rhs = -1;
  };

  Expr() = default;

  int add(Node node);
  const std::vector<Node>& nodes() const { return nodes_; }
  int root() const { return static_cast<int>(nodes_.size()) - 1; }
  bool empty() const { return nodes_.empty(); }

  // Plain IEEE evaluation: division by zero yields inf or nan.
  double evaluate(const ConfusionCounts& c) const;
  std::string to_string() const;

  static Expr constant(double v);

 private:
  double eval_node(int i, const ConfusionCounts& c) const;
  std::string print_node(int i) const;

  std::vector<Node> nodes_;
};

struct MetricConstraint {
  Expr expr;
  double tau = 0.0;
  bool special_positive = false;
  bool special_negative = false;
};

struct MetricExpr {
  std::string name;
  std::vector<std::pair<std::string, double>> params;
  Expr body;
  bool special_case_positive = false;
  bool special_case_negative = false;
  std::vector<MetricConstraint> constraints;
  std::string source;

  bool has_constraints() const { return !constraints.empty(); }
};

// Parses exactly one metric definition.
MetricExpr parse_metric(std::string_view text);
// Parses a file holding any number of metric definitions.
std::vector<MetricExpr> parse_metrics(std::string_view text);
std::vector<MetricExpr> load_metric_file(const std::filesystem::path& path);

// Special-case override at (k, l, n), or nan when the formula applies.
double special_case_value(bool positive, bool negative, long k, long l, long n);

// Metric value at a count configuration, special cases first.
// Throws MetricError carrying (k, l) if the formula is undefined there.
double evaluate_counts(const Expr& expr, bool positive, bool negative,
                       const ConfusionCounts& c);
double evaluate_discrete(const MetricExpr& metric, std::span<const int> yhat,
                         std::span<const int> y);
double evaluate_constraint(const MetricConstraint& con,
                           std::span<const int> yhat, std::span<const int> y);

enum class Regime { kNoSpecial, kPosSpecial, kNegSpecial, kBothSpecial };

const char* regime_name(Regime r);

// Coefficient grids indexed [k][l] over [0,n]^2.
struct CompiledMetric {
  int n = 0;
  Matrix slope;
  Matrix inter;
  Regime regime = Regime::kNoSpecial;
  std::vector<MetricConstraint> constraints;

  bool positive() const {
    return regime == Regime::kPosSpecial || regime == Regime::kBothSpecial;
  }
  bool negative() const {
    return regime == Regime::kNegSpecial || regime == Regime::kBothSpecial;
  }
  bool has_constraints() const { return !constraints.empty(); }

  // inter plus the P(empty)Q(empty) and P(ones)Q(ones) unit terms of the
  // regime, so that the expectation is sum slope*p.q + effective*r*s.
  Matrix effective_inter() const;
};

CompiledMetric compile(const MetricExpr& metric, int n);

struct ConstraintLinearForm {
  Matrix b;  // n x n, column c holds k = c + 1
  double mu = 0.0;
  double tau = 0.0;
};

ConstraintLinearForm compile_constraint(const MetricConstraint& con,
                                        std::span<const int> y, int n);
std::vector<ConstraintLinearForm> compile_constraints(
    const CompiledMetric& cm, std::span<const int> y);

}  // namespace apperf
