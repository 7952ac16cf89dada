#include "apperf/metric_expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

namespace apperf {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct EntityName {
  const char* name;
  Entity entity;
};

constexpr EntityName kEntities[] = {
    {"tp", Entity::kTp}, {"tn", Entity::kTn}, {"fp", Entity::kFp},
    {"fn", Entity::kFn}, {"pp", Entity::kPp}, {"pn", Entity::kPn},
    {"ap", Entity::kAp}, {"an", Entity::kAn}, {"all", Entity::kAll},
};

std::optional<Entity> lookup_entity(std::string_view s) {
  for (const auto& e : kEntities)
    if (s == e.name) return e.entity;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Lexer

enum class Tok {
  kEnd, kIdent, kNumber, kLParen, kRParen, kLBrace, kRBrace, kComma,
  kAssign, kPlus, kMinus, kStar, kSlash, kCaret, kColon,
  kGe, kLe, kGt, kLt, kEq,
};

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::kEnd;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                src_[pos_] == '_'))
          advance();
        t.kind = Tok::kIdent;
        t.text = std::string(src_.substr(start, pos_ - start));
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        lex_number(t);
      } else {
        lex_punct(t);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  void lex_number(Token& t) {
    size_t start = pos_;
    auto digits = [&] {
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        advance();
    };
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      advance();
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      size_t save = pos_;
      int save_col = col_;
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
        advance();
      if (pos_ < src_.size() &&
          std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        digits();
      } else {
        pos_ = save;
        col_ = save_col;
      }
    }
    t.text = std::string(src_.substr(start, pos_ - start));
    auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(),
                               t.number);
    if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size())
      throw ParseError("malformed number '" + t.text + "'", t.line, t.column);
    t.kind = Tok::kNumber;
  }

  void lex_punct(Token& t) {
    char c = src_[pos_];
    char next = pos_ + 1 < src_.size() ? src_[pos_ + 1] : '\0';
    auto two = [&](Tok kind, const char* text) {
      t.kind = kind;
      t.text = text;
      advance();
      advance();
    };
    auto one = [&](Tok kind) {
      t.kind = kind;
      t.text = std::string(1, c);
      advance();
    };
    if (c == '>' && next == '=') return two(Tok::kGe, ">=");
    if (c == '<' && next == '=') return two(Tok::kLe, "<=");
    if (c == '=' && next == '=') return two(Tok::kEq, "==");
    switch (c) {
      case '(': return one(Tok::kLParen);
      case ')': return one(Tok::kRParen);
      case '{': return one(Tok::kLBrace);
      case '}': return one(Tok::kRBrace);
      case ',': return one(Tok::kComma);
      case '=': return one(Tok::kAssign);
      case '+': return one(Tok::kPlus);
      case '-': return one(Tok::kMinus);
      case '*': return one(Tok::kStar);
      case '/': return one(Tok::kSlash);
      case '^': return one(Tok::kCaret);
      case ':': return one(Tok::kColon);
      case '>': return one(Tok::kGt);
      case '<': return one(Tok::kLt);
      default:
        throw ParseError(std::string("unexpected character '") + c + "'",
                         line_, col_);
    }
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src), toks_(Lexer(src).run()) {}

  std::vector<MetricExpr> parse_all() {
    std::vector<MetricExpr> out;
    while (peek().kind != Tok::kEnd) out.push_back(parse_one());
    return out;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& take() { return toks_[pos_++]; }

  [[noreturn]] void fail(const std::string& msg, const Token& at) const {
    throw ParseError(msg, at.line, at.column);
  }

  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind) {
      const Token& t = peek();
      fail(std::string("expected ") + what + ", found " + describe(t), t);
    }
    return take();
  }

  static std::string describe(const Token& t) {
    if (t.kind == Tok::kEnd) return "end of input";
    return "'" + t.text + "'";
  }

  bool at_keyword(const char* word) const {
    return peek().kind == Tok::kIdent && peek().text == word;
  }

  void expect_label(const char* word) {
    if (!at_keyword(word))
      fail(std::string("expected '") + word + ":'", peek());
    take();
    expect(Tok::kColon, "':'");
  }

  double signed_number(const char* what) {
    bool neg = false;
    if (peek().kind == Tok::kMinus) {
      take();
      neg = true;
    }
    const Token& t = expect(Tok::kNumber, what);
    return neg ? -t.number : t.number;
  }

  std::optional<double> param(const std::string& name) const {
    for (const auto& [k, v] : params_)
      if (k == name) return v;
    return std::nullopt;
  }

  MetricExpr parse_one() {
    MetricExpr m;
    size_t begin = pos_;
    const Token& name = expect(Tok::kIdent, "metric name");
    m.name = name.text;
    params_.clear();
    if (peek().kind == Tok::kLParen) {
      take();
      while (true) {
        const Token& p = expect(Tok::kIdent, "parameter name");
        if (lookup_entity(p.text))
          fail("parameter '" + p.text + "' shadows an entity", p);
        if (param(p.text)) fail("duplicate parameter '" + p.text + "'", p);
        expect(Tok::kAssign, "'='");
        params_.emplace_back(p.text, signed_number("parameter value"));
        if (peek().kind == Tok::kComma) {
          take();
          continue;
        }
        expect(Tok::kRParen, "')'");
        break;
      }
    }
    m.params = params_;
    expect(Tok::kLBrace, "'{'");
    expect_label("define");
    m.body = parse_tree();

    struct PendingFlag {
      bool positive;
      int index;
      Token at;
    };
    std::vector<PendingFlag> cs_flags;
    while (peek().kind != Tok::kRBrace) {
      const Token& t = peek();
      if (t.kind != Tok::kIdent)
        fail("expected 'constraint:', a flag or '}', found " + describe(t), t);
      if (t.text == "constraint") {
        expect_label("constraint");
        MetricConstraint con;
        con.expr = parse_tree();
        const Token& cmp = peek();
        if (cmp.kind == Tok::kLe || cmp.kind == Tok::kGt ||
            cmp.kind == Tok::kLt || cmp.kind == Tok::kEq ||
            cmp.kind == Tok::kAssign)
          fail("constraint comparator must be '>=', found " + describe(cmp),
               cmp);
        expect(Tok::kGe, "'>='");
        con.tau = parse_threshold();
        m.constraints.push_back(std::move(con));
      } else if (t.text == "special_case_positive") {
        take();
        m.special_case_positive = true;
      } else if (t.text == "special_case_negative") {
        take();
        m.special_case_negative = true;
      } else if (t.text == "cs_special_case_positive" ||
                 t.text == "cs_special_case_negative") {
        Token at = take();
        expect(Tok::kLParen, "'('");
        const Token& idx = expect(Tok::kNumber, "constraint index");
        if (idx.number != std::floor(idx.number) || idx.number < 1)
          fail("constraint index must be a positive integer", idx);
        int index = static_cast<int>(idx.number);
        expect(Tok::kRParen, "')'");
        cs_flags.push_back({at.text == "cs_special_case_positive", index, at});
      } else {
        fail("unknown directive '" + t.text + "'", t);
      }
    }
    const Token& close = take();
    for (const auto& f : cs_flags) {
      if (f.index > static_cast<int>(m.constraints.size()))
        fail("constraint index " + std::to_string(f.index) + " out of range",
             f.at);
      auto& con = m.constraints[f.index - 1];
      (f.positive ? con.special_positive : con.special_negative) = true;
    }
    // Source slice covering this definition, for serialization.
    size_t from = offset_of(toks_[begin]);
    size_t to = offset_of(close) + 1;
    m.source = std::string(src_.substr(from, to - from));
    return m;
  }

  size_t offset_of(const Token& t) const {
    size_t off = 0;
    int line = 1;
    while (line < t.line && off < src_.size()) {
      if (src_[off] == '\n') ++line;
      ++off;
    }
    return off + static_cast<size_t>(t.column - 1);
  }

  double parse_threshold() {
    if (peek().kind == Tok::kIdent) {
      const Token& t = take();
      auto v = param(t.text);
      if (!v) fail("unknown parameter '" + t.text + "'", t);
      return *v;
    }
    return signed_number("threshold");
  }

  int parse_expression() {
    int lhs = parse_term();
    while (peek().kind == Tok::kPlus || peek().kind == Tok::kMinus) {
      Expr::Op op = take().kind == Tok::kPlus ? Expr::Op::kAdd : Expr::Op::kSub;
      int rhs = parse_term();
      lhs = binary(op, lhs, rhs);
    }
    return lhs;
  }

  Expr parse_tree() {
    expr_ = Expr();
    parse_expression();
    return std::move(expr_);
  }

  int parse_term() {
    int lhs = parse_factor();
    while (peek().kind == Tok::kStar || peek().kind == Tok::kSlash) {
      Expr::Op op = take().kind == Tok::kStar ? Expr::Op::kMul : Expr::Op::kDiv;
      int rhs = parse_factor();
      lhs = binary(op, lhs, rhs);
    }
    return lhs;
  }

  int parse_factor() {
    int base = parse_atom();
    if (peek().kind == Tok::kCaret) {
      take();
      bool neg = false;
      if (peek().kind == Tok::kMinus) {
        take();
        neg = true;
      }
      const Token& e = peek();
      if (e.kind != Tok::kNumber || e.number != std::floor(e.number) ||
          e.text.find_first_of(".eE") != std::string::npos)
        fail("exponent must be an integer literal", e);
      take();
      Expr::Node n;
      n.op = Expr::Op::kPow;
      n.exponent = static_cast<int>(neg ? -e.number : e.number);
      n.lhs = base;
      return expr_.add(n);
    }
    return base;
  }

  int parse_atom() {
    const Token& t = peek();
    Expr::Node n;
    switch (t.kind) {
      case Tok::kNumber:
        take();
        n.op = Expr::Op::kNumber;
        n.number = t.number;
        return expr_.add(n);
      case Tok::kMinus:
        take();
        n.op = Expr::Op::kNeg;
        n.lhs = parse_factor();
        return expr_.add(n);
      case Tok::kLParen: {
        take();
        int inner = parse_expression();
        expect(Tok::kRParen, "')'");
        return inner;
      }
      case Tok::kIdent: {
        take();
        if (t.text == "sqrt") {
          expect(Tok::kLParen, "'(' after sqrt");
          n.op = Expr::Op::kSqrt;
          n.lhs = parse_expression();
          expect(Tok::kRParen, "')'");
          return expr_.add(n);
        }
        if (auto e = lookup_entity(t.text)) {
          n.op = Expr::Op::kEntity;
          n.entity = *e;
          return expr_.add(n);
        }
        if (auto v = param(t.text)) {
          n.op = Expr::Op::kNumber;
          n.number = *v;
          return expr_.add(n);
        }
        fail("unknown entity '" + t.text + "'", t);
      }
      default:
        fail("expected an expression, found " + describe(t), t);
    }
  }

  int binary(Expr::Op op, int lhs, int rhs) {
    Expr::Node n;
    n.op = op;
    n.lhs = lhs;
    n.rhs = rhs;
    return expr_.add(n);
  }

  std::string_view src_;
  std::vector<Token> toks_;
  size_t pos_ = 0;
  std::vector<std::pair<std::string, double>> params_;
  Expr expr_;
};

}  // namespace

// ---------------------------------------------------------------------------

const char* entity_name(Entity e) {
  for (const auto& x : kEntities)
    if (x.entity == e) return x.name;
  return "?";
}

ConfusionCounts ConfusionCounts::from_sums(long tp, long k, long l, long n) {
  ConfusionCounts c;
  c.tp = tp;
  c.fp = k - tp;
  c.fn = l - tp;
  c.tn = n - k - l + tp;
  c.pp = k;
  c.pn = n - k;
  c.ap = l;
  c.an = n - l;
  c.all = n;
  return c;
}

ConfusionCounts ConfusionCounts::from_labels(std::span<const int> yhat,
                                             std::span<const int> y) {
  if (yhat.size() != y.size() || y.empty())
    throw MetricError("label vectors must be non-empty and of equal length");
  long tp = 0, k = 0, l = 0;
  for (size_t i = 0; i < y.size(); ++i) {
    k += yhat[i] != 0;
    l += y[i] != 0;
    tp += (yhat[i] != 0) && (y[i] != 0);
  }
  return from_sums(tp, k, l, static_cast<long>(y.size()));
}

long ConfusionCounts::get(Entity e) const {
  switch (e) {
    case Entity::kTp: return tp;
    case Entity::kTn: return tn;
    case Entity::kFp: return fp;
    case Entity::kFn: return fn;
    case Entity::kPp: return pp;
    case Entity::kPn: return pn;
    case Entity::kAp: return ap;
    case Entity::kAn: return an;
    case Entity::kAll: return all;
  }
  return 0;
}

bool ConfusionCounts::consistent() const {
  return tp >= 0 && tn >= 0 && fp >= 0 && fn >= 0 && tp + fn == ap &&
         tp + fp == pp && tn + fp == an && tn + fn == pn && pp + pn == all &&
         ap + an == all && tp + tn + fp + fn == all;
}

int Expr::add(Node node) {
  nodes_.push_back(node);
  return static_cast<int>(nodes_.size()) - 1;
}

Expr Expr::constant(double v) {
  Expr e;
  Node n;
  n.op = Op::kNumber;
  n.number = v;
  e.add(n);
  return e;
}

double Expr::evaluate(const ConfusionCounts& c) const {
  if (nodes_.empty()) return kNan;
  return eval_node(root(), c);
}

double Expr::eval_node(int i, const ConfusionCounts& c) const {
  const Node& n = nodes_[i];
  switch (n.op) {
    case Op::kNumber: return n.number;
    case Op::kEntity: return static_cast<double>(c.get(n.entity));
    case Op::kAdd: return eval_node(n.lhs, c) + eval_node(n.rhs, c);
    case Op::kSub: return eval_node(n.lhs, c) - eval_node(n.rhs, c);
    case Op::kMul: return eval_node(n.lhs, c) * eval_node(n.rhs, c);
    case Op::kDiv: {
      double d = eval_node(n.rhs, c);
      if (d == 0.0) return kNan;
      return eval_node(n.lhs, c) / d;
    }
    case Op::kPow: {
      double b = eval_node(n.lhs, c);
      if (b == 0.0 && n.exponent < 0) return kNan;
      return std::pow(b, n.exponent);
    }
    case Op::kSqrt: {
      double v = eval_node(n.lhs, c);
      return v < 0.0 ? kNan : std::sqrt(v);
    }
    case Op::kNeg: return -eval_node(n.lhs, c);
  }
  return kNan;
}

std::string Expr::to_string() const {
  if (nodes_.empty()) return "";
  return print_node(root());
}

std::string Expr::print_node(int i) const {
  const Node& n = nodes_[i];
  auto wrap = [&](int j) {
    Op op = nodes_[j].op;
    bool leaf = op == Op::kNumber || op == Op::kEntity || op == Op::kSqrt;
    return leaf ? print_node(j) : "(" + print_node(j) + ")";
  };
  switch (n.op) {
    case Op::kNumber: {
      std::ostringstream os;
      os.precision(17);
      os << n.number;
      return os.str();
    }
    case Op::kEntity: return entity_name(n.entity);
    case Op::kAdd: return print_node(n.lhs) + " + " + print_node(n.rhs);
    case Op::kSub: return print_node(n.lhs) + " - " + wrap(n.rhs);
    case Op::kMul: return wrap(n.lhs) + " * " + wrap(n.rhs);
    case Op::kDiv: return wrap(n.lhs) + " / " + wrap(n.rhs);
    case Op::kPow: return wrap(n.lhs) + "^" + std::to_string(n.exponent);
    case Op::kSqrt: return "sqrt(" + print_node(n.lhs) + ")";
    case Op::kNeg: return "-" + wrap(n.lhs);
  }
  return "";
}

std::vector<MetricExpr> parse_metrics(std::string_view text) {
  return Parser(text).parse_all();
}

MetricExpr parse_metric(std::string_view text) {
  auto all = parse_metrics(text);
  if (all.size() != 1)
    throw ParseError("expected exactly one metric definition, found " +
                         std::to_string(all.size()),
                     1, 1);
  return std::move(all.front());
}

std::vector<MetricExpr> load_metric_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open metric file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_metrics(ss.str());
}

// ---------------------------------------------------------------------------
// Evaluation

double special_case_value(bool positive, bool negative, long k, long l,
                          long n) {
  if (positive && (k == 0 || l == 0)) return (k == 0 && l == 0) ? 1.0 : 0.0;
  if (negative && (k == n || l == n)) return (k == n && l == n) ? 1.0 : 0.0;
  return kNan;
}

double evaluate_counts(const Expr& expr, bool positive, bool negative,
                       const ConfusionCounts& c) {
  double s = special_case_value(positive, negative, c.pp, c.ap, c.all);
  if (!std::isnan(s)) return s;
  double v = expr.evaluate(c);
  if (!std::isfinite(v))
    throw MetricError("metric undefined at (k=" + std::to_string(c.pp) +
                          ", l=" + std::to_string(c.ap) +
                          "); declare a special case",
                      static_cast<int>(c.pp), static_cast<int>(c.ap));
  return v;
}

double evaluate_discrete(const MetricExpr& metric, std::span<const int> yhat,
                         std::span<const int> y) {
  return evaluate_counts(metric.body, metric.special_case_positive,
                         metric.special_case_negative,
                         ConfusionCounts::from_labels(yhat, y));
}

double evaluate_constraint(const MetricConstraint& con,
                           std::span<const int> yhat, std::span<const int> y) {
  return evaluate_counts(con.expr, con.special_positive, con.special_negative,
                         ConfusionCounts::from_labels(yhat, y));
}

// ---------------------------------------------------------------------------
// Compilation

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::kNoSpecial: return "NoSpecial";
    case Regime::kPosSpecial: return "PosSpecial";
    case Regime::kNegSpecial: return "NegSpecial";
    case Regime::kBothSpecial: return "BothSpecial";
  }
  return "?";
}

namespace {

constexpr double kAffineTol = 1e-9;

struct CellFit {
  double slope = 0.0;
  double inter = 0.0;
  bool defined = true;
};

// Affine fit in TP of one (k, l) cell. Throws on non-affine bodies; leaves
// undefined cells to the caller.
CellFit fit_cell(const Expr& expr, bool positive, bool negative, long k,
                 long l, long n, const char* what) {
  CellFit fit;
  double s = special_case_value(positive, negative, k, l, n);
  if (!std::isnan(s)) {
    fit.inter = s;
    return fit;
  }
  long tmin = std::max(0L, k + l - n);
  long tmax = std::min(k, l);
  std::vector<double> v;
  v.reserve(static_cast<size_t>(tmax - tmin + 1));
  double scale = 1.0;
  for (long t = tmin; t <= tmax; ++t) {
    double x = expr.evaluate(ConfusionCounts::from_sums(t, k, l, n));
    if (!std::isfinite(x)) {
      fit.defined = false;
      return fit;
    }
    scale = std::max(scale, std::abs(x));
    v.push_back(x);
  }
  if (v.size() == 1) {
    fit.inter = v[0];
    return fit;
  }
  for (size_t i = 1; i + 1 < v.size(); ++i) {
    double d2 = v[i + 1] - 2.0 * v[i] + v[i - 1];
    if (std::abs(d2) > kAffineTol * scale)
      throw MetricError(std::string(what) + " is not affine in tp at (k=" +
                            std::to_string(k) + ", l=" + std::to_string(l) +
                            ")",
                        static_cast<int>(k), static_cast<int>(l));
  }
  fit.slope = (v.back() - v.front()) / static_cast<double>(tmax - tmin);
  fit.inter = v.front() - fit.slope * static_cast<double>(tmin);
  return fit;
}

}  // namespace

Matrix CompiledMetric::effective_inter() const {
  Matrix m = inter;
  if (positive()) m(0, 0) += 1.0;
  if (negative()) m(n, n) += 1.0;
  return m;
}

CompiledMetric compile(const MetricExpr& metric, int n) {
  if (n < 1) throw MetricError("batch size must be at least 1");
  CompiledMetric cm;
  cm.n = n;
  bool pos = metric.special_case_positive;
  bool neg = metric.special_case_negative;
  cm.regime = pos ? (neg ? Regime::kBothSpecial : Regime::kPosSpecial)
                  : (neg ? Regime::kNegSpecial : Regime::kNoSpecial);
  cm.slope = Matrix::Zero(n + 1, n + 1);
  cm.inter = Matrix::Zero(n + 1, n + 1);
  for (int k = 0; k <= n; ++k) {
    for (int l = 0; l <= n; ++l) {
      CellFit f = fit_cell(metric.body, pos, neg, k, l, n, "metric");
      if (!f.defined)
        throw MetricError("metric '" + metric.name + "' undefined at (k=" +
                              std::to_string(k) + ", l=" + std::to_string(l) +
                              "); declare a special case",
                          k, l);
      cm.slope(k, l) = f.slope;
      cm.inter(k, l) = f.inter;
    }
  }
  // The unit corner values travel through the regime terms instead.
  if (pos) cm.inter(0, 0) = 0.0;
  if (neg) cm.inter(n, n) = 0.0;

  for (size_t i = 0; i < metric.constraints.size(); ++i) {
    const auto& con = metric.constraints[i];
    std::string what = "constraint " + std::to_string(i + 1);
    for (int k = 0; k <= n; ++k)
      for (int l = 0; l <= n; ++l)
        fit_cell(con.expr, con.special_positive, con.special_negative, k, l, n,
                 what.c_str());
  }
  cm.constraints = metric.constraints;
  return cm;
}

ConstraintLinearForm compile_constraint(const MetricConstraint& con,
                                        std::span<const int> y, int n) {
  if (static_cast<int>(y.size()) != n || n < 1)
    throw MetricError("label vector length does not match batch size");
  long L = 0;
  for (int v : y) L += v != 0;
  ConstraintLinearForm form;
  form.tau = con.tau;
  form.b = Matrix::Zero(n, n);
  std::vector<CellFit> col(n + 1);
  for (int k = 0; k <= n; ++k) {
    col[k] = fit_cell(con.expr, con.special_positive, con.special_negative, k,
                      L, n, "constraint");
    if (!col[k].defined)
      throw MetricError("constraint undefined at (k=" + std::to_string(k) +
                            ", l=" + std::to_string(L) +
                            "); declare a cs special case",
                        k, static_cast<int>(L));
  }
  form.mu = col[0].inter;
  for (int k = 1; k <= n; ++k) {
    double shift = (col[k].inter - col[0].inter) / k;
    for (int j = 0; j < n; ++j)
      form.b(j, k - 1) = col[k].slope * (y[j] != 0) + shift;
  }
  return form;
}

std::vector<ConstraintLinearForm> compile_constraints(
    const CompiledMetric& cm, std::span<const int> y) {
  std::vector<ConstraintLinearForm> out;
  out.reserve(cm.constraints.size());
  for (const auto& con : cm.constraints)
    out.push_back(compile_constraint(con, y, cm.n));
  return out;
}

}  // namespace apperf
