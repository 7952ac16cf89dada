#include "apperf/simplex.hpp"

#include <cmath>
#include <ostream>

#include "apperf/error.hpp"

namespace apperf::lp {

namespace {

// Column layout of the standard form  A x = b, x >= 0, b >= 0.
struct StandardForm {
  Matrix a;
  Vector b;
  Vector cost;
  int num_structural = 0;  // columns before slacks
  int first_artificial = 0;
  std::vector<int> var_pos;  // original var -> column (+ part if free)
  std::vector<int> var_neg;  // -1 unless free
  std::vector<bool> flipped;
  std::vector<int> initial_basis;
  double offset = 0.0;
};

StandardForm standardize(const LpProblem& lp) {
  const int m = lp.num_rows();
  const int nv = lp.num_vars();
  StandardForm sf;
  sf.var_pos.assign(nv, -1);
  sf.var_neg.assign(nv, -1);
  int col = 0;
  for (int j = 0; j < nv; ++j) {
    sf.var_pos[j] = col++;
    if (std::isinf(lp.lower(j))) sf.var_neg[j] = col++;
  }
  sf.num_structural = col;
  Vector rhs = lp.rhs;
  sf.offset = lp.objective_offset;
  for (int j = 0; j < nv; ++j) {
    if (!std::isinf(lp.lower(j)) && lp.lower(j) != 0.0) {
      rhs -= lp.rows.col(j) * lp.lower(j);
      sf.offset += lp.objective(j) * lp.lower(j);
    }
  }

  // Artificials only where no slack can start in the basis.
  sf.flipped.assign(m, false);
  std::vector<int> slack_col(m, -1);
  std::vector<double> slack_sign(m, 0.0);
  int next = sf.num_structural;
  for (int r = 0; r < m; ++r) {
    if (lp.senses[r] == Sense::kEqual) continue;
    slack_col[r] = next++;
    slack_sign[r] = lp.senses[r] == Sense::kLessEqual ? 1.0 : -1.0;
  }
  sf.first_artificial = next;
  int artificials = 0;
  for (int r = 0; r < m; ++r) {
    sf.flipped[r] = rhs(r) < 0.0;
    double sign = sf.flipped[r] ? -1.0 : 1.0;
    if (slack_col[r] < 0 || slack_sign[r] * sign < 0.0) ++artificials;
  }
  const int total = sf.first_artificial + artificials;
  sf.a = Matrix::Zero(m, total);
  sf.b.resize(m);
  sf.cost = Vector::Zero(total);
  sf.initial_basis.assign(m, -1);
  int art = sf.first_artificial;
  for (int r = 0; r < m; ++r) {
    double sign = sf.flipped[r] ? -1.0 : 1.0;
    for (int j = 0; j < nv; ++j) {
      double v = sign * lp.rows(r, j);
      sf.a(r, sf.var_pos[j]) = v;
      if (sf.var_neg[j] >= 0) sf.a(r, sf.var_neg[j]) = -v;
    }
    sf.b(r) = sign * rhs(r);
    if (slack_col[r] >= 0) {
      double s = sign * slack_sign[r];
      sf.a(r, slack_col[r]) = s;
      if (s > 0.0) sf.initial_basis[r] = slack_col[r];
    }
    if (sf.initial_basis[r] < 0) {
      sf.a(r, art) = 1.0;
      sf.initial_basis[r] = art++;
    }
  }
  for (int j = 0; j < nv; ++j) {
    sf.cost(sf.var_pos[j]) = lp.objective(j);
    if (sf.var_neg[j] >= 0) sf.cost(sf.var_neg[j]) = -lp.objective(j);
  }
  return sf;
}

class Engine {
 public:
  Engine(const StandardForm& sf, const SimplexOptions& opts)
      : sf_(sf), opts_(opts), m_(static_cast<int>(sf.a.rows())),
        total_(static_cast<int>(sf.a.cols())) {
    basis_ = sf.initial_basis;
    in_basis_.assign(total_, -1);
    for (int r = 0; r < m_; ++r) in_basis_[basis_[r]] = r;
    refactor();
  }

  // Runs primal simplex on the given costs. Columns at or beyond
  // `entering_limit` may not enter the basis.
  LpStatus run(const Vector& cost, int entering_limit) {
    int degenerate_run = 0;
    int since_refactor = 0;
    // Once on, Bland's rule stays on for the phase. Dropping back to Dantzig
    // after a tiny nondegenerate step can cycle in floating point.
    bool bland = false;
    Vector y(m_), d(total_), alpha(m_), cb(m_);
    while (true) {
      if (pivots_ >= opts_.max_pivots) return LpStatus::kPivotLimit;
      for (int r = 0; r < m_; ++r) cb(r) = cost(basis_[r]);
      y.noalias() = binv_.transpose() * cb;
      d.noalias() = cost - sf_.a.transpose() * y;
      bland = bland || degenerate_run >= opts_.bland_after;
      int q = -1;
      double best = -opts_.tolerance;
      for (int j = 0; j < entering_limit; ++j) {
        if (in_basis_[j] >= 0 || d(j) >= best) continue;
        q = j;
        if (bland) break;
        best = d(j);
      }
      if (q < 0) return LpStatus::kOptimal;

      alpha.noalias() = binv_ * sf_.a.col(q);
      int leave = -1;
      double ratio = 0.0;
      for (int r = 0; r < m_; ++r) {
        if (alpha(r) <= opts_.pivot_tolerance) continue;
        double t = std::max(xb_(r), 0.0) / alpha(r);
        bool take = leave < 0 || t < ratio - 1e-12;
        if (!take && t <= ratio + 1e-12) {
          take = bland ? basis_[r] < basis_[leave] : alpha(r) > alpha(leave);
        }
        if (take) {
          leave = r;
          ratio = t;
        }
      }
      if (leave < 0) return LpStatus::kUnbounded;

      degenerate_run = ratio <= opts_.tolerance ? degenerate_run + 1 : 0;
      pivot(leave, q, alpha, ratio);
      if (++since_refactor >= opts_.refactor_every) {
        refactor();
        since_refactor = 0;
      }
    }
  }

  // Swaps artificial basics for structural columns where possible.
  void drive_out_artificials() {
    Vector alpha(m_);
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] < sf_.first_artificial) continue;
      Eigen::RowVectorXd row = binv_.row(r) * sf_.a;
      int best = -1;
      for (int j = 0; j < sf_.first_artificial; ++j) {
        if (in_basis_[j] >= 0 || std::abs(row(j)) <= 1e-9) continue;
        if (best < 0 || std::abs(row(j)) > std::abs(row(best))) best = j;
      }
      if (best < 0) continue;  // redundant row
      alpha.noalias() = binv_ * sf_.a.col(best);
      pivot(r, best, alpha, xb_(r) / alpha(r));
    }
    refactor();
  }

  Vector duals(const Vector& cost) const {
    Vector cb(m_);
    for (int r = 0; r < m_; ++r) cb(r) = cost(basis_[r]);
    return binv_.transpose() * cb;
  }

  Vector primal() const {
    Vector x = Vector::Zero(total_);
    for (int r = 0; r < m_; ++r) x(basis_[r]) = std::max(xb_(r), 0.0);
    return x;
  }

  int pivots() const { return pivots_; }

 private:
  void pivot(int r, int q, const Vector& alpha, double step) {
    xb_ -= step * alpha;
    xb_(r) = step;
    double piv = alpha(r);
    binv_.row(r) /= piv;
    for (int i = 0; i < m_; ++i) {
      if (i == r || alpha(i) == 0.0) continue;
      binv_.row(i) -= alpha(i) * binv_.row(r);
    }
    in_basis_[basis_[r]] = -1;
    basis_[r] = q;
    in_basis_[q] = r;
    ++pivots_;
  }

  void refactor() {
    Matrix bm(m_, m_);
    for (int r = 0; r < m_; ++r) bm.col(r) = sf_.a.col(basis_[r]);
    Eigen::PartialPivLU<Matrix> lu(bm);
    binv_ = lu.inverse();
    xb_ = binv_ * sf_.b;
    for (int r = 0; r < m_; ++r)
      if (xb_(r) < 0.0 && xb_(r) > -1e-9) xb_(r) = 0.0;
  }

  const StandardForm& sf_;
  SimplexOptions opts_;
  int m_;
  int total_;
  std::vector<int> basis_;
  std::vector<int> in_basis_;
  Matrix binv_;
  Vector xb_;
  int pivots_ = 0;
};

}  // namespace

int LpProblem::add_row(const Eigen::RowVectorXd& coeffs, Sense sense,
                       double value) {
  const int r = num_rows();
  rows.conservativeResize(r + 1, num_vars());
  rows.row(r) = coeffs;
  rhs.conservativeResize(r + 1);
  rhs(r) = value;
  senses.push_back(sense);
  return r;
}

void LpProblem::validate() const {
  const int nv = num_vars();
  if (rows.cols() != nv || lower.size() != nv || rhs.size() != num_rows() ||
      static_cast<int>(senses.size()) != num_rows())
    throw SolverError("LP dimensions are inconsistent");
  if (!objective.allFinite() || !rows.allFinite() || !rhs.allFinite())
    throw SolverError("LP data must be finite");
  for (int j = 0; j < nv; ++j)
    if (std::isnan(lower(j)) || lower(j) == std::numeric_limits<double>::infinity())
      throw SolverError("invalid variable lower bound");
}

void LpProblem::dump(std::ostream& os) const {
  auto num = [&](double v) -> std::ostream& {
    if (std::isinf(v)) return os << (v < 0 ? "-inf" : "inf");
    return os << v;
  };
  os.precision(17);
  os << "vars " << num_vars() << " rows " << num_rows() << "\n";
  os << "obj ";
  num(objective_offset);
  for (int j = 0; j < num_vars(); ++j) {
    os << " ";
    num(objective(j));
  }
  os << "\n";
  os << "lower";
  for (int j = 0; j < num_vars(); ++j) {
    os << " ";
    num(lower(j));
  }
  os << "\n";
  for (int r = 0; r < num_rows(); ++r) {
    const char* s = senses[r] == Sense::kLessEqual      ? "L"
                    : senses[r] == Sense::kGreaterEqual ? "G"
                                                        : "E";
    os << "row " << s << " ";
    num(rhs(r));
    for (int j = 0; j < num_vars(); ++j) {
      os << " ";
      num(rows(r, j));
    }
    os << "\n";
  }
}

LpProblem make_problem(int num_vars) {
  LpProblem lp;
  lp.objective = Vector::Zero(num_vars);
  lp.rows.resize(0, num_vars);
  lp.rhs.resize(0);
  lp.lower = Vector::Zero(num_vars);
  return lp;
}

const char* status_name(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kPivotLimit: return "pivot limit exceeded";
  }
  return "?";
}

LpSolution simplex_solve(const LpProblem& lp, const SimplexOptions& opts) {
  lp.validate();
  StandardForm sf = standardize(lp);
  const int total = static_cast<int>(sf.a.cols());
  const int m = static_cast<int>(sf.a.rows());
  Engine engine(sf, opts);
  LpSolution sol;

  if (sf.first_artificial < total) {
    Vector phase1 = Vector::Zero(total);
    phase1.tail(total - sf.first_artificial).setOnes();
    LpStatus st = engine.run(phase1, total);
    if (st == LpStatus::kPivotLimit) {
      sol.status = st;
      sol.pivots = engine.pivots();
      return sol;
    }
    Vector x = engine.primal();
    double infeas = x.tail(total - sf.first_artificial).sum();
    double scale = 1.0 + sf.b.lpNorm<Eigen::Infinity>();
    if (infeas > 1e-8 * scale) {
      sol.status = LpStatus::kInfeasible;
      sol.pivots = engine.pivots();
      return sol;
    }
    engine.drive_out_artificials();
  }

  sol.status = engine.run(sf.cost, sf.first_artificial);
  sol.pivots = engine.pivots();
  if (sol.status != LpStatus::kOptimal) return sol;

  Vector xs = engine.primal();
  const int nv = lp.num_vars();
  sol.x.resize(nv);
  for (int j = 0; j < nv; ++j) {
    double v = xs(sf.var_pos[j]);
    if (sf.var_neg[j] >= 0) v -= xs(sf.var_neg[j]);
    else v += lp.lower(j);
    sol.x(j) = v;
  }
  sol.objective = lp.objective.dot(sol.x) + lp.objective_offset;
  Vector y = engine.duals(sf.cost);
  sol.duals.resize(m);
  for (int r = 0; r < m; ++r) sol.duals(r) = sf.flipped[r] ? -y(r) : y(r);
  return sol;
}

}  // namespace apperf::lp
