#pragma once

#include <iosfwd>
#include <limits>
#include <vector>

#include "apperf/types.hpp"

namespace apperf::lp {

enum class Sense { kLessEqual, kGreaterEqual, kEqual };

// minimize c'x + offset  s.t.  rows * x (sense) rhs,  x >= lower.
// A lower bound of -infinity marks a free variable.
struct LpProblem {
  Vector objective;
  double objective_offset = 0.0;
  Matrix rows;
  Vector rhs;
  std::vector<Sense> senses;
  Vector lower;

  int num_vars() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(rows.rows()); }

  // Appends a row and returns its index.
  int add_row(const Eigen::RowVectorXd& coeffs, Sense sense, double rhs);
  void validate() const;
  // Plain-text dump: see README for the format.
  void dump(std::ostream& os) const;
};

LpProblem make_problem(int num_vars);

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kPivotLimit };

const char* status_name(LpStatus s);

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  Vector x;
  // Row multipliers y with c - rows' y >= 0 on the reduced costs; y <= 0 on
  // <= rows and y >= 0 on >= rows.
  Vector duals;
  double objective = 0.0;
  int pivots = 0;
};

struct SimplexOptions {
  int max_pivots = 200000;
  double tolerance = 1e-9;         // reduced costs
  double pivot_tolerance = 1e-7;   // smallest usable pivot element
  int refactor_every = 50;
  // Degenerate pivots in a row before switching to Bland's rule for the rest
  // of the phase.
  int bland_after = 30;
};

LpSolution simplex_solve(const LpProblem& lp, const SimplexOptions& opts = {});

}  // namespace apperf::lp
