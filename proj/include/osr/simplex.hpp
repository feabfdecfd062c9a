#pragma once

// Dense two-phase primal simplex over general bounded variables.

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace osr {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { LessEqual, Equal, GreaterEqual };

struct LpTerm {
  int var = 0;
  double coef = 0.0;
};

struct LpRow {
  std::string name;
  std::vector<LpTerm> terms;
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;
};

// minimize objective . x  s.t.  rows,  lower <= x <= upper
struct LpProblem {
  std::vector<std::string> var_names;
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<LpRow> rows;

  int num_vars() const { return static_cast<int>(objective.size()); }
  int add_var(std::string name, double cost, double lo, double hi);
  void add_row(std::string name, std::vector<LpTerm> terms, RowSense sense, double rhs);
  // Throws ErrorCode::Invalid on inconsistent dimensions or non-finite coefficients.
  void check() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
  int iterations = 0;
};

struct SimplexOptions {
  double feasibility_tol = 1e-7;
  double optimality_tol = 1e-8;
  double pivot_tol = 1e-9;
  int max_iterations = 0;  // 0 = derived from problem size
  int degenerate_before_bland = 40;
};

// Exceeding the iteration cap throws ErrorCode::Numerical.
LpResult solve_lp(const LpProblem& problem, const SimplexOptions& options = {});

// Largest absolute constraint or bound violation of `x`.
double max_violation(const LpProblem& problem, const std::vector<double>& x);

// CPLEX-style LP text layout.
void write_lp_text(const LpProblem& problem, std::ostream& out);

}  // namespace osr
