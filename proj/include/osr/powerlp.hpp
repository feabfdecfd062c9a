#pragma once

// DC exchange-capacity linear program for a (grid, decision) pair.
//
// Variables: the Z1-production scaling factor lambda >= 0, one phase angle
// per address, one flow per switch. The Z2-load factor mu is an affine
// function of lambda and is substituted into the balance rows, so the
// program stays linear. Absolute-value constraints expand into pairs of
// inequalities. Out-of-service lines contribute nothing.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "osr/h2mg.hpp"
#include "osr/simplex.hpp"

namespace osr {

inline constexpr double kBaseMva = 100.0;
// Decisions whose only feasible scaling is lambda <= kLambdaFloor are infeasible.
inline constexpr double kLambdaFloor = 1e-9;

// Switch state for LP assembly: closed, open, or relaxed to [0,1].
enum class SwitchState : std::int8_t { Open = 0, Closed = 1, Relaxed = -1 };

struct ExchangeLp {
  LpProblem problem;
  int lambda_var = 0;
  int theta_begin = 0;   // one per address, in address order
  int flow_begin = 0;    // one per switch
  std::vector<int> relaxed_var;  // per switch; -1 unless relaxed
  double big_m = 0.0;
  bool zero_objective = false;
};

struct LpSolution {
  double lambda = 0.0;
  double mu = 0.0;
  std::vector<double> theta;
  std::vector<double> switch_flows;
  double objective = 0.0;  // f(y;x), MW
};

struct CapacityResult {
  LpStatus status = LpStatus::Infeasible;
  double capacity_mw = 0.0;
  double capacity_pu = 0.0;
  LpSolution solution;

  bool feasible() const { return status == LpStatus::Optimal; }
};

// Sum of generator powers of the context.
double default_big_m(const Grid& grid);

// Throws ErrorCode::Invalid when Z2 base load is zero (degenerate context),
// on length mismatch, or when big_m <= 0.
ExchangeLp build_exchange_lp(const Grid& grid, const Decision& decision, double big_m);

// Relaxed variant used for bounds: relaxed switches get y in [0,1]; an
// optional cardinality row caps the total number of openings.
ExchangeLp build_relaxed_exchange_lp(const Grid& grid, std::span<const SwitchState> states, double big_m,
                                     std::optional<int> max_openings);

LpSolution extract_solution(const Grid& grid, const ExchangeLp& lp, const LpResult& result);

// capacity = -f(y;x). Unbounded is never returned for grids whose border
// lines are all out of service: the objective is identically zero and the
// capacity is reported as 0 with lambda fixed to 1 when that is feasible.
CapacityResult exchange_capacity(const Grid& grid, const Decision& decision);
CapacityResult exchange_capacity(const Grid& grid, const Decision& decision, double big_m);

}  // namespace osr
