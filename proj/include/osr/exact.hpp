#pragma once

// Exact baselines over switch decisions: exhaustive enumeration (oracle)
// and a best-first branch-and-bound on the big-M relaxation.

#include <cstddef>
#include <span>

#include "osr/h2mg.hpp"
#include "osr/powerlp.hpp"

namespace osr {

struct SolverConfig {
  int max_openings = 6;
  double gap = 0.01;          // relative
  double time_limit_s = 600;  // kInf for none
};

struct ExactResult {
  Decision decision;
  double capacity_mw = 0.0;
  std::size_t evaluated = 0;  // distinct bus partitions solved
};

struct BnbResult {
  Decision decision;
  double capacity_mw = 0.0;
  double bound_mw = 0.0;
  double gap_achieved = 0.0;
  bool timed_out = false;
  std::size_t nodes = 0;
};

inline constexpr std::size_t kMaxEnumerationSwitches = 24;

// Closes every open switch whose two ports already share a bus. The result
// has the same bus partition, so the same exchange capacity.
Decision closure(const Grid& grid, const Decision& decision);

// Exchange capacity evaluated on closure(decision); identical partitions
// therefore produce bit-identical values.
CapacityResult canonical_capacity(const Grid& grid, const Decision& decision);

// Best decision with at most `max_openings` open switches. Candidates are
// visited in descending lexicographic order (all-closed first) and deduplicated
// by bus partition; the first maximum wins ties.
ExactResult exhaustive_best(const Grid& grid, int max_openings);

BnbResult branch_and_bound(const Grid& grid, const SolverConfig& config);

// Upper bound on the capacity of every completion of a partial assignment.
// Returns -inf when the relaxation is infeasible.
double relaxation_bound(const Grid& grid, std::span<const SwitchState> states, int max_openings);

}  // namespace osr
