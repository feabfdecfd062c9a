#include "osr/exact.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <set>

#include "osr/error.hpp"

namespace osr {

Decision closure(const Grid& grid, const Decision& decision) {
  const auto part = bus_partition(grid, decision);
  Decision out = decision;
  for (std::size_t e = 0; e < grid.switches.size(); ++e) {
    const auto a = grid.address_index(grid.switches[e].port_from);
    const auto b = grid.address_index(grid.switches[e].port_to);
    if (part.bus_of[a] == part.bus_of[b]) out.states[e] = 1;
  }
  return out;
}

namespace {

// Capacities of electrically equivalent decisions differ by rounding only.
bool improves(double candidate, double incumbent) {
  return candidate > incumbent + 1e-9 * std::max(1.0, std::abs(incumbent));
}

bool ties(double candidate, double incumbent) {
  return !improves(candidate, incumbent) && !improves(incumbent, candidate);
}

}  // namespace

CapacityResult canonical_capacity(const Grid& grid, const Decision& decision) {
  return exchange_capacity(grid, closure(grid, decision));
}

ExactResult exhaustive_best(const Grid& grid, int max_openings) {
  const std::size_t n = grid.switches.size();
  if (n > kMaxEnumerationSwitches) {
    fail(ErrorCode::Invalid, "exhaustive_best: " + std::to_string(n) + " switches exceeds the enumeration cap of " +
                                 std::to_string(kMaxEnumerationSwitches));
  }
  if (max_openings < 0) fail(ErrorCode::Invalid, "exhaustive_best: max_openings must be >= 0");

  ExactResult best;
  bool found = false;
  std::set<std::vector<int>> seen;
  Decision cur = Decision::all_closed(n);

  // Depth-first, closed before open: descending lexicographic order.
  auto visit = [&](auto&& self, std::size_t i, int zeros) -> void {
    if (i == n) {
      auto part = bus_partition(grid, cur);
      if (!seen.insert(std::move(part.bus_of)).second) return;
      ++best.evaluated;
      const auto r = canonical_capacity(grid, cur);
      if (!r.feasible()) return;
      if (!found || improves(r.capacity_mw, best.capacity_mw)) {
        best.decision = cur;
        best.capacity_mw = r.capacity_mw;
        found = true;
      }
      return;
    }
    cur.states[i] = 1;
    self(self, i + 1, zeros);
    if (zeros < max_openings) {
      cur.states[i] = 0;
      self(self, i + 1, zeros + 1);
      cur.states[i] = 1;
    }
  };
  visit(visit, 0, 0);
  if (!found) fail(ErrorCode::Infeasible, "exhaustive_best: every decision is infeasible");
  return best;
}

double relaxation_bound(const Grid& grid, std::span<const SwitchState> states, int max_openings) {
  const auto lp = build_relaxed_exchange_lp(grid, states, default_big_m(grid), max_openings);
  const auto r = solve_lp(lp.problem);
  if (r.status == LpStatus::Infeasible) return -kInf;
  if (r.status == LpStatus::Unbounded) return kInf;
  return -r.objective;
}

namespace {

struct Node {
  std::vector<SwitchState> states;
  std::size_t depth = 0;
  int zeros = 0;
  double bound = 0.0;
  std::size_t seq = 0;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.seq > b.seq;
  }
};

}  // namespace

BnbResult branch_and_bound(const Grid& grid, const SolverConfig& cfg) {
  if (cfg.max_openings < 0) fail(ErrorCode::Config, "branch_and_bound: max_openings must be >= 0");
  if (!(cfg.gap >= 0.0)) fail(ErrorCode::Config, "branch_and_bound: gap must be >= 0");
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  const std::size_t n = grid.switches.size();

  BnbResult res;
  bool have_inc = false;
  double inc = -kInf;
  Decision inc_dec = Decision::all_closed(n);
  {
    const auto r = exchange_capacity(grid, inc_dec);
    if (r.feasible()) {
      inc = r.capacity_mw;
      have_inc = true;
    }
  }
  double pruned_bound = -kInf;

  auto prune_level = [&] {
    if (!have_inc) return -kInf;
    return inc + cfg.gap * std::abs(inc) - 1e-9 * std::max(1.0, std::abs(inc));
  };
  auto offer_leaf = [&](const Decision& d) {
    const auto r = canonical_capacity(grid, d);
    if (!r.feasible()) return;
    if (!have_inc || improves(r.capacity_mw, inc) || (ties(r.capacity_mw, inc) && d > inc_dec)) {
      inc = r.capacity_mw;
      inc_dec = d;
      have_inc = true;
    }
  };
  auto leaf_decision = [&](const Node& nd) {
    Decision d = Decision::all_closed(n);
    for (std::size_t i = 0; i < nd.depth; ++i) d.states[i] = nd.states[i] == SwitchState::Open ? 0 : 1;
    return d;
  };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  std::size_t seq = 0;
  if (cfg.time_limit_s <= 0.0) {
    res.timed_out = true;
  } else if (cfg.max_openings == 0 || n == 0) {
    // Single leaf: the all-closed decision already evaluated above.
  } else {
    Node root{std::vector<SwitchState>(n, SwitchState::Relaxed), 0, 0, 0.0, seq++};
    root.bound = relaxation_bound(grid, root.states, cfg.max_openings);
    if (root.bound > -kInf) open.push(std::move(root));
  }

  while (!open.empty()) {
    if (elapsed() >= cfg.time_limit_s) {
      res.timed_out = true;
      break;
    }
    Node nd = open.top();
    open.pop();
    ++res.nodes;
    if (nd.bound <= prune_level()) {
      pruned_bound = std::max(pruned_bound, nd.bound);
      continue;
    }
    if (nd.depth == n || nd.zeros == cfg.max_openings) {
      offer_leaf(leaf_decision(nd));
      continue;
    }
    for (auto state : {SwitchState::Closed, SwitchState::Open}) {
      Node child{nd.states, nd.depth + 1, nd.zeros + (state == SwitchState::Open ? 1 : 0), 0.0, seq++};
      child.states[nd.depth] = state;
      if (child.zeros == cfg.max_openings) {
        for (std::size_t i = child.depth; i < n; ++i) child.states[i] = SwitchState::Closed;
        child.depth = n;
      }
      if (child.depth == n) {
        offer_leaf(leaf_decision(child));
        continue;
      }
      child.bound = relaxation_bound(grid, child.states, cfg.max_openings);
      if (child.bound == -kInf) continue;
      if (child.bound <= prune_level()) {
        pruned_bound = std::max(pruned_bound, child.bound);
        continue;
      }
      open.push(std::move(child));
    }
  }

  if (!have_inc) fail(ErrorCode::Infeasible, "branch_and_bound: no feasible decision found");
  double best_bound = std::max(inc, pruned_bound);
  while (!open.empty()) {
    best_bound = std::max(best_bound, open.top().bound);
    open.pop();
  }
  res.decision = inc_dec;
  res.capacity_mw = inc;
  res.bound_mw = best_bound;
  res.gap_achieved = best_bound > inc ? (best_bound - inc) / std::max(std::abs(inc), 1e-9) : 0.0;
  return res;
}

}  // namespace osr
