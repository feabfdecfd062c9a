#include "osr/powerlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "osr/error.hpp"

namespace osr {

double default_big_m(const Grid& grid) { return total_power(grid.generators); }

namespace {

std::size_t idx(const Grid& g, Address a) {
  const auto i = g.address_index(a);
  if (i < 0) fail(ErrorCode::Invalid, "lp: dangling port " + std::to_string(a));
  return static_cast<std::size_t>(i);
}

ExchangeLp assemble(const Grid& g, std::span<const SwitchState> states, double big_m, std::optional<int> max_openings) {
  if (states.size() != g.switches.size()) {
    fail(ErrorCode::Invalid, "lp: decision has " + std::to_string(states.size()) + " entries, grid has " +
                                 std::to_string(g.switches.size()) + " switches");
  }
  if (!(big_m > 0.0)) fail(ErrorCode::Invalid, "lp: big-M must be positive");
  if (g.addresses.empty()) fail(ErrorCode::Invalid, "lp: grid has no addresses");

  const double g1 = zone_power(g.generators, 1);
  const double g2 = zone_power(g.generators, 2);
  const double l1 = zone_power(g.loads, 1);
  const double l2 = zone_power(g.loads, 2);
  if (l2 == 0.0) fail(ErrorCode::Invalid, "degenerate context " + g.context_id + ": zone Z2 total load is zero");

  ExchangeLp out;
  out.big_m = big_m;
  auto& p = out.problem;
  const std::size_t na = g.addresses.size();
  const std::size_t ns = g.switches.size();

  out.lambda_var = p.add_var("lambda", 0.0, 0.0, kInf);
  out.theta_begin = p.num_vars();
  for (std::size_t a = 0; a < na; ++a) p.add_var("theta_" + std::to_string(g.addresses[a]), 0.0, -kInf, kInf);
  out.flow_begin = p.num_vars();
  for (std::size_t e = 0; e < ns; ++e) p.add_var("F_sw" + std::to_string(e), 0.0, -kInf, kInf);
  out.relaxed_var.assign(ns, -1);
  for (std::size_t e = 0; e < ns; ++e) {
    if (states[e] == SwitchState::Relaxed) out.relaxed_var[e] = p.add_var("y_sw" + std::to_string(e), 0.0, 0.0, 1.0);
  }
  auto theta = [&](Address a) { return out.theta_begin + static_cast<int>(idx(g, a)); };

  // Objective: sum over lines of S * (theta_t - theta_f) / X.
  bool any_obj = false;
  for (const auto& l : g.lines) {
    if (!l.in_service || l.orientation == 0) continue;
    const double c = l.orientation / l.x;
    p.objective[theta(l.port_to)] += c;
    p.objective[theta(l.port_from)] -= c;
    any_obj = true;
  }
  out.zero_objective = !any_obj;

  // Switch constraints.
  for (std::size_t e = 0; e < ns; ++e) {
    const auto& s = g.switches[e];
    const int tf = theta(s.port_from), tt = theta(s.port_to), f = out.flow_begin + static_cast<int>(e);
    const std::string n = "sw" + std::to_string(e);
    if (states[e] == SwitchState::Relaxed) {
      const int y = out.relaxed_var[e];
      p.add_row(n + "_ang_hi", {{tt, 1.0}, {tf, -1.0}, {y, big_m}}, RowSense::LessEqual, big_m);
      p.add_row(n + "_ang_lo", {{tt, -1.0}, {tf, 1.0}, {y, big_m}}, RowSense::LessEqual, big_m);
      p.add_row(n + "_flow_hi", {{f, 1.0}, {y, -big_m}}, RowSense::LessEqual, 0.0);
      p.add_row(n + "_flow_lo", {{f, -1.0}, {y, -big_m}}, RowSense::LessEqual, 0.0);
    } else {
      const double y = states[e] == SwitchState::Closed ? 1.0 : 0.0;
      p.add_row(n + "_ang_hi", {{tt, 1.0}, {tf, -1.0}}, RowSense::LessEqual, big_m * (1.0 - y));
      p.add_row(n + "_ang_lo", {{tt, -1.0}, {tf, 1.0}}, RowSense::LessEqual, big_m * (1.0 - y));
      p.add_row(n + "_flow_hi", {{f, 1.0}}, RowSense::LessEqual, big_m * y);
      p.add_row(n + "_flow_lo", {{f, -1.0}}, RowSense::LessEqual, big_m * y);
    }
  }

  // Thermal limits.
  for (std::size_t k = 0; k < g.lines.size(); ++k) {
    const auto& l = g.lines[k];
    if (!l.in_service) continue;
    const int tf = theta(l.port_from), tt = theta(l.port_to);
    const std::string n = "line" + std::to_string(k);
    p.add_row(n + "_hi", {{tt, 1.0 / l.x}, {tf, -1.0 / l.x}}, RowSense::LessEqual, l.f_max);
    p.add_row(n + "_lo", {{tt, -1.0 / l.x}, {tf, 1.0 / l.x}}, RowSense::LessEqual, l.f_max);
  }

  // Balance per address with mu = (lambda*G1 + G2 - L1) / L2 substituted.
  std::vector<double> lam_coef(na, 0.0), constant(na, 0.0), lam_scale(na, 0.0), const_scale(na, 0.0);
  auto add_lam = [&](std::size_t a, double v) {
    lam_coef[a] += v;
    lam_scale[a] += std::abs(v);
  };
  auto add_const = [&](std::size_t a, double v) {
    constant[a] += v;
    const_scale[a] += std::abs(v);
  };
  for (const auto& e : g.generators) {
    const auto a = idx(g, e.port);
    if (e.in_z1) add_lam(a, -e.p);
    if (e.in_z2) add_const(a, -e.p);
  }
  for (const auto& e : g.loads) {
    const auto a = idx(g, e.port);
    if (e.in_z1) add_const(a, e.p);
    if (e.in_z2) {
      add_lam(a, e.p * g1 / l2);
      add_const(a, e.p * (g2 - l1) / l2);
    }
  }
  // Cancellation residue (an address holding every injection) is exactly zero.
  for (std::size_t a = 0; a < na; ++a) {
    if (std::abs(lam_coef[a]) <= 1e-12 * lam_scale[a]) lam_coef[a] = 0.0;
    if (std::abs(constant[a]) <= 1e-12 * const_scale[a]) constant[a] = 0.0;
  }
  std::vector<std::vector<LpTerm>> bal(na);
  for (std::size_t a = 0; a < na; ++a) {
    if (lam_coef[a] != 0.0) bal[a].push_back({out.lambda_var, lam_coef[a]});
  }
  for (std::size_t e = 0; e < ns; ++e) {
    const int f = out.flow_begin + static_cast<int>(e);
    bal[idx(g, g.switches[e].port_from)].push_back({f, 1.0});
    bal[idx(g, g.switches[e].port_to)].push_back({f, -1.0});
  }
  for (const auto& l : g.lines) {
    if (!l.in_service) continue;
    const int tf = theta(l.port_from), tt = theta(l.port_to);
    const double b = 1.0 / l.x;
    auto& rf = bal[idx(g, l.port_from)];
    rf.push_back({tf, b});
    rf.push_back({tt, -b});
    auto& rt = bal[idx(g, l.port_to)];
    rt.push_back({tf, -b});
    rt.push_back({tt, b});
  }
  for (std::size_t a = 0; a < na; ++a) {
    p.add_row("bal_" + std::to_string(g.addresses[a]), std::move(bal[a]), RowSense::Equal, -constant[a]);
  }
  p.add_row("phase_ref", {{out.theta_begin, 1.0}}, RowSense::Equal, 0.0);

  if (max_openings) {
    // sum_e (1 - y_e) <= k with fixed states folded into the right-hand side.
    int fixed_open = 0, relaxed = 0;
    std::vector<LpTerm> terms;
    for (std::size_t e = 0; e < ns; ++e) {
      if (states[e] == SwitchState::Open) ++fixed_open;
      if (states[e] == SwitchState::Relaxed) {
        ++relaxed;
        terms.push_back({out.relaxed_var[e], 1.0});
      }
    }
    if (!terms.empty()) {
      p.add_row("max_openings", std::move(terms), RowSense::GreaterEqual,
                static_cast<double>(relaxed + fixed_open - *max_openings));
    }
  }
  return out;
}

}  // namespace

ExchangeLp build_exchange_lp(const Grid& grid, const Decision& decision, double big_m) {
  std::vector<SwitchState> st(decision.size());
  for (std::size_t i = 0; i < st.size(); ++i) st[i] = decision.states[i] ? SwitchState::Closed : SwitchState::Open;
  if (decision.size() != grid.switches.size()) {
    fail(ErrorCode::Invalid, "lp: decision has " + std::to_string(decision.size()) + " entries, grid has " +
                                 std::to_string(grid.switches.size()) + " switches");
  }
  return assemble(grid, st, big_m, std::nullopt);
}

ExchangeLp build_relaxed_exchange_lp(const Grid& grid, std::span<const SwitchState> states, double big_m,
                                     std::optional<int> max_openings) {
  return assemble(grid, states, big_m, max_openings);
}

LpSolution extract_solution(const Grid& g, const ExchangeLp& lp, const LpResult& r) {
  LpSolution s;
  s.objective = r.objective;
  s.lambda = r.x[lp.lambda_var];
  s.theta.assign(r.x.begin() + lp.theta_begin, r.x.begin() + lp.theta_begin + static_cast<long>(g.addresses.size()));
  s.switch_flows.assign(r.x.begin() + lp.flow_begin,
                        r.x.begin() + lp.flow_begin + static_cast<long>(g.switches.size()));
  const double g1 = zone_power(g.generators, 1), g2 = zone_power(g.generators, 2);
  const double l1 = zone_power(g.loads, 1), l2 = zone_power(g.loads, 2);
  s.mu = (s.lambda * g1 + g2 - l1) / l2;
  return s;
}

CapacityResult exchange_capacity(const Grid& grid, const Decision& decision) {
  return exchange_capacity(grid, decision, default_big_m(grid));
}

CapacityResult exchange_capacity(const Grid& grid, const Decision& decision, double big_m) {
  ExchangeLp lp = build_exchange_lp(grid, decision, big_m);
  CapacityResult out;
  LpResult r;
  if (lp.zero_objective) {
    auto fixed = lp.problem;
    fixed.lower[lp.lambda_var] = 1.0;
    fixed.upper[lp.lambda_var] = 1.0;
    r = solve_lp(fixed);
    if (r.status != LpStatus::Optimal) r = solve_lp(lp.problem);
  } else {
    r = solve_lp(lp.problem);
  }
  // lambda must be strictly positive; an optimum at 0 stands only if some
  // positive lambda is also feasible.
  if (r.status == LpStatus::Optimal && r.x[lp.lambda_var] <= kLambdaFloor) {
    auto widest = lp.problem;
    std::fill(widest.objective.begin(), widest.objective.end(), 0.0);
    widest.objective[lp.lambda_var] = -1.0;
    const auto w = solve_lp(widest);
    if (w.status == LpStatus::Optimal && w.x[lp.lambda_var] <= kLambdaFloor) r.status = LpStatus::Infeasible;
  }
  out.status = r.status;
  if (r.status != LpStatus::Optimal) return out;
  out.solution = extract_solution(grid, lp, r);
  out.capacity_mw = -r.objective;
  if (out.capacity_mw == 0.0) out.capacity_mw = 0.0;  // drop negative zero
  out.capacity_pu = out.capacity_mw / kBaseMva;
  return out;
}

}  // namespace osr
