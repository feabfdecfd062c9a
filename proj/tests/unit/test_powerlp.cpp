#include <cmath>
#include <random>
#include <sstream>

#include "dc_oracle.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "osr/error.hpp"
#include "osr/io.hpp"
#include "osr/powerlp.hpp"
#include "random_grids.hpp"

using namespace osr;

namespace {
int rows_with(const LpProblem& p, const std::string& part, RowSense sense) {
  int n = 0;
  for (const auto& r : p.rows) n += (r.name.find(part) != std::string::npos && r.sense == sense) ? 1 : 0;
  return n;
}
}  // namespace

TEST_SUITE("simplex") {
  TEST_CASE("minimize x with x >= 1") {
    LpProblem p;
    p.add_var("x", 1.0, -kInf, kInf);
    p.add_row("c", {{0, 1.0}}, RowSense::GreaterEqual, 1.0);
    const auto r = solve_lp(p);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(1.0));
  }

  TEST_CASE("x <= 0 and x >= 1 is infeasible") {
    LpProblem p;
    p.add_var("x", 0.0, -kInf, kInf);
    p.add_row("a", {{0, 1.0}}, RowSense::LessEqual, 0.0);
    p.add_row("b", {{0, 1.0}}, RowSense::GreaterEqual, 1.0);
    CHECK(solve_lp(p).status == LpStatus::Infeasible);
  }

  TEST_CASE("minimize -x with x >= 0 is unbounded") {
    LpProblem p;
    p.add_var("x", -1.0, 0.0, kInf);
    CHECK(solve_lp(p).status == LpStatus::Unbounded);
  }

  TEST_CASE("small textbook program") {
    // max 3x + 2y  s.t. x + y <= 4, x + 3y <= 6, x <= 3
    LpProblem p;
    p.add_var("x", -3.0, 0.0, 3.0);
    p.add_var("y", -2.0, 0.0, kInf);
    p.add_row("r1", {{0, 1.0}, {1, 1.0}}, RowSense::LessEqual, 4.0);
    p.add_row("r2", {{0, 1.0}, {1, 3.0}}, RowSense::LessEqual, 6.0);
    const auto r = solve_lp(p);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(-11.0));
    CHECK(max_violation(p, r.x) < 1e-9);
  }

  TEST_CASE("non-finite coefficient is rejected") {
    LpProblem p;
    p.add_var("x", NAN, 0.0, 1.0);
    CHECK_THROWS_AS(p.check(), Error);
  }

  TEST_CASE("lp text layout") {
    LpProblem p;
    p.add_var("x", 1.0, 0.0, kInf);
    p.add_row("c", {{0, 1.0}}, RowSense::GreaterEqual, 1.0);
    std::ostringstream os;
    write_lp_text(p, os);
    CHECK(os.str().find("Minimize") != std::string::npos);
    CHECK(os.str().find("Subject To") != std::string::npos);
    CHECK(os.str().find("End") != std::string::npos);
  }
}

TEST_SUITE("powerlp") {
  TEST_CASE("two-address program has the expected shape") {
    const auto lp = build_exchange_lp(fx::two_address(), Decision{}, 100.0);
    CHECK(lp.problem.num_vars() == 3);
    CHECK(rows_with(lp.problem, "line", RowSense::LessEqual) == 2);
    CHECK(rows_with(lp.problem, "bal_", RowSense::Equal) == 2);
    CHECK(rows_with(lp.problem, "phase_ref", RowSense::Equal) == 1);
    CHECK(lp.problem.rows.size() == 5);
  }

  TEST_CASE("a closed switch adds one flow variable and four rows") {
    const Grid g = fx::two_address_series_switch();
    const auto lp = build_exchange_lp(g, Decision{{1}}, 100.0);
    CHECK(lp.problem.num_vars() == 5);
    CHECK(rows_with(lp.problem, "_ang_", RowSense::LessEqual) == 2);
    CHECK(rows_with(lp.problem, "_flow_", RowSense::LessEqual) == 2);
    for (const auto& r : lp.problem.rows) {
      if (r.name.find("_flow_") != std::string::npos) CHECK(r.rhs == 100.0);
      if (r.name.find("_ang_") != std::string::npos) CHECK(r.rhs == 0.0);
    }
  }

  TEST_CASE("no border line gives an identically zero objective and zero capacity") {
    Grid g = fx::two_address();
    g.lines[0].orientation = 0;
    const auto lp = build_exchange_lp(g, Decision{}, 100.0);
    for (double c : lp.problem.objective) CHECK(c == 0.0);
    CHECK(lp.zero_objective);
    const auto r = exchange_capacity(g, Decision{});
    REQUIRE(r.feasible());
    CHECK(r.capacity_mw == 0.0);
    CHECK(r.solution.lambda == 1.0);
  }

  TEST_CASE("single line saturates at its thermal limit") {
    const auto r = exchange_capacity(fx::two_address(), Decision{});
    REQUIRE(r.feasible());
    CHECK(r.capacity_mw == doctest::Approx(150.0).epsilon(1e-9));
    CHECK(r.capacity_pu == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(r.solution.lambda == doctest::Approx(1.5));
    CHECK(r.solution.mu == doctest::Approx(1.5));
    CHECK(r.solution.theta[0] == 0.0);
  }

  TEST_CASE("brute-force lambda sweep agrees on the single-line case") {
    // Flow = 100 * lambda; the largest feasible lambda on a fine grid.
    double best = 0.0;
    for (int k = 0; k <= 300000; ++k) {
      const double lam = k * 1e-5;
      if (100.0 * lam <= 150.0 + 1e-12) best = std::max(best, 100.0 * lam);
    }
    CHECK(exchange_capacity(fx::two_address(), Decision{}).capacity_mw == doctest::Approx(best).epsilon(1e-6));
  }

  TEST_CASE("open series switch islands the load") {
    const Grid g = fx::two_address_series_switch();
    CHECK_FALSE(exchange_capacity(g, Decision{{0}}).feasible());
    CHECK(oracle::dc_capacity(g, Decision{{0}}).status == oracle::Status::Infeasible);
    // The default big-M (generator sum, 100 MW) caps the switch flow.
    CHECK(exchange_capacity(g, Decision{{1}}).capacity_mw == doctest::Approx(100.0));
    CHECK(exchange_capacity(g, Decision{{1}}, 1e6).capacity_mw == doctest::Approx(150.0));
  }

  TEST_CASE("zero Z2 load is a degenerate context") {
    Grid g = fx::two_address();
    g.loads[0].p = 0.0;
    CHECK_THROWS_AS(build_exchange_lp(g, Decision{}, 100.0), Error);
  }

  TEST_CASE("default big-M is the generator sum") { CHECK(default_big_m(fx::toy_four_bus()) == 250.0); }

  TEST_CASE("feasible solutions satisfy every constraint") {
    std::mt19937_64 rng(21);
    int checked = 0;
    for (int i = 0; i < 100; ++i) {
      const Grid g = oracle::random_grid(rng);
      const Decision y = oracle::random_decision(rng, g.num_switches());
      const double m = default_big_m(g);
      const auto r = exchange_capacity(g, y, m);
      if (!r.feasible()) continue;
      ++checked;
      const auto lp = build_exchange_lp(g, y, m);
      std::vector<double> x(static_cast<std::size_t>(lp.problem.num_vars()), 0.0);
      x[lp.lambda_var] = r.solution.lambda;
      for (std::size_t a = 0; a < g.addresses.size(); ++a) x[lp.theta_begin + a] = r.solution.theta[a];
      for (std::size_t e = 0; e < g.num_switches(); ++e) x[lp.flow_begin + e] = r.solution.switch_flows[e];
      CHECK(max_violation(lp.problem, x) < 1e-6);
    }
    CHECK(checked > 30);
  }

  TEST_CASE("raising every thermal limit never lowers capacity") {
    std::mt19937_64 rng(22);
    for (int i = 0; i < 60; ++i) {
      const Grid g = oracle::random_grid(rng);
      const Decision y = oracle::random_decision(rng, g.num_switches());
      const auto base = exchange_capacity(g, y, 1e6);
      if (!base.feasible()) continue;
      Grid h = g;
      for (auto& l : h.lines) l.f_max *= 1.7;
      const auto up = exchange_capacity(h, y, 1e6);
      REQUIRE(up.feasible());
      CHECK(up.capacity_mw >= base.capacity_mw - 1e-6);
    }
  }

  TEST_CASE("closed switches are equivalent to contracting their buses") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 40; ++i) {
      const Grid g = oracle::random_grid(rng, {3, 6, 1, 4, 6, 0.0});
      const Decision y = Decision::all_closed(g.num_switches());
      const auto part = bus_partition(g, y);
      Grid c;
      c.context_id = g.context_id;
      for (int b = 0; b < part.num_buses; ++b) c.addresses.push_back(b);
      auto bus = [&](Address a) { return part.bus_of[static_cast<std::size_t>(g.address_index(a))]; };
      for (auto e : g.generators) c.generators.push_back({bus(e.port), e.p, e.in_z1, e.in_z2});
      for (auto e : g.loads) c.loads.push_back({bus(e.port), e.p, e.in_z1, e.in_z2});
      for (auto l : g.lines) {
        l.port_from = bus(l.port_from);
        l.port_to = bus(l.port_to);
        c.lines.push_back(l);
      }
      const auto a = exchange_capacity(g, y, 1e6);
      const auto b = exchange_capacity(c, Decision{}, 1e6);
      INFO("statuses " << static_cast<int>(a.status) << " " << static_cast<int>(b.status));
      REQUIRE(a.feasible() == b.feasible());
      if (a.feasible()) CHECK(std::abs(a.capacity_mw - b.capacity_mw) <= 1e-6 * std::max(1.0, b.capacity_mw));
    }
  }
}
