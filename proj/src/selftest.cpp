#include "selftest.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "dc_oracle.hpp"
#include "finite_diff.hpp"
#include "osr/error.hpp"
#include "osr/exact.hpp"
#include "osr/powerlp.hpp"
#include "osr/surrogate.hpp"
#include "random_grids.hpp"
#include "union_find.hpp"

namespace osr {

namespace {

struct Check {
  std::string name;
  bool pass = true;
  std::string detail;
};

Check lp_vs_oracle() {
  Check c{"lp_vs_dc_oracle", true, {}};
  std::mt19937_64 rng(101);
  int agree = 0, total = 0;
  double worst = 0.0;
  for (int i = 0; i < 30; ++i) {
    const Grid g = oracle::random_grid(rng);
    const Decision y = oracle::random_decision(rng, g.num_switches());
    const auto lp = exchange_capacity(g, y, 1e6);
    const auto dc = oracle::dc_capacity(g, y);
    ++total;
    const bool lp_ok = lp.feasible(), dc_ok = dc.status == oracle::Status::Optimal;
    if (lp_ok != dc_ok) continue;
    if (lp_ok) {
      const double rel = std::abs(lp.capacity_mw - dc.capacity_mw) / std::max(1.0, std::abs(dc.capacity_mw));
      worst = std::max(worst, rel);
      if (rel > 1e-5) continue;
    }
    ++agree;
  }
  c.pass = agree == total;
  c.detail = std::to_string(agree) + "/" + std::to_string(total) + " agree, worst rel " + std::to_string(worst);
  return c;
}

Check partition_vs_bfs() {
  Check c{"bus_partition_vs_bfs", true, {}};
  std::mt19937_64 rng(102);
  for (int i = 0; i < 50; ++i) {
    const Grid g = oracle::random_grid(rng, {2, 8, 0, 8, 4, 0.1});
    const Decision y = oracle::random_decision(rng, g.num_switches());
    if (bus_partition(g, y).bus_of != oracle::components(g, y)) {
      c.pass = false;
      c.detail = "mismatch on instance " + std::to_string(i);
      return c;
    }
  }
  c.detail = "50 instances";
  return c;
}

Check exact_gradient_fd() {
  Check c{"exact_gradient_vs_fd", true, {}};
  std::mt19937_64 rng(103);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    ObjectiveTable f(8);
    for (auto& v : f) v = 5.0 * n(rng);
    std::vector<double> z(3);
    for (auto& v : z) v = n(rng);
    const double beta = 0.5;
    const auto g = exact_gradient(Scores{z}, f, beta);
    const auto fd = oracle::central_difference(
        [&](const std::vector<double>& x) { return exact_objective(Scores{x}, f, beta); }, z, 1e-5);
    for (std::size_t k = 0; k < 3; ++k) {
      worst = std::max(worst, std::abs(g[k] - fd[k]) / std::max(1e-8, std::abs(fd[k])));
    }
  }
  c.pass = worst <= 1e-5;
  c.detail = "worst rel " + std::to_string(worst);
  return c;
}

Check filter_semantics() {
  Check c{"filter_semantics", true, {}};
  std::mt19937_64 rng(104);
  std::normal_distribution<double> n(0.0, 100.0);
  for (int r = 0; r < 100; ++r) {
    std::vector<Sample> s(32);
    for (auto& x : s) x.f = n(rng);
    const auto ft = filtered_scores(s, 20.0);
    double fmin = s[0].f;
    for (const auto& x : s) fmin = std::min(fmin, x.f);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!(ft[i] >= -0.5 && ft[i] < 0.0) || (s[i].f == fmin && ft[i] != -0.5)) {
        c.pass = false;
        c.detail = "round " + std::to_string(r);
        return c;
      }
    }
  }
  c.detail = "100 rounds";
  return c;
}

Check mt_identity() {
  Check c{"memory_table_gradient", true, {}};
  std::mt19937_64 rng(105);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int i = 0; i < 20; ++i) {
    Scores z{{n(rng), n(rng), n(rng), n(rng)}};
    Decision y = oracle::random_decision(rng, 4);
    const double beta = std::abs(n(rng)) + 0.1;
    const auto g = grad_mt(z, y, beta);
    for (std::size_t e = 0; e < 4; ++e) {
      const double s = sigmoid(z.logits[e]);
      const double want = s * sigmoid(-z.logits[e]) * (z.logits[e] - beta * (2.0 * y.states[e] - 1.0));
      if (g[e] != want) c.pass = false;
    }
    Scores fixed{{}};
    for (auto b : y.states) fixed.logits.push_back(beta * (2.0 * b - 1.0));
    for (double v : grad_mt(fixed, y, beta)) {
      if (v != 0.0) c.pass = false;
    }
  }
  c.detail = "20 points";
  return c;
}

Check gnn_gradient() {
  Check c{"gnn_gradient_vs_fd", true, {}};
  std::mt19937_64 rng(106);
  const Grid g = oracle::random_grid(rng, {3, 3, 2, 3, 3, 0.0});
  const auto blocks = oracle::gnn_gradient_check(oracle::check_config(), g, 7);
  double worst = 0.0;
  for (const auto& b : blocks) {
    worst = std::max(worst, b.worst_ratio);
    if (!b.pass) {
      c.pass = false;
      c.detail = "block " + b.name;
    }
  }
  if (c.pass) c.detail = std::to_string(blocks.size()) + " blocks, worst ratio " + std::to_string(worst);
  return c;
}

Check bnb_vs_exhaustive() {
  Check c{"bnb_vs_exhaustive", true, {}};
  std::mt19937_64 rng(107);
  int compared = 0;
  for (int i = 0; i < 5; ++i) {
    const Grid g = oracle::random_grid(rng, {4, 6, 4, 8, 6, 0.0});
    SolverConfig cfg{3, 0.0, 1e9};
    ExactResult ex;
    try {
      ex = exhaustive_best(g, 3);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Infeasible) throw;
      continue;
    }
    const auto bb = branch_and_bound(g, cfg);
    ++compared;
    if (std::abs(bb.capacity_mw - ex.capacity_mw) > 1e-6 * std::max(1.0, std::abs(ex.capacity_mw))) {
      c.pass = false;
      c.detail = "instance " + std::to_string(i);
      return c;
    }
  }
  c.detail = std::to_string(compared) + " instances";
  return c;
}

}  // namespace

int run_selftest(const std::function<void(const std::string&)>& line) {
  int failures = 0;
  for (auto fn : {lp_vs_oracle, partition_vs_bfs, exact_gradient_fd, filter_semantics, mt_identity, gnn_gradient,
                  bnb_vs_exhaustive}) {
    Check c;
    try {
      c = fn();
    } catch (const std::exception& e) {
      c.pass = false;
      c.detail = e.what();
    }
    if (!c.pass) ++failures;
    line((c.pass ? "PASS " : "FAIL ") + c.name + " " + c.detail);
  }
  return failures;
}

}  // namespace osr
