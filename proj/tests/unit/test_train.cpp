#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "osr/datagen.hpp"
#include "osr/error.hpp"
#include "osr/exact.hpp"
#include "osr/metrics.hpp"
#include "osr/train.hpp"

using namespace osr;

namespace {
std::vector<Grid> base4_contexts(std::uint64_t seed, int n) {
  const auto b = load_base_case(fx::data_dir() / "base4.json");
  std::vector<Grid> out;
  for (int i = 0; i < n; ++i) {
    Rng r = context_rng(seed, static_cast<std::uint64_t>(i));
    Grid g = sample_context(b, NoiseConfig{}, r);
    g.context_id = "c" + std::to_string(seed) + "-" + std::to_string(i);
    out.push_back(std::move(g));
  }
  return out;
}

TrainConfig quick(Estimator e) {
  auto c = TrainConfig::defaults_for(e);
  c.samples = 8;
  c.batch = 4;
  c.max_iterations = 6;
  c.validation_period = 3;
  c.knots = 10;
  c.seed = 3;
  return c;
}

// Two parallel border paths, each behind one switch.
Grid parallel_paths() {
  Grid g;
  g.context_id = "par";
  g.addresses = {0, 1, 2, 3};
  g.generators.push_back({0, 100.0, true, false});
  g.loads.push_back({3, 100.0, false, true});
  g.switches.push_back({0, 1, "A"});
  g.switches.push_back({2, 3, "B"});
  g.lines.push_back({0, 3, 100.0, 0.05, +1, true});
  g.lines.push_back({1, 2, 100.0, 0.05, +1, true});
  canonicalize(g);
  return g;
}
}  // namespace

TEST_SUITE("train") {
  TEST_CASE("estimator settings") {
    const auto f = TrainConfig::defaults_for(Estimator::Fmc);
    CHECK(f.beta == 0.1);
    CHECK(f.tau == 20.0);
    CHECK(f.samples == 32);
    CHECK(f.batch == 8);
    CHECK(f.sampling.reject_noop);
    const auto m = TrainConfig::defaults_for(Estimator::Mt);
    CHECK(m.beta == 1.0);
    CHECK(m.sampling.mode == SamplingMode::PerturbAroundMode);
    CHECK(m.adam.lr == 3e-4);
    CHECK(m.adam.clip == 0.04);
    CHECK(estimator_from_string("fmc") == Estimator::Fmc);
    CHECK_THROWS_AS(estimator_from_string("sgd"), Error);
    auto bad = m;
    bad.samples = 0;
    CHECK_THROWS_AS(bad.check(), Error);
  }

  TEST_CASE("identical seeds give identical logs") {
    const auto tr = base4_contexts(1, 12), va = base4_contexts(2, 4);
    for (auto e : {Estimator::Mc, Estimator::Fmc, Estimator::Mt}) {
      MemoryTable m1, m2;
      const auto a = train(quick(e), tr, va, &m1);
      const auto b = train(quick(e), tr, va, &m2);
      REQUIRE(a.log.size() == b.log.size());
      for (std::size_t i = 0; i < a.log.size(); ++i) {
        CHECK(a.log[i].mean_best_f == b.log[i].mean_best_f);
        CHECK(a.log[i].entropy == b.log[i].entropy);
        CHECK(a.log[i].validation_mw == b.log[i].validation_mw);
      }
      CHECK(a.best.params == b.best.params);
      CHECK(a.evaluations == 2);
    }
  }

  TEST_CASE("validation period beyond the run: one evaluation at the end") {
    const auto tr = base4_contexts(3, 8), va = base4_contexts(4, 3);
    auto c = quick(Estimator::Mt);
    c.validation_period = 1000;
    MemoryTable mem;
    const auto r = train(c, tr, va, &mem);
    CHECK(r.evaluations == 1);
    CHECK(r.best_iteration == c.max_iterations);
    CHECK(r.best.meta.at("iteration") == std::to_string(c.max_iterations));
    CHECK(mem.size() > 0);
  }

  TEST_CASE("retained checkpoint has the best validation capacity") {
    const auto tr = base4_contexts(5, 8), va = base4_contexts(6, 3);
    auto c = quick(Estimator::Mt);
    c.validation_period = 1;
    MemoryTable mem;
    const auto r = train(c, tr, va, &mem);
    for (const auto& rec : r.log) {
      if (rec.validation_mw) CHECK(r.best_validation_mw >= *rec.validation_mw);
    }
    const auto model = r.best.instantiate();
    CHECK(mean_capacity(model, r.best.normalizer, va) == doctest::Approx(r.best_validation_mw).epsilon(1e-12));
  }

  TEST_CASE("empty datasets are rejected") {
    MemoryTable mem;
    CHECK_THROWS_AS(train(quick(Estimator::Mt), {}, base4_contexts(1, 2), &mem), Error);
  }

  TEST_CASE("ensemble rule") {
    const Grid g = parallel_paths();
    const Decision closed{{1, 1}}, open_a{{0, 1}}, open_b{{1, 0}};
    const double fc = -exchange_capacity(g, closed).capacity_mw;
    const auto ca = exchange_capacity(g, open_a);
    REQUIRE(ca.feasible());
    REQUIRE(-ca.capacity_mw > fc);
    CHECK(ensemble_choose(g, closed, open_a).source == "fmc");
    CHECK(ensemble_choose(g, open_a, closed).source == "mt");
    CHECK(ensemble_choose(g, closed, closed).source == "mt");

    const Grid s = fx::two_address_series_switch();
    CHECK(ensemble_choose(s, Decision{{0}}, Decision{{1}}).decision == Decision{{1}});
    CHECK(ensemble_choose(s, Decision{{1}}, Decision{{0}}).source == "fmc");
    const auto both = ensemble_choose(s, Decision{{0}}, Decision{{0}});
    CHECK(both.source == "all-closed");
    CHECK(both.decision == Decision{{1}});
  }

  TEST_CASE("decide uses the sign rule") {
    const auto tr = base4_contexts(7, 4);
    H2mgNodeModel m;
    m.zero_decoder_output();
    const auto norm = fit_normalizer(tr, 10);
    CHECK(decide(m, norm, tr[0]) == Decision::all_closed(tr[0].num_switches()));
  }
}

TEST_SUITE("metrics") {
  struct Case {
    std::vector<Grid> grids;
    std::map<std::string, double> closed, solver;
    std::map<std::string, Decision> closed_d, solver_d;
  };

  Case make_case() {
    Case c;
    c.grids = base4_contexts(11, 6);
    for (const auto& g : c.grids) {
      const std::size_t n = g.num_switches();
      const auto r = exchange_capacity(g, Decision::all_closed(n));
      c.closed[g.context_id] = r.feasible() ? r.capacity_mw : 0.0;
      c.closed_d[g.context_id] = Decision::all_closed(n);
      const auto e = exhaustive_best(g, 3);
      c.solver[g.context_id] = e.capacity_mw;
      c.solver_d[g.context_id] = e.decision;
    }
    return c;
  }

  TEST_CASE("all-closed against itself") {
    const auto c = make_case();
    const auto r = evaluate("all-closed", c.grids, c.closed_d, c.closed, c.solver);
    CHECK(r.mean_improvement_pct == 0.0);
    CHECK(r.mean_openings == 0.0);
    CHECK(r.never_used == c.grids[0].num_switches());
    if (r.mean_normalized) CHECK(*r.mean_normalized == 0.0);
  }

  TEST_CASE("solver against itself") {
    const auto c = make_case();
    const auto r = evaluate("exhaustive", c.grids, c.solver_d, c.closed, c.solver);
    for (const auto& m : r.contexts) {
      if (!m.excluded) CHECK(*m.normalized == 1.0);
    }
    CHECK(r.excluded < c.grids.size());
  }

  TEST_CASE("usage counting") {
    std::vector<Grid> gs;
    std::map<std::string, Decision> d;
    std::map<std::string, double> closed;
    const Grid base = fx::toy_four_bus();
    for (int i = 0; i < 100; ++i) {
      Grid g = base;
      g.context_id = "u" + std::to_string(1000 + i);
      Decision y = Decision::all_closed(4);
      if (i < 4) y.states[3] = 0;
      d[g.context_id] = y;
      closed[g.context_id] = exchange_capacity(g, Decision::all_closed(4)).capacity_mw;
      gs.push_back(g);
    }
    const auto r = evaluate("m", gs, d, closed, {});
    CHECK(r.usage_pct[3] == doctest::Approx(4.0));
    CHECK(r.never_used == 3);
    const auto back = parse_usage_csv(usage_csv(r));
    CHECK(back == r.usage_pct);
  }

  TEST_CASE("missing reference is an error") {
    auto c = make_case();
    c.closed.erase(c.grids[0].context_id);
    CHECK_THROWS_AS(evaluate("x", c.grids, c.closed_d, c.closed, {}), Error);
  }

  TEST_CASE("order-invariant and csv round trip") {
    const auto c = make_case();
    auto rev = c.grids;
    std::reverse(rev.begin(), rev.end());
    const auto a = evaluate("exhaustive", c.grids, c.solver_d, c.closed, c.solver);
    const auto b = evaluate("exhaustive", rev, c.solver_d, c.closed, c.solver);
    CHECK(metrics_csv(a) == metrics_csv(b));
    const auto rows = parse_metrics_csv(metrics_csv(a));
    REQUIRE(rows.size() == a.contexts.size());
    CHECK(rows[0].context_id == a.contexts[0].context_id);
    CHECK(csv_method(metrics_csv(a)) == "exhaustive");
  }

  TEST_CASE("histogram shares edges across methods") {
    const auto h = histogram("p", {{"a", {0.0, 1.0, 2.0}}, {"b", {4.0}}}, 4);
    CHECK(h.edges.front() == 0.0);
    CHECK(h.edges.back() == 4.0);
    CHECK(h.counts.at("a")[0] == 1);
    CHECK(h.counts.at("b")[3] == 1);
  }
}
