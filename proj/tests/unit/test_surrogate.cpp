#include <cmath>
#include <random>

#include "doctest.h"
#include "finite_diff.hpp"
#include "fixtures.hpp"
#include "osr/datagen.hpp"
#include "osr/error.hpp"
#include "osr/surrogate.hpp"

using namespace osr;

namespace {
Grid base12() { return build_base_case(load_base_case(fx::data_dir() / "base12.json")); }

std::vector<std::size_t> switches_of(const Grid& g, const std::string& sub) {
  for (const auto& s : substation_groups(g)) {
    if (s.id == sub) return s.switch_indices;
  }
  return {};
}
}  // namespace

TEST_SUITE("surrogate") {
  TEST_CASE("rho at zero scores is uniform") {
    CHECK(rho_log_prob(Scores{{0, 0, 0}}, Decision{{1, 0, 1}}) == doctest::Approx(std::log(1.0 / 8.0)));
  }

  TEST_CASE("rho at ln 3") {
    CHECK(rho_log_prob(Scores{{std::log(3.0)}}, Decision{{1}}) == doctest::Approx(std::log(0.75)).epsilon(1e-14));
  }

  TEST_CASE("rho sums to one by enumeration") {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> n(0.0, 3.0);
    for (std::size_t k = 1; k <= 4; ++k) {
      Scores z;
      for (std::size_t e = 0; e < k; ++e) z.logits.push_back(n(rng));
      double s = 0.0;
      for (std::uint64_t b = 0; b < (1ull << k); ++b) s += std::exp(rho_log_prob(z, decision_from_bits(b, k)));
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
  }

  TEST_CASE("rho stays finite for large scores") {
    CHECK(std::isfinite(rho_log_prob(Scores{{800.0, -800.0}}, Decision{{0, 1}})));
  }

  TEST_CASE("no-op equivalence on the shipped templates") {
    const Grid g = base12();
    const std::size_t n = g.num_switches();
    CHECK(is_noop_equivalent(g, Decision::all_closed(n)));
    const auto type2 = switches_of(g, "a");
    REQUIRE(type2.size() == 5);
    for (auto e : type2) {
      Decision y = Decision::all_closed(n);
      y.states[e] = 0;
      CHECK(is_noop_equivalent(g, y));
      CHECK(substation_noop(g, y, type2));
    }
    const auto type1 = switches_of(g, "b");
    REQUIRE(type1.size() == 4);
    Decision y = Decision::all_closed(n);
    y.states[type1[0]] = 0;
    CHECK_FALSE(is_noop_equivalent(g, y));
    CHECK(bus_partition(g, y).num_buses > bus_partition(g, Decision::all_closed(n)).num_buses);
  }

  TEST_CASE("saturated scores sample all-ones") {
    const Grid g = base12();
    Rng rng(42);
    const auto s = sample_decisions(Scores{std::vector<double>(g.num_switches(), 40.0)}, g, 50, {}, rng);
    for (const auto& y : s) CHECK(y == Decision::all_closed(g.num_switches()));
  }

  TEST_CASE("rejection leaves no no-op pattern in any substation") {
    const Grid g = base12();
    Rng rng(43);
    SamplingPolicy p;
    p.reject_noop = true;
    const auto groups = substation_groups(g);
    const auto s = sample_decisions(Scores{std::vector<double>(g.num_switches(), 0.0)}, g, 10000, p, rng);
    std::size_t bad = 0;
    for (const auto& y : s) {
      for (const auto& grp : groups) {
        bool opens = false;
        for (auto e : grp.switch_indices) opens = opens || y.states[e] == 0;
        if (opens && substation_noop(g, y, grp.switch_indices)) ++bad;
      }
    }
    CHECK(bad == 0);
  }

  TEST_CASE("independent sampling frequency at zero scores") {
    const Grid g = base12();
    Rng rng(44);
    const auto s = sample_decisions(Scores{std::vector<double>(g.num_switches(), 0.0)}, g, 10000, {}, rng);
    for (std::size_t e = 0; e < g.num_switches(); ++e) {
      double ones = 0;
      for (const auto& y : s) ones += y.states[e];
      CHECK(std::abs(ones / 10000.0 - 0.5) <= 3.0 * 0.5 / 100.0);
    }
  }

  TEST_CASE("perturb around the mode opens zero, one or two extra switches") {
    const Grid g = base12();
    Rng rng(45);
    SamplingPolicy p;
    p.mode = SamplingMode::PerturbAroundMode;
    std::vector<double> z(g.num_switches(), 1.0);
    const auto s = sample_decisions(Scores{z}, g, 5000, p, rng);
    std::array<int, 3> hist{};
    for (const auto& y : s) {
      REQUIRE(y.openings() <= 2);
      ++hist[y.openings()];
    }
    CHECK(hist[1] / 5000.0 == doctest::Approx(0.3).epsilon(0.1));
    CHECK(hist[2] / 5000.0 == doctest::Approx(0.4).epsilon(0.1));
  }

  TEST_CASE("exact objective and gradient on a constant table") {
    const ObjectiveTable f{7.0, 7.0};
    CHECK(exact_gradient(Scores{{0.0}}, f, 1.0)[0] == doctest::Approx(0.0));
    CHECK(exact_objective(Scores{{0.0}}, f, 1.0) == doctest::Approx(0.0));
  }

  TEST_CASE("exact gradient against finite differences") {
    std::mt19937_64 rng(46);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
      ObjectiveTable f(8);
      for (auto& v : f) v = 3.0 * n(rng);
      std::vector<double> z{n(rng), n(rng), n(rng)};
      const auto g = exact_gradient(Scores{z}, f, 0.7);
      const auto fd = oracle::central_difference(
          [&](const std::vector<double>& x) { return exact_objective(Scores{x}, f, 0.7); }, z, 1e-5);
      for (int k = 0; k < 3; ++k) CHECK(std::abs(g[k] - fd[k]) <= 1e-5 * std::max(1e-3, std::abs(fd[k])));
    }
  }

  TEST_CASE("grad_mc special cases") {
    std::vector<Sample> s{{Decision{{1, 0}}, 5.0}, {Decision{{0, 1}}, 5.0}};
    for (double v : grad_mc(Scores{{0.0, 0.0}}, s, 2.0)) CHECK(v == 0.0);
    const Scores z{{0.3, -1.2}};
    std::vector<Sample> t{{Decision{{1, 1}}, 3.0}, {Decision{{0, 1}}, -8.0}};
    const auto g = grad_mc(z, t, 0.0);
    const auto h = entropy_gradient(z);
    CHECK(g == h);
  }

  TEST_CASE("entropy gradient matches finite differences of the entropy") {
    const std::vector<double> z{-2.0, -0.3, 0.0, 0.8, 3.1};
    const auto fd = oracle::central_difference(
        [](const std::vector<double>& x) { return -bernoulli_entropy(Scores{x}); }, z, 1e-5);
    const auto g = entropy_gradient(Scores{z});
    for (std::size_t k = 0; k < z.size(); ++k) CHECK(std::abs(g[k] - fd[k]) < 1e-7);
  }

  TEST_CASE("filter values") {
    const double tau = 20.0;
    std::vector<Sample> s{{{}, 5.0}, {{}, 5.0 + 10 * tau}, {{}, 17.0}};
    const auto ft = filtered_scores(s, tau);
    CHECK(ft[0] == -0.5);
    CHECK(ft[1] == doctest::Approx(-4.5397868702434395e-05).epsilon(1e-9));
    CHECK(ft[2] > -0.5);
    CHECK(ft[2] < 0.0);
  }

  TEST_CASE("all-equal round reduces to entropy plus a constant filter") {
    const Scores z{{0.4, -0.9}};
    std::vector<Sample> s{{Decision{{1, 0}}, 3.0}, {Decision{{1, 1}}, 3.0}, {Decision{{0, 0}}, 3.0}};
    const double beta = 0.1;
    const auto g = grad_fmc(z, s, beta, 20.0);
    const auto h = entropy_gradient(z);
    for (std::size_t e = 0; e < 2; ++e) {
      double m = 0.0;
      for (const auto& x : s) m += x.y.states[e] - sigmoid(z.logits[e]);
      m /= 3.0;
      CHECK(g[e] == doctest::Approx(h[e] + beta * -0.5 * m).epsilon(1e-12));
    }
  }

  TEST_CASE("memory-table gradient") {
    for (double v : grad_mt(Scores{{0, 0, 0}}, Decision{{1, 1, 1}}, 1.0)) CHECK(v == -0.25);
    const Decision y{{1, 0, 1}};
    for (double v : grad_mt(Scores{{2.0, -2.0, 2.0}}, y, 2.0)) CHECK(v == 0.0);
  }

  TEST_CASE("memory table update requires strict improvement") {
    MemoryTable t;
    CHECK_THROWS_AS(t.update("c", {}), Error);
    t.set("c", {Decision{{1, 1}}, -10.0});
    std::vector<Sample> same{{Decision{{0, 1}}, -10.0}};
    CHECK(t.update("c", same).best == Decision{{1, 1}});
    std::vector<Sample> better{{Decision{{0, 1}}, -10.5}, {Decision{{1, 0}}, -9.0}};
    CHECK(t.update("c", better).best == Decision{{0, 1}});
    CHECK(t.get("c")->f == -10.5);
  }

  TEST_CASE("memory table persists") {
    MemoryTable t;
    t.set("x", {Decision{{1, 0, 1}}, -123.456789});
    t.set("y", {Decision{{0}}, 1.0 / 3.0});
    const auto path = fx::scratch("mem") / "memory.tsv";
    t.save(path.string());
    const auto u = MemoryTable::load(path.string());
    CHECK(u.size() == 2);
    CHECK(u.get("x")->best == Decision{{1, 0, 1}});
    CHECK(u.get("y")->f == 1.0 / 3.0);
  }

  TEST_CASE("most probable decision") {
    CHECK(most_probable_decision(Scores{{2.3, -0.1, 7}}) == Decision{{1, 0, 1}});
    CHECK(most_probable_decision(Scores{{0, 0}}) == Decision{{1, 1}});
  }

  TEST_CASE("most probable decision agrees with enumeration and scaling") {
    std::mt19937_64 rng(47);
    std::normal_distribution<double> n(0.0, 2.0);
    for (int i = 0; i < 50; ++i) {
      Scores z{{n(rng), n(rng), n(rng), n(rng)}};
      std::uint64_t arg = 0;
      double best = -1e300;
      for (std::uint64_t b = 0; b < 16; ++b) {
        const double lp = rho_log_prob(z, decision_from_bits(b, 4));
        if (lp > best) {
          best = lp;
          arg = b;
        }
      }
      CHECK(most_probable_decision(z) == decision_from_bits(arg, 4));
      Scores w = z;
      for (auto& v : w.logits) v *= 3.7;
      CHECK(most_probable_decision(w) == most_probable_decision(z));
    }
  }
}
