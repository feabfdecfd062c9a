#include <algorithm>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "osr/error.hpp"
#include "osr/io.hpp"
#include "osr/normalizer.hpp"
#include "random_grids.hpp"
#include "union_find.hpp"

using namespace osr;

namespace {
bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}
}  // namespace

TEST_SUITE("h2mg") {
  TEST_CASE("minimal two-address grid is valid") { CHECK(validate_grid(fx::two_address()).empty()); }

  TEST_CASE("switch port to an absent address is a dangling port") {
    Grid g = fx::two_address();
    g.switches.push_back({0, 99, "s"});
    CHECK(mentions(validate_grid(g), "dangling port"));
  }

  TEST_CASE("generator in both zones violates the zone flags") {
    Grid g = fx::two_address();
    g.generators[0].in_z2 = true;
    CHECK(mentions(validate_grid(g), "zone flags"));
  }

  TEST_CASE("toy case: four buses all-closed, five with the second switch open") {
    const Grid g = fx::toy_four_bus();
    CHECK(bus_partition(g, Decision{{1, 1, 1, 1}}).num_buses == 4);
    CHECK(bus_partition(g, Decision{{1, 0, 1, 1}}).num_buses == 5);
  }

  TEST_CASE("zero switches: one bus per address") {
    const Grid g = fx::two_address();
    CHECK(bus_partition(g, Decision{}).num_buses == 2);
  }

  TEST_CASE("length mismatch is rejected") {
    CHECK_THROWS_AS(bus_partition(fx::toy_four_bus(), Decision{{1}}), Error);
  }

  TEST_CASE("partition matches breadth-first labelling on random grids") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
      const Grid g = oracle::random_grid(rng, {2, 9, 0, 10, 4, 0.1});
      const Decision y = oracle::random_decision(rng, g.num_switches());
      const auto p = bus_partition(g, y);
      CHECK(p.bus_of == oracle::components(g, y));
      CHECK(p.num_buses == oracle::count_components(g, y));
    }
  }

  TEST_CASE("canonical switch order is by substation then ports") {
    Grid g = fx::toy_four_bus();
    std::reverse(g.switches.begin(), g.switches.end());
    canonicalize(g);
    CHECK(g.switches[0].substation == "A");
    CHECK(g.switches[0].port_from == 0);
    CHECK(g.switches[3].substation == "B");
    CHECK(g.switches[3].port_from == 4);
  }

  TEST_CASE("grid and decision json round trip") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 20; ++i) {
      const Grid g = oracle::random_grid(rng);
      const Grid back = grid_from_json(grid_to_json(g));
      CHECK(grid_to_json(back) == grid_to_json(g));
      const Decision y = oracle::random_decision(rng, g.num_switches());
      std::string id;
      CHECK(decision_from_json(decision_to_json("c7", y), &id) == y);
      CHECK(id == "c7");
    }
  }

  TEST_CASE("sha256 of empty input") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  }
}

TEST_SUITE("normalizer") {
  TEST_CASE("uniform samples approximate the exact empirical CDF") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::vector<double> s(10000);
    for (auto& v : s) v = u(rng);
    const auto cdf = PiecewiseLinearCdf::fit(s, 100);
    std::vector<double> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    double worst = 0.0;
    for (std::size_t i = 0; i < sorted.size(); i += 7) {
      const double exact = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), sorted[i]) -
                                               sorted.begin()) / static_cast<double>(sorted.size());
      worst = std::max(worst, std::abs(cdf(sorted[i]) - exact));
      CHECK(std::abs(cdf(sorted[i]) - sorted[i] / 100.0) < 0.03);
    }
    CHECK(worst < 0.02);
  }

  TEST_CASE("observed minimum maps to 0, beyond maximum clamps to 1") {
    const auto cdf = PiecewiseLinearCdf::fit({3.0, 5.0, 9.0, 11.0}, 4);
    CHECK(cdf(3.0) == 0.0);
    CHECK(cdf(-100.0) == 0.0);
    CHECK(cdf(1e9) == 1.0);
  }

  TEST_CASE("constant channel maps to one half") {
    const auto cdf = PiecewiseLinearCdf::fit({4.0, 4.0, 4.0}, 10);
    CHECK(cdf(4.0) == 0.5);
  }

  TEST_CASE("monotone on random fits") {
    std::mt19937_64 rng(14);
    std::lognormal_distribution<double> d(0.0, 1.0);
    std::vector<double> s(500);
    for (auto& v : s) v = d(rng);
    const auto cdf = PiecewiseLinearCdf::fit(s, 17);
    double prev = -1.0;
    for (double v = -1.0; v < 20.0; v += 0.01) {
      CHECK(cdf(v) >= prev);
      prev = cdf(v);
    }
  }

  TEST_CASE("empty collection and too few knots are rejected") {
    CHECK_THROWS_AS(fit_normalizer({}, 10), Error);
    const std::vector<Grid> one{fx::two_address()};
    CHECK_THROWS_AS(fit_normalizer(one, 1), Error);
  }

  TEST_CASE("discrete channels pass through") {
    const std::vector<Grid> gs{fx::toy_four_bus()};
    const auto f = apply_normalizer(fit_normalizer(gs, 10), gs[0]);
    CHECK(f.gen.cols == kGenFeatures);
    CHECK(f.gen.at(0, 1) == 1.0);
    CHECK(f.gen.at(0, 2) == 0.0);
    CHECK(f.load.at(0, 2) == 1.0);
    CHECK(f.line.cols == kLineFeatures);
    CHECK(f.sw.rows == 4);
  }
}
