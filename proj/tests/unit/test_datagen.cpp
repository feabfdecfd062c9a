#include <cmath>
#include <fstream>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "osr/datagen.hpp"
#include "osr/error.hpp"
#include "osr/io.hpp"

using namespace osr;

namespace {
BaseCase base12() { return load_base_case(fx::data_dir() / "base12.json"); }

const char* kOneType1 = R"({
  "format": "osr.basecase/1", "name": "one",
  "substation_types": {"type1": {"nodes": 5, "switches": [[3,0],[4,1],[0,2],[2,1]]}},
  "substations": [{"id": "x", "type": "type1", "zone": 1}],
  "generators": [{"substation": "x", "node": 0, "P": 10}],
  "loads": [{"substation": "x", "node": 1, "P": 10}],
  "lines": [],
  "thermal_limits": {"Z1": 100, "Z2": 100, "border": 100}
})";
}  // namespace

TEST_SUITE("datagen") {
  TEST_CASE("twelve substations and 57 switches") {
    const auto b = base12();
    CHECK(b.substations.size() == 12);
    const Grid g = build_base_case(b);
    CHECK(g.num_switches() == 57);
    CHECK(validate_grid(g).empty());
    std::size_t type1 = 0;
    for (const auto& s : b.substations) type1 += s.type == "type1" ? 1 : 0;
    CHECK(type1 == 3);
  }

  TEST_CASE("single Type-1 template") {
    const auto b = parse_base_case(kOneType1);
    CHECK(build_base_case(b).num_switches() == b.types.at("type1").switches.size());
  }

  TEST_CASE("line to an absent substation is an error") {
    std::string t = kOneType1;
    t.replace(t.find("\"lines\": []"), 11, R"("lines": [{"from":"x","from_node":0,"to":"nowhere","to_node":0,"X":0.05}])");
    CHECK_THROWS_AS(build_base_case(parse_base_case(t)), Error);
  }

  TEST_CASE("zero noise reproduces the base injections bitwise") {
    const auto b = base12();
    const Grid g0 = build_base_case(b);
    Rng rng(5);
    const Grid g = sample_context(b, NoiseConfig::zero(), rng);
    REQUIRE(g.generators.size() == g0.generators.size());
    for (std::size_t i = 0; i < g.generators.size(); ++i) CHECK(g.generators[i].p == g0.generators[i].p);
    for (std::size_t i = 0; i < g.loads.size(); ++i) CHECK(g.loads[i].p == g0.loads[i].p);
    for (const auto& l : g.lines) CHECK(l.in_service);
  }

  TEST_CASE("thermal limits are shared within each group") {
    const auto b = base12();
    for (int i = 0; i < 200; ++i) {
      Rng rng = context_rng(9, i);
      const Grid g = sample_context(b, NoiseConfig{}, rng);
      CHECK(validate_grid(g).empty());
      std::set<double> z1, z2, border;
      for (const auto& l : g.lines) {
        if (!l.in_service) continue;
        const int zone = b.substations[static_cast<std::size_t>(l.port_from / 100)].zone;
        (l.orientation != 0 ? border : zone == 1 ? z1 : z2).insert(l.f_max);
      }
      CHECK(z1.size() <= 1);
      CHECK(z2.size() <= 1);
      CHECK(border.size() == 1);
    }
  }

  TEST_CASE("gen total mean within three standard errors") {
    const auto b = base12();
    double base_total = 0.0;
    for (const auto& e : b.generators) base_total += e.p;
    const int n = 10000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      Rng rng = context_rng(17, i);
      sum += total_power(sample_context(b, NoiseConfig{}, rng).generators);
    }
    CHECK(std::abs(sum / n - base_total) <= 3.0 * 500.0 / std::sqrt(n));
  }

  TEST_CASE("dataset determinism, manifest and checksums") {
    const auto b = base12();
    const auto d1 = fx::scratch("gen1"), d2 = fx::scratch("gen2");
    const auto m1 = generate_dataset(b, NoiseConfig{}, 100, 7, d1);
    const auto m2 = generate_dataset(b, NoiseConfig{}, 100, 7, d2);
    REQUIRE(m1.contexts.size() == 100);
    for (std::size_t i = 0; i < 100; ++i) CHECK(m1.contexts[i].sha256 == m2.contexts[i].sha256);
    CHECK(load_dataset(d1).size() == 100);
    const auto m = load_manifest(d1);
    CHECK(m.seed == 7);
    CHECK(m.noise.sigma_t == 500.0);
    std::ofstream(d1 / m1.contexts[3].file, std::ios::app) << " ";
    CHECK_THROWS_AS(load_dataset(d1), Error);
  }

  TEST_CASE("empty dataset") {
    const auto d = fx::scratch("gen0");
    CHECK(generate_dataset(base12(), NoiseConfig{}, 0, 1, d).contexts.empty());
    CHECK(load_dataset(d).empty());
  }

  TEST_CASE("profiles") {
    const auto desk = profile_splits("desk");
    REQUIRE(desk.size() == 3);
    CHECK(desk[0].n == 2000);
    CHECK(desk[1].n == 500);
    CHECK(desk[2].n == 500);
    CHECK(profile_splits("paper")[0].n == 850000);
    CHECK_THROWS_AS(profile_splits("other"), Error);
  }

  TEST_CASE("invalid noise") {
    NoiseConfig n;
    n.p_one_line = 0.95;
    CHECK_THROWS_AS(n.check(), Error);
    n = NoiseConfig{};
    n.sigma_f = -1;
    CHECK_THROWS_AS(n.check(), Error);
  }
}
