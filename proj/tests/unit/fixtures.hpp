#pragma once
// Small hand-built grids shared by the unit suites.
#include <filesystem>
#include <string>

#include "osr/h2mg.hpp"

namespace fx {

// gen 100 MW at address 0 (Z1), load 100 MW at address 1 (Z2), one border
// line 0 -> 1 with X = 0.1 and F_bar = 150 MW.
inline osr::Grid two_address() {
  osr::Grid g;
  g.context_id = "two";
  g.addresses = {0, 1};
  g.generators.push_back({0, 100.0, true, false});
  g.loads.push_back({1, 100.0, false, true});
  g.lines.push_back({0, 1, 150.0, 0.1, +1, true});
  return g;
}

// Same, with the load moved behind one switch 1 -> 2.
inline osr::Grid two_address_series_switch() {
  osr::Grid g = two_address();
  g.addresses = {0, 1, 2};
  g.loads[0].port = 2;
  g.switches.push_back({1, 2, "s"});
  osr::canonicalize(g);
  return g;
}

// Toy case: two substations of three addresses joined by two-switch chains,
// plus two single-address stations; all-closed gives four buses.
inline osr::Grid toy_four_bus() {
  osr::Grid g;
  g.context_id = "toy";
  g.addresses = {0, 1, 2, 3, 4, 5, 6, 7};
  g.generators.push_back({0, 200.0, true, false});
  g.generators.push_back({6, 50.0, true, false});
  g.loads.push_back({3, 150.0, false, true});
  g.loads.push_back({7, 100.0, false, true});
  g.switches.push_back({0, 1, "A"});
  g.switches.push_back({1, 2, "A"});
  g.switches.push_back({3, 4, "B"});
  g.switches.push_back({4, 5, "B"});
  g.lines.push_back({2, 5, 120.0, 0.05, +1, true});
  g.lines.push_back({0, 6, 120.0, 0.05, 0, true});
  g.lines.push_back({1, 3, 120.0, 0.05, +1, true});
  g.lines.push_back({5, 7, 120.0, 0.05, 0, true});
  osr::canonicalize(g);
  return g;
}

inline std::filesystem::path data_dir() { return OSR_TEST_DATA_DIR; }

inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("osr-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fx
