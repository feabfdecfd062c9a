#pragma once

// Hyper heterogeneous multi-graph model of a grid operating context.
//
// Hyper-edges of four classes (generators, loads, switches, lines) attach to
// integer addresses through class-specific ports. Closed switches merge
// addresses into electrical buses; lines never do.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace osr {

using Address = std::int64_t;

struct Injection {
  Address port = 0;
  double p = 0.0;  // MW
  bool in_z1 = false;
  bool in_z2 = false;
};

struct Switch {
  Address port_from = 0;
  Address port_to = 0;
  std::string substation;
};

struct Line {
  Address port_from = 0;
  Address port_to = 0;
  double f_max = 0.0;    // thermal limit, MW
  double x = 0.0;        // reactance, p.u.
  int orientation = 0;   // +1 from-side in Z1, -1 from-side in Z2, 0 internal
  bool in_service = true;
};

struct Grid {
  std::vector<Address> addresses;  // sorted, unique
  std::vector<Injection> generators;
  std::vector<Injection> loads;
  std::vector<Switch> switches;
  std::vector<Line> lines;
  std::string context_id;

  std::size_t num_switches() const { return switches.size(); }
  // Position of `a` in `addresses`, or -1.
  std::ptrdiff_t address_index(Address a) const;
};

// One entry per switch in the grid's switch ordering; 1 = closed, 0 = open.
struct Decision {
  std::vector<std::uint8_t> states;

  static Decision all_closed(std::size_t n) { return Decision{std::vector<std::uint8_t>(n, 1)}; }
  std::size_t size() const { return states.size(); }
  std::size_t openings() const;
  bool operator==(const Decision&) const = default;
  auto operator<=>(const Decision&) const = default;
};

// Logits of independent Bernoulli closure probabilities, one per switch.
struct Scores {
  std::vector<double> logits;
  std::size_t size() const { return logits.size(); }
};

// Sorts switches by (substation, port_from, port_to) and addresses ascending.
void canonicalize(Grid& grid);

// Empty result means the grid is valid.
std::vector<std::string> validate_grid(const Grid& grid);

// Connected components of the address graph whose edges are closed switches.
struct BusPartition {
  std::vector<int> bus_of;  // per address index; labels numbered by first occurrence
  int num_buses = 0;
  bool operator==(const BusPartition&) const = default;
};

BusPartition bus_partition(const Grid& grid, const Decision& decision);

// Substation identifiers in first-seen switch order, with switch indices.
struct SubstationGroup {
  std::string id;
  std::vector<std::size_t> switch_indices;
};
std::vector<SubstationGroup> substation_groups(const Grid& grid);

// Total active power of a class, optionally restricted to one zone.
double total_power(std::span<const Injection> items);
double zone_power(std::span<const Injection> items, int zone);

}  // namespace osr
