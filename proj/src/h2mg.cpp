#include "osr/h2mg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

#include "osr/error.hpp"

namespace osr {

std::ptrdiff_t Grid::address_index(Address a) const {
  auto it = std::lower_bound(addresses.begin(), addresses.end(), a);
  if (it == addresses.end() || *it != a) return -1;
  return it - addresses.begin();
}

std::size_t Decision::openings() const {
  return static_cast<std::size_t>(std::count(states.begin(), states.end(), std::uint8_t{0}));
}

void canonicalize(Grid& grid) {
  std::sort(grid.addresses.begin(), grid.addresses.end());
  grid.addresses.erase(std::unique(grid.addresses.begin(), grid.addresses.end()), grid.addresses.end());
  std::stable_sort(grid.switches.begin(), grid.switches.end(), [](const Switch& a, const Switch& b) {
    return std::tie(a.substation, a.port_from, a.port_to) < std::tie(b.substation, b.port_from, b.port_to);
  });
}

namespace {

void check_port(const Grid& g, Address a, const std::string& what, std::vector<std::string>& out) {
  if (g.address_index(a) < 0) {
    std::ostringstream os;
    os << "dangling port: " << what << " references absent address " << a;
    out.push_back(os.str());
  }
}

void check_injections(const Grid& g, const std::vector<Injection>& items, const char* cls,
                      std::vector<std::string>& out) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& e = items[i];
    const std::string name = std::string(cls) + "[" + std::to_string(i) + "]";
    check_port(g, e.port, name, out);
    if (e.in_z1 == e.in_z2) out.push_back("zone flags: " + name + " must belong to exactly one of Z1, Z2");
    if (!std::isfinite(e.p)) out.push_back("non-finite power: " + name);
  }
}

}  // namespace

std::vector<std::string> validate_grid(const Grid& g) {
  std::vector<std::string> out;
  if (!std::is_sorted(g.addresses.begin(), g.addresses.end()) ||
      std::adjacent_find(g.addresses.begin(), g.addresses.end()) != g.addresses.end()) {
    out.push_back("addresses: must be sorted and unique");
  }
  for (Address a : g.addresses) {
    if (a < 0) out.push_back("addresses: negative address " + std::to_string(a));
  }
  check_injections(g, g.generators, "gen", out);
  check_injections(g, g.loads, "load", out);
  for (std::size_t i = 0; i < g.switches.size(); ++i) {
    const auto name = "switch[" + std::to_string(i) + "]";
    check_port(g, g.switches[i].port_from, name, out);
    check_port(g, g.switches[i].port_to, name, out);
  }
  for (std::size_t i = 0; i < g.lines.size(); ++i) {
    const auto& l = g.lines[i];
    const auto name = "line[" + std::to_string(i) + "]";
    check_port(g, l.port_from, name, out);
    check_port(g, l.port_to, name, out);
    if (l.orientation < -1 || l.orientation > 1) out.push_back("orientation: " + name + " must be in {-1,0,+1}");
    if (l.in_service && !(l.x > 0.0 && std::isfinite(l.x))) out.push_back("reactance: " + name + " needs X > 0");
    if (l.in_service && !(l.f_max > 0.0 && std::isfinite(l.f_max))) {
      out.push_back("thermal limit: " + name + " needs F_bar > 0");
    }
  }
  return out;
}

BusPartition bus_partition(const Grid& g, const Decision& d) {
  if (d.size() != g.switches.size()) {
    fail(ErrorCode::Invalid, "bus_partition: decision has " + std::to_string(d.size()) + " entries, grid has " +
                                 std::to_string(g.switches.size()) + " switches");
  }
  const std::size_t n = g.addresses.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t i = 0; i < g.switches.size(); ++i) {
    if (!d.states[i]) continue;
    const auto a = g.address_index(g.switches[i].port_from);
    const auto b = g.address_index(g.switches[i].port_to);
    if (a < 0 || b < 0) fail(ErrorCode::Invalid, "bus_partition: dangling switch port");
    const auto ra = find(static_cast<std::size_t>(a));
    const auto rb = find(static_cast<std::size_t>(b));
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  BusPartition out;
  out.bus_of.assign(n, -1);
  std::vector<int> label(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = find(i);
    if (label[r] < 0) label[r] = out.num_buses++;
    out.bus_of[i] = label[r];
  }
  return out;
}

std::vector<SubstationGroup> substation_groups(const Grid& g) {
  std::vector<SubstationGroup> out;
  for (std::size_t i = 0; i < g.switches.size(); ++i) {
    const auto& id = g.switches[i].substation;
    auto it = std::find_if(out.begin(), out.end(), [&](const SubstationGroup& s) { return s.id == id; });
    if (it == out.end()) {
      out.push_back({id, {}});
      it = std::prev(out.end());
    }
    it->switch_indices.push_back(i);
  }
  return out;
}

double total_power(std::span<const Injection> items) {
  double s = 0.0;
  for (const auto& e : items) s += e.p;
  return s;
}

double zone_power(std::span<const Injection> items, int zone) {
  double s = 0.0;
  for (const auto& e : items) {
    if ((zone == 1 && e.in_z1) || (zone == 2 && e.in_z2)) s += e.p;
  }
  return s;
}

}  // namespace osr
