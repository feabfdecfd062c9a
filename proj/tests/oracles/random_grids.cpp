#include "random_grids.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace oracle {

osr::Grid random_grid(std::mt19937_64& rng, const RandomGridSpec& spec) {
  std::uniform_int_distribution<int> na_d(spec.min_addresses, spec.max_addresses);
  std::uniform_int_distribution<int> ns_d(spec.min_switches, spec.max_switches);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int na = std::max(2, na_d(rng));
  osr::Grid g;
  g.context_id = "random";
  std::vector<int> zone(na);
  for (int a = 0; a < na; ++a) {
    g.addresses.push_back(a);
    zone[a] = u(rng) < 0.5 ? 1 : 2;
  }
  zone[0] = 1;
  zone[1] = 2;
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto addr_in = [&](int z) {
    std::vector<int> c;
    for (int a = 0; a < na; ++a) {
      if (zone[a] == z) c.push_back(a);
    }
    return c[static_cast<std::size_t>(pick(0, static_cast<int>(c.size()) - 1))];
  };
  auto inj = [&](int a, double p) { return osr::Injection{a, p, zone[a] == 1, zone[a] == 2}; };
  g.generators.push_back(inj(addr_in(1), 50 + 200 * u(rng)));
  g.loads.push_back(inj(addr_in(2), 50 + 200 * u(rng)));
  for (int k = pick(0, 2); k > 0; --k) g.generators.push_back(inj(pick(0, na - 1), 20 + 100 * u(rng)));
  for (int k = pick(0, 2); k > 0; --k) g.loads.push_back(inj(pick(0, na - 1), 20 + 100 * u(rng)));

  const int ns = ns_d(rng);
  for (int e = 0; e < ns; ++e) {
    const int a = pick(0, na - 1);
    int b = pick(0, na - 2);
    if (b >= a) ++b;
    g.switches.push_back({a, b, "s" + std::to_string(pick(0, 1))});
  }
  const int nl = pick(1, std::max(1, spec.max_lines));
  for (int k = 0; k < nl; ++k) {
    const int a = pick(0, na - 1);
    int b = pick(0, na - 2);
    if (b >= a) ++b;
    int s = 0;
    if (zone[a] != zone[b]) s = zone[a] == 1 ? 1 : -1;
    g.lines.push_back({a, b, 40 + 260 * u(rng), 0.02 + 0.18 * u(rng), s, u(rng) >= spec.p_out_of_service});
  }
  osr::canonicalize(g);
  return g;
}

osr::Decision random_decision(std::mt19937_64& rng, std::size_t n) {
  osr::Decision d;
  std::bernoulli_distribution b(0.5);
  for (std::size_t i = 0; i < n; ++i) d.states.push_back(b(rng) ? 1 : 0);
  return d;
}

osr::Grid permuted_grid(const osr::Grid& grid, std::mt19937_64& rng, std::vector<std::size_t>& perm_out) {
  // New labels: a random permutation of the old ones plus an offset.
  std::vector<osr::Address> labels = grid.addresses;
  std::shuffle(labels.begin(), labels.end(), rng);
  std::map<osr::Address, osr::Address> relabel;
  for (std::size_t i = 0; i < labels.size(); ++i) relabel[grid.addresses[i]] = labels[i] + 1000;

  osr::Grid g = grid;
  for (auto& a : g.addresses) a = relabel[a];
  for (auto& e : g.generators) e.port = relabel[e.port];
  for (auto& e : g.loads) e.port = relabel[e.port];
  for (auto& l : g.lines) {
    l.port_from = relabel[l.port_from];
    l.port_to = relabel[l.port_to];
  }
  // Tag switches so their new position can be recovered; substation ids keep
  // their original order as the prefix.
  for (std::size_t e = 0; e < g.switches.size(); ++e) {
    auto& s = g.switches[e];
    s.port_from = relabel[s.port_from];
    s.port_to = relabel[s.port_to];
  }
  std::vector<std::size_t> order(g.switches.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<osr::Switch> sw;
  for (auto i : order) sw.push_back(g.switches[i]);
  g.switches = sw;
  std::shuffle(g.generators.begin(), g.generators.end(), rng);
  std::shuffle(g.loads.begin(), g.loads.end(), rng);
  std::shuffle(g.lines.begin(), g.lines.end(), rng);

  // Track where each original switch lands after canonicalization.
  std::vector<std::size_t> tag(g.switches.size());
  for (std::size_t k = 0; k < order.size(); ++k) tag[k] = order[k];
  std::vector<std::size_t> idx(g.switches.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
    const auto& a = g.switches[x];
    const auto& b = g.switches[y];
    if (a.substation != b.substation) return a.substation < b.substation;
    if (a.port_from != b.port_from) return a.port_from < b.port_from;
    return a.port_to < b.port_to;
  });
  osr::canonicalize(g);
  perm_out.assign(g.switches.size(), 0);
  for (std::size_t k = 0; k < idx.size(); ++k) perm_out[tag[idx[k]]] = k;
  std::sort(g.addresses.begin(), g.addresses.end());
  return g;
}

}  // namespace oracle
