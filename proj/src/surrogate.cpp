#include "osr/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "osr/error.hpp"
#include "osr/powerlp.hpp"

namespace osr {

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

double softplus(double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

namespace {

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) fail(ErrorCode::Invalid, std::string(what) + ": length mismatch");
}

}  // namespace

double rho_log_prob(const Scores& z, const Decision& y) {
  require_same(z.size(), y.size(), "rho_log_prob");
  double s = 0.0;
  for (std::size_t e = 0; e < z.size(); ++e) s += (y.states[e] ? z.logits[e] : 0.0) - softplus(z.logits[e]);
  return s;
}

Decision most_probable_decision(const Scores& z) {
  Decision d;
  d.states.reserve(z.size());
  for (double v : z.logits) d.states.push_back(v >= 0.0 ? 1 : 0);
  return d;
}

namespace {

// Component labels of the addresses touched by `idx`, using switches in `idx`
// that are closed in `states` (or all of them when `all_closed`).
std::vector<int> local_labels(const Grid& g, const std::vector<std::uint8_t>& states,
                              std::span<const std::size_t> idx, bool all_closed) {
  std::vector<Address> addr;
  for (auto e : idx) {
    addr.push_back(g.switches[e].port_from);
    addr.push_back(g.switches[e].port_to);
  }
  std::sort(addr.begin(), addr.end());
  addr.erase(std::unique(addr.begin(), addr.end()), addr.end());
  std::vector<std::size_t> parent(addr.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto pos = [&](Address a) {
    return static_cast<std::size_t>(std::lower_bound(addr.begin(), addr.end(), a) - addr.begin());
  };
  for (auto e : idx) {
    if (!all_closed && !states[e]) continue;
    const auto ra = find(pos(g.switches[e].port_from)), rb = find(pos(g.switches[e].port_to));
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<int> labels(addr.size());
  std::vector<int> map(addr.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < addr.size(); ++i) {
    const auto r = find(i);
    if (map[r] < 0) map[r] = next++;
    labels[i] = map[r];
  }
  return labels;
}

bool has_opening(const Decision& d, std::span<const std::size_t> idx) {
  return std::any_of(idx.begin(), idx.end(), [&](std::size_t e) { return d.states[e] == 0; });
}

}  // namespace

bool substation_noop(const Grid& grid, const Decision& decision, std::span<const std::size_t> idx) {
  return local_labels(grid, decision.states, idx, false) == local_labels(grid, decision.states, idx, true);
}

bool is_noop_equivalent(const Grid& grid, const Decision& decision) {
  require_same(grid.switches.size(), decision.size(), "is_noop_equivalent");
  // Every substation locally unchanged implies the global partition is too.
  bool local = true;
  for (const auto& s : substation_groups(grid)) {
    if (!substation_noop(grid, decision, s.switch_indices)) {
      local = false;
      break;
    }
  }
  if (local) return true;
  // A local split can still be bridged through switches of another
  // substation sharing an address.
  return bus_partition(grid, decision) == bus_partition(grid, Decision::all_closed(decision.size()));
}

std::vector<Decision> sample_decisions(const Scores& z, const Grid& grid, std::size_t count,
                                       const SamplingPolicy& policy, Rng& rng) {
  require_same(z.size(), grid.switches.size(), "sample_decisions");
  if (count < 1) fail(ErrorCode::Invalid, "sample_decisions: need at least one sample");
  if (policy.p_one < 0.0 || policy.p_two < 0.0 || policy.p_one + policy.p_two > 1.0) {
    fail(ErrorCode::Config, "sample_decisions: perturbation probabilities must satisfy p1 + p2 <= 1");
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t n = z.size();
  std::vector<double> prob(n);
  for (std::size_t e = 0; e < n; ++e) prob[e] = sigmoid(z.logits[e]);
  const auto groups = policy.reject_noop ? substation_groups(grid) : std::vector<SubstationGroup>{};
  std::vector<Decision> out;
  out.reserve(count);

  if (policy.mode == SamplingMode::IndependentBernoulli) {
    for (std::size_t s = 0; s < count; ++s) {
      Decision y{std::vector<std::uint8_t>(n)};
      for (std::size_t e = 0; e < n; ++e) y.states[e] = unif(rng) < prob[e] ? 1 : 0;
      for (const auto& g : groups) {
        int tries = 0;
        while (has_opening(y, g.switch_indices) && substation_noop(grid, y, g.switch_indices)) {
          if (++tries > kMaxRejections) {
            fail(ErrorCode::Numerical, "sample_decisions: no-op rejection failed " + std::to_string(kMaxRejections) +
                                           " times in substation " + g.id);
          }
          for (auto e : g.switch_indices) y.states[e] = unif(rng) < prob[e] ? 1 : 0;
        }
      }
      out.push_back(std::move(y));
    }
    return out;
  }

  const Decision mode = most_probable_decision(z);
  const auto mode_partition = policy.reject_noop ? bus_partition(grid, mode) : BusPartition{};
  std::vector<std::size_t> closed;
  for (std::size_t e = 0; e < n; ++e) {
    if (mode.states[e]) closed.push_back(e);
  }
  for (std::size_t s = 0; s < count; ++s) {
    const double u = unif(rng);
    const std::size_t extra = std::min(closed.size(), std::size_t(u < policy.p_one ? 1 : u < policy.p_one + policy.p_two ? 2 : 0));
    Decision y = mode;
    int tries = 0;
    for (;;) {
      y = mode;
      // Partial Fisher-Yates over the closed switches.
      auto pool = closed;
      for (std::size_t k = 0; k < extra; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
        std::swap(pool[k], pool[pick(rng)]);
        y.states[pool[k]] = 0;
      }
      if (extra == 0 || !policy.reject_noop || !(bus_partition(grid, y) == mode_partition)) break;
      if (++tries > kMaxRejections) {
        fail(ErrorCode::Numerical, "sample_decisions: no-op rejection failed " + std::to_string(kMaxRejections) +
                                       " times around the mode");
      }
    }
    out.push_back(std::move(y));
  }
  return out;
}

std::vector<double> entropy_gradient(const Scores& z) {
  std::vector<double> g(z.size());
  for (std::size_t e = 0; e < z.size(); ++e) {
    const double v = z.logits[e];
    g[e] = sigmoid(v) * sigmoid(-v) * v;
  }
  return g;
}

double bernoulli_entropy(const Scores& z) {
  double h = 0.0;
  for (double v : z.logits) {
    // H = softplus(v) - v sigma(v)
    h += softplus(v) - v * sigmoid(v);
  }
  return h;
}

namespace {

std::vector<double> score_function(const Scores& z, std::span<const Sample> samples, std::span<const double> f,
                                   double beta) {
  if (samples.empty()) fail(ErrorCode::Invalid, "gradient estimator: need at least one sample");
  auto g = entropy_gradient(z);
  const std::size_t n = z.size();
  std::vector<double> acc(n, 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require_same(samples[i].y.size(), n, "gradient estimator");
    for (std::size_t e = 0; e < n; ++e) acc[e] += f[i] * (samples[i].y.states[e] - sigmoid(z.logits[e]));
  }
  const double scale = beta / static_cast<double>(samples.size());
  for (std::size_t e = 0; e < n; ++e) g[e] += scale * acc[e];
  return g;
}

}  // namespace

std::vector<double> grad_mc(const Scores& z, std::span<const Sample> samples, double beta) {
  std::vector<double> f;
  f.reserve(samples.size());
  for (const auto& s : samples) f.push_back(s.f);
  return score_function(z, samples, f, beta);
}

std::vector<double> filtered_scores(std::span<const Sample> samples, double tau) {
  if (!(tau > 0.0)) fail(ErrorCode::Config, "filtered MC: tau must be positive");
  if (samples.empty()) return {};
  double fmin = samples.front().f;
  for (const auto& s : samples) fmin = std::min(fmin, s.f);
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(-sigmoid(-(s.f - fmin) / tau));
  return out;
}

std::vector<double> grad_fmc(const Scores& z, std::span<const Sample> samples, double beta, double tau) {
  const auto ft = filtered_scores(samples, tau);
  return score_function(z, samples, ft, beta);
}

std::vector<double> grad_mt(const Scores& z, const Decision& y_mem, double beta) {
  require_same(z.size(), y_mem.size(), "grad_mt");
  std::vector<double> g(z.size());
  for (std::size_t e = 0; e < z.size(); ++e) {
    const double v = z.logits[e];
    const double target = beta * (2.0 * y_mem.states[e] - 1.0);
    g[e] = sigmoid(v) * sigmoid(-v) * (v - target);
  }
  return g;
}

Decision decision_from_bits(std::uint64_t bits, std::size_t n) {
  Decision d{std::vector<std::uint8_t>(n)};
  for (std::size_t e = 0; e < n; ++e) d.states[e] = (bits >> e) & 1u;
  return d;
}

namespace {

void check_table(const Scores& z, const ObjectiveTable& f) {
  if (z.size() > kMaxExactSwitches) fail(ErrorCode::Invalid, "exact surrogate: enumeration cap exceeded");
  if (f.size() != (std::size_t{1} << z.size())) fail(ErrorCode::Invalid, "exact surrogate: table size mismatch");
}

}  // namespace

double exact_objective(const Scores& z, const ObjectiveTable& f, double beta) {
  check_table(z, f);
  const std::size_t n = z.size();
  double neg_entropy = 0.0, expected = 0.0;
  double fmin = *std::min_element(f.begin(), f.end());
  double zsum = 0.0;  // sum exp(-beta (f - fmin))
  for (std::uint64_t bits = 0; bits < f.size(); ++bits) {
    const double lp = rho_log_prob(z, decision_from_bits(bits, n));
    const double p = std::exp(lp);
    neg_entropy += p * lp;
    expected += p * f[bits];
    zsum += std::exp(-beta * (f[bits] - fmin));
  }
  const double log_z = -beta * fmin + std::log(zsum);
  return neg_entropy + beta * expected + log_z;
}

std::vector<double> exact_gradient(const Scores& z, const ObjectiveTable& f, double beta) {
  check_table(z, f);
  const std::size_t n = z.size();
  auto g = entropy_gradient(z);
  std::vector<double> sig(n);
  for (std::size_t e = 0; e < n; ++e) sig[e] = sigmoid(z.logits[e]);
  std::vector<double> acc(n, 0.0);
  for (std::uint64_t bits = 0; bits < f.size(); ++bits) {
    const auto y = decision_from_bits(bits, n);
    const double p = std::exp(rho_log_prob(z, y));
    for (std::size_t e = 0; e < n; ++e) acc[e] += p * f[bits] * (y.states[e] - sig[e]);
  }
  for (std::size_t e = 0; e < n; ++e) g[e] += beta * acc[e];
  return g;
}

double infeasible_penalty(const Grid& grid, double f_all_closed) {
  return f_all_closed + total_power(grid.generators);
}

ObjectiveTable objective_table(const Grid& grid) {
  const std::size_t n = grid.switches.size();
  if (n > kMaxExactSwitches) fail(ErrorCode::Invalid, "objective_table: enumeration cap exceeded");
  const auto closed = exchange_capacity(grid, Decision::all_closed(n));
  const double f_closed = closed.feasible() ? -closed.capacity_mw : 0.0;
  const double penalty = infeasible_penalty(grid, f_closed);
  ObjectiveTable t(std::size_t{1} << n);
  for (std::uint64_t bits = 0; bits < t.size(); ++bits) {
    const auto r = exchange_capacity(grid, decision_from_bits(bits, n));
    t[bits] = r.feasible() ? -r.capacity_mw : penalty;
  }
  return t;
}

MemoryEntry MemoryTable::update(const std::string& id, std::span<const Sample> candidates) {
  std::lock_guard lock(mu_);
  auto it = entries_.find(id);
  const Sample* best = nullptr;
  for (const auto& c : candidates) {
    if (!best || c.f < best->f) best = &c;
  }
  if (it == entries_.end()) {
    if (!best) fail(ErrorCode::Infeasible, "memory table: no entry and no candidate for context " + id);
    it = entries_.emplace(id, MemoryEntry{best->y, best->f}).first;
  } else if (best && best->f < it->second.f) {
    it->second = MemoryEntry{best->y, best->f};
  }
  return it->second;
}

void MemoryTable::set(const std::string& id, MemoryEntry entry) {
  std::lock_guard lock(mu_);
  entries_[id] = std::move(entry);
}

std::optional<MemoryEntry> MemoryTable::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::size_t MemoryTable::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void MemoryTable::save(const std::string& path) const {
  std::lock_guard lock(mu_);
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write memory table " + path);
  out << "# osr.memory/1\n";
  char buf[64];
  for (const auto& [id, e] : entries_) {
    std::string bits;
    for (auto s : e.best.states) bits.push_back(s ? '1' : '0');
    std::snprintf(buf, sizeof buf, "%a", e.f);
    out << id << '\t' << (bits.empty() ? "-" : bits) << '\t' << buf << '\n';
  }
}

MemoryTable::MemoryTable(MemoryTable&& other) noexcept {
  std::lock_guard lock(other.mu_);
  entries_ = std::move(other.entries_);
}

MemoryTable& MemoryTable::operator=(MemoryTable&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mu_, other.mu_);
    entries_ = std::move(other.entries_);
  }
  return *this;
}

MemoryTable MemoryTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open memory table " + path);
  MemoryTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string id, bits, fs;
    if (!std::getline(is, id, '\t') || !std::getline(is, bits, '\t') || !std::getline(is, fs)) {
      fail(ErrorCode::Invalid, "memory table: malformed line: " + line);
    }
    MemoryEntry e;
    if (bits != "-") {
      for (char c : bits) e.best.states.push_back(c == '1' ? 1 : 0);
    }
    e.f = std::strtod(fs.c_str(), nullptr);
    t.entries_[id] = std::move(e);
  }
  return t;
}

}  // namespace osr
