#pragma once

// Continuous surrogate of the switching problem.
//
// A score vector z defines independent Bernoulli closure probabilities
// sigma(z). The surrogate objective is the KL divergence from that policy to
// the Boltzmann distribution exp(-beta f) / Z_beta over decisions, with
// f(y;x) = -capacity in MW (lower is better).

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "osr/h2mg.hpp"

namespace osr {

using Rng = std::mt19937_64;

double sigmoid(double v);
// log(1 + exp(v)) without overflow.
double softplus(double v);

// log rho(y|z) = sum_e [ y_e z_e - log(1 + exp(z_e)) ]
double rho_log_prob(const Scores& z, const Decision& y);

// y_e = 1 iff z_e >= 0 (ties resolve to closed).
Decision most_probable_decision(const Scores& z);

// Whether one substation's local pattern leaves its all-closed bus partition
// unchanged.
bool substation_noop(const Grid& grid, const Decision& decision, std::span<const std::size_t> switch_indices);

// True iff the bus partition of `decision` equals the all-closed partition.
bool is_noop_equivalent(const Grid& grid, const Decision& decision);

enum class SamplingMode { IndependentBernoulli, PerturbAroundMode };

struct SamplingPolicy {
  SamplingMode mode = SamplingMode::IndependentBernoulli;
  bool reject_noop = false;
  double p_one = 0.3;  // perturb mode: open one extra switch
  double p_two = 0.4;  // perturb mode: open two extra switches
};

inline constexpr int kMaxRejections = 1000;

// Rejection (when enabled) resamples a substation whose pattern opens at
// least one switch yet leaves the local partition unchanged; in perturb mode
// it redraws extra openings that leave the partition of the mode unchanged.
// Failing kMaxRejections consecutive times raises ErrorCode::Numerical.
std::vector<Decision> sample_decisions(const Scores& z, const Grid& grid, std::size_t count,
                                       const SamplingPolicy& policy, Rng& rng);

struct Sample {
  Decision y;
  double f = 0.0;  // MW, lower is better
};

// sigma(z) * sigma(-z) * z: gradient of the negative Bernoulli entropy.
std::vector<double> entropy_gradient(const Scores& z);
double bernoulli_entropy(const Scores& z);

// Plain score-function estimator.
std::vector<double> grad_mc(const Scores& z, std::span<const Sample> samples, double beta);

// Filtered scores: -sigmoid(-(f_i - min_j f_j) / tau).
std::vector<double> filtered_scores(std::span<const Sample> samples, double tau);
std::vector<double> grad_fmc(const Scores& z, std::span<const Sample> samples, double beta, double tau);

// sigma(z) * sigma(-z) * (z - beta * (2 y_mem - 1)).
std::vector<double> grad_mt(const Scores& z, const Decision& y_mem, double beta);

// Exact quantities by enumerating every decision (at most kMaxExactSwitches).
inline constexpr std::size_t kMaxExactSwitches = 16;
using ObjectiveTable = std::vector<double>;  // f indexed by decision bits, bit e = y_e

Decision decision_from_bits(std::uint64_t bits, std::size_t n);
double exact_objective(const Scores& z, const ObjectiveTable& f, double beta);
std::vector<double> exact_gradient(const Scores& z, const ObjectiveTable& f, double beta);
// Builds the table from the exchange LP, infeasible decisions penalized.
ObjectiveTable objective_table(const Grid& grid);

// f value assigned to infeasible decisions: f(all-closed) + sum of generator powers.
double infeasible_penalty(const Grid& grid, double f_all_closed);

struct MemoryEntry {
  Decision best;
  double f = 0.0;
};

// Per-context best decision found so far. Updates for distinct contexts are
// independent; concurrent updates of one context are serialized internally.
class MemoryTable {
 public:
  MemoryTable() = default;
  MemoryTable(MemoryTable&& other) noexcept;
  MemoryTable& operator=(MemoryTable&& other) noexcept;

  // Replaces the stored decision iff a candidate is strictly better. Throws
  // ErrorCode::Infeasible when no entry exists and there are no candidates.
  MemoryEntry update(const std::string& context_id, std::span<const Sample> candidates);
  void set(const std::string& context_id, MemoryEntry entry);
  std::optional<MemoryEntry> get(const std::string& context_id) const;
  std::size_t size() const;

  // One line per context: "<context_id> <bits> <f>" with f as a hex float.
  void save(const std::string& path) const;
  static MemoryTable load(const std::string& path);

 private:
  mutable std::mutex mu_;
  std::map<std::string, MemoryEntry> entries_;
};

}  // namespace osr
