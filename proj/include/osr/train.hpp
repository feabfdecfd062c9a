#pragma once

// Amortized training loop, decision rules, and validation.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "osr/adam.hpp"
#include "osr/checkpoint.hpp"
#include "osr/gnn.hpp"
#include "osr/surrogate.hpp"

namespace osr {

enum class Estimator { Mc, Fmc, Mt };
Estimator estimator_from_string(const std::string& name);
std::string to_string(Estimator e);

struct TrainConfig {
  Estimator estimator = Estimator::Mt;
  double beta = 1.0;
  double tau = 20.0;  // filtered MC only
  int samples = 32;
  int batch = 8;
  int max_iterations = 2000;
  int validation_period = 1000;
  std::uint64_t seed = 0;
  std::string profile = "tiny";
  int knots = 100;
  SamplingPolicy sampling;
  AdamConfig adam;
  int threads = 1;

  // Published settings per estimator: fmc beta 0.1, tau 20, independent sampling
  // with no-op rejection; mt beta 1 with perturbation around the mode.
  static TrainConfig defaults_for(Estimator e);
  void check() const;
};

struct LogRecord {
  int iteration = 0;
  double mean_best_f = 0.0;  // minibatch mean of the sampled-best f (MW)
  double entropy = 0.0;      // minibatch mean Bernoulli entropy
  std::optional<double> validation_mw;
  double wall_s = 0.0;
};

std::string log_record_json(const LogRecord& r);

struct TrainResult {
  Checkpoint best;
  double best_validation_mw = 0.0;
  int best_iteration = 0;
  std::vector<LogRecord> log;
  int evaluations = 0;
};

// Called once per logged record, in order.
using LogSink = std::function<void(const LogRecord&)>;

// `memory` may be null unless the estimator is mt; it is read and updated
// in place (resume support).
TrainResult train(const TrainConfig& config, const std::vector<Grid>& train_set, const std::vector<Grid>& valid_set,
                  MemoryTable* memory = nullptr, const LogSink& sink = {});

// f(y;x) in MW with the infeasibility penalty of the surrogate.
class Objective {
 public:
  explicit Objective(const Grid& grid);
  double operator()(const Decision& y) const;
  double all_closed() const { return f_closed_; }
  bool all_closed_feasible() const { return closed_feasible_; }

 private:
  const Grid* grid_;
  double f_closed_ = 0.0;
  bool closed_feasible_ = false;
  double penalty_ = 0.0;
};

Decision decide(const H2mgNodeModel& model, const EcdfNormalizer& norm, const Grid& grid);
Decision decide(const Checkpoint& ckpt, const Grid& grid);

struct EnsembleChoice {
  Decision decision;
  std::string source;  // "fmc", "mt", or "all-closed"
};
// Strictly better fmc decision wins, mt otherwise; infeasible loses; both
// infeasible falls back to all-closed.
EnsembleChoice ensemble_choose(const Grid& grid, const Decision& y_fmc, const Decision& y_mt);
Decision ensemble_decide(const Checkpoint& fmc, const Checkpoint& mt, const Grid& grid);

// Mean capacity (MW, infeasible counted as 0) of a model's decisions.
double mean_capacity(const H2mgNodeModel& model, const EcdfNormalizer& norm, const std::vector<Grid>& grids);

}  // namespace osr
