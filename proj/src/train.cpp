#include "osr/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include "osr/error.hpp"
#include "osr/powerlp.hpp"

namespace osr {

Estimator estimator_from_string(const std::string& name) {
  if (name == "mc") return Estimator::Mc;
  if (name == "fmc") return Estimator::Fmc;
  if (name == "mt") return Estimator::Mt;
  fail(ErrorCode::Config, "unknown estimator '" + name + "' (expected mc, fmc or mt)");
}

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::Mc: return "mc";
    case Estimator::Fmc: return "fmc";
    case Estimator::Mt: return "mt";
  }
  return "?";
}

TrainConfig TrainConfig::defaults_for(Estimator e) {
  TrainConfig c;
  c.estimator = e;
  switch (e) {
    case Estimator::Mc:
    case Estimator::Fmc:
      c.beta = 0.1;
      c.sampling.mode = SamplingMode::IndependentBernoulli;
      c.sampling.reject_noop = true;
      break;
    case Estimator::Mt:
      c.beta = 1.0;
      c.sampling.mode = SamplingMode::PerturbAroundMode;
      c.sampling.reject_noop = true;
      break;
  }
  return c;
}

void TrainConfig::check() const {
  if (samples < 1) fail(ErrorCode::Config, "train: samples must be >= 1");
  if (batch < 1) fail(ErrorCode::Config, "train: batch must be >= 1");
  if (max_iterations < 1) fail(ErrorCode::Config, "train: max_iterations must be >= 1");
  if (validation_period < 1) fail(ErrorCode::Config, "train: validation_period must be >= 1");
  if (!(beta > 0.0)) fail(ErrorCode::Config, "train: beta must be > 0");
  if (estimator == Estimator::Fmc && !(tau > 0.0)) fail(ErrorCode::Config, "train: tau must be > 0");
  if (knots < 2) fail(ErrorCode::Config, "train: knots must be >= 2");
  if (threads < 1) fail(ErrorCode::Config, "train: threads must be >= 1");
  if (sampling.p_one < 0 || sampling.p_two < 0 || sampling.p_one + sampling.p_two > 1.0) {
    fail(ErrorCode::Config, "train: need p_one, p_two >= 0 and p_one + p_two <= 1");
  }
}

std::string log_record_json(const LogRecord& r) {
  char buf[256];
  std::string v = r.validation_mw ? std::to_string(*r.validation_mw) : "null";
  std::snprintf(buf, sizeof buf, "{\"iteration\":%d,\"mean_best_f\":%.9g,\"entropy\":%.9g,\"validation_mw\":%s,\"wall_s\":%.3f}",
                r.iteration, r.mean_best_f, r.entropy, v.c_str(), r.wall_s);
  return buf;
}

Objective::Objective(const Grid& grid) : grid_(&grid) {
  const auto r = exchange_capacity(grid, Decision::all_closed(grid.num_switches()));
  closed_feasible_ = r.feasible();
  f_closed_ = closed_feasible_ ? -r.capacity_mw : 0.0;
  penalty_ = infeasible_penalty(grid, f_closed_);
}

double Objective::operator()(const Decision& y) const {
  const auto r = exchange_capacity(*grid_, y);
  return r.feasible() ? -r.capacity_mw : penalty_;
}

Decision decide(const H2mgNodeModel& model, const EcdfNormalizer& norm, const Grid& grid) {
  return most_probable_decision(model.forward(grid, apply_normalizer(norm, grid)));
}

Decision decide(const Checkpoint& ckpt, const Grid& grid) { return decide(ckpt.instantiate(), ckpt.normalizer, grid); }

EnsembleChoice ensemble_choose(const Grid& grid, const Decision& y_fmc, const Decision& y_mt) {
  const auto a = exchange_capacity(grid, y_fmc);
  const auto b = exchange_capacity(grid, y_mt);
  if (!a.feasible() && !b.feasible()) return {Decision::all_closed(grid.num_switches()), "all-closed"};
  if (!b.feasible()) return {y_fmc, "fmc"};
  if (!a.feasible()) return {y_mt, "mt"};
  // Minimization of f = -capacity: fmc only on strict improvement.
  if (-a.capacity_mw < -b.capacity_mw) return {y_fmc, "fmc"};
  return {y_mt, "mt"};
}

Decision ensemble_decide(const Checkpoint& fmc, const Checkpoint& mt, const Grid& grid) {
  return ensemble_choose(grid, decide(fmc, grid), decide(mt, grid)).decision;
}

double mean_capacity(const H2mgNodeModel& model, const EcdfNormalizer& norm, const std::vector<Grid>& grids) {
  if (grids.empty()) return 0.0;
  double s = 0.0;
  for (const auto& g : grids) {
    const auto r = exchange_capacity(g, decide(model, norm, g));
    if (r.feasible()) s += r.capacity_mw;
  }
  return s / static_cast<double>(grids.size());
}

namespace {

Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(salt)};
  return Rng(seq);
}

constexpr std::size_t kCacheCap = 4096;

struct ContextState {
  const Grid* grid = nullptr;
  GridFeatures features;
  Objective objective;
  std::map<std::vector<std::uint8_t>, double> cache;

  ContextState(const Grid& g, GridFeatures f) : grid(&g), features(std::move(f)), objective(g) {}

  double f(const Decision& y) {
    auto it = cache.find(y.states);
    if (it != cache.end()) return it->second;
    const double v = objective(y);
    if (cache.size() < kCacheCap) cache.emplace(y.states, v);
    return v;
  }
};

struct SlotOutput {
  std::vector<double> grads;
  double best_f = 0.0;
  double entropy = 0.0;
};

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::vector<Grid>& train_set, const std::vector<Grid>& valid_set,
                  MemoryTable* memory, const LogSink& sink) {
  cfg.check();
  if (train_set.empty()) fail(ErrorCode::Config, "train: empty train set");
  if (valid_set.empty()) fail(ErrorCode::Config, "train: empty validation set");
  MemoryTable local_memory;
  if (!memory) memory = &local_memory;
  const auto start = std::chrono::steady_clock::now();
  auto wall = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  const auto norm = fit_normalizer(train_set, cfg.knots);
  H2mgNodeModel model(ModelConfig::from_profile(cfg.profile));
  {
    Rng init = stream(cfg.seed, 0, 0, 1);
    model.initialize(init);
  }
  AdamState adam = AdamState::zeros(model.layout().total, cfg.adam);

  std::vector<ContextState> contexts;
  contexts.reserve(train_set.size());
  for (const auto& g : train_set) contexts.emplace_back(g, apply_normalizer(norm, g));
  if (cfg.estimator == Estimator::Mt) {
    for (auto& c : contexts) {
      if (!memory->get(c.grid->context_id) && c.objective.all_closed_feasible()) {
        memory->set(c.grid->context_id, {Decision::all_closed(c.grid->num_switches()), c.objective.all_closed()});
      }
    }
  }

  TrainResult res;
  bool have_best = false;
  auto snapshot = [&](int it, double vmw) {
    Checkpoint c;
    c.model = model.config();
    c.normalizer = norm;
    c.params.assign(model.params().begin(), model.params().end());
    c.meta["estimator"] = to_string(cfg.estimator);
    c.meta["iteration"] = std::to_string(it);
    c.meta["seed"] = std::to_string(cfg.seed);
    c.meta["validation_mw"] = hex_double(vmw);
    return c;
  };

  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch), contexts.size());
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), batch);
  std::vector<SlotOutput> out(batch);
  std::vector<std::size_t> idx(contexts.size());
  Rng pick_rng = stream(cfg.seed, 0, 0, 2);

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    // (a) minibatch without replacement
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t k = 0; k < batch; ++k) {
      std::uniform_int_distribution<std::size_t> u(k, idx.size() - 1);
      std::swap(idx[k], idx[u(pick_rng)]);
    }

    auto work = [&](std::size_t slot) {
      auto& ctx = contexts[idx[slot]];
      auto& o = out[slot];
      // (b) forward
      Tape tape;
      const Scores z = model.forward(*ctx.grid, ctx.features, &tape);
      for (double v : z.logits) {
        if (!std::isfinite(v)) fail(ErrorCode::Numerical, "train: non-finite score at iteration " + std::to_string(it));
      }
      // (c) exploration and surrogate gradient
      Rng rng = stream(cfg.seed, static_cast<std::uint64_t>(it), slot, 3);
      const auto ys = sample_decisions(z, *ctx.grid, static_cast<std::size_t>(cfg.samples), cfg.sampling, rng);
      std::vector<Sample> samples;
      samples.reserve(ys.size());
      for (const auto& y : ys) samples.push_back({y, ctx.f(y)});
      o.best_f = std::min_element(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) {
                   return a.f < b.f;
                 })->f;
      o.entropy = bernoulli_entropy(z);
      std::vector<double> g;
      switch (cfg.estimator) {
        case Estimator::Mc: g = grad_mc(z, samples, cfg.beta); break;
        case Estimator::Fmc: g = grad_fmc(z, samples, cfg.beta, cfg.tau); break;
        case Estimator::Mt: {
          const auto entry = memory->update(ctx.grid->context_id, samples);
          g = grad_mt(z, entry.best, cfg.beta);
          break;
        }
      }
      for (double& v : g) v /= static_cast<double>(batch);
      o.grads.assign(model.layout().total, 0.0);
      model.backward(tape, g, o.grads);
    };

    if (workers <= 1) {
      for (std::size_t s = 0; s < batch; ++s) work(s);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errs(workers);
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t s = w; s < batch; s += workers) work(s);
          } catch (...) {
            errs[w] = std::current_exception();
          }
        });
      }
      for (auto& t : pool) t.join();
      for (auto& e : errs) {
        if (e) std::rethrow_exception(e);
      }
    }

    // (d) average and step, summed in slot order for determinism
    std::vector<double> grads(model.layout().total, 0.0);
    LogRecord rec;
    rec.iteration = it;
    for (const auto& o : out) {
      for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += o.grads[i];
      rec.mean_best_f += o.best_f / static_cast<double>(batch);
      rec.entropy += o.entropy / static_cast<double>(batch);
    }
    if (!std::isfinite(rec.mean_best_f) || !std::isfinite(rec.entropy)) {
      fail(ErrorCode::Numerical, "train: loss proxy diverged at iteration " + std::to_string(it));
    }
    adam_step(model.mutable_params(), grads, adam);

    if (it % cfg.validation_period == 0 || it == cfg.max_iterations) {
      const double v = mean_capacity(model, norm, valid_set);
      rec.validation_mw = v;
      ++res.evaluations;
      if (!have_best || v > res.best_validation_mw) {
        have_best = true;
        res.best_validation_mw = v;
        res.best_iteration = it;
        res.best = snapshot(it, v);
      }
    }
    rec.wall_s = wall();
    if (sink) sink(rec);
    res.log.push_back(rec);
  }
  return res;
}

}  // namespace osr
