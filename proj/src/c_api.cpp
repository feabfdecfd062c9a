#include "osr/osr.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "osr/checkpoint.hpp"
#include "osr/datagen.hpp"
#include "osr/error.hpp"
#include "osr/exact.hpp"
#include "osr/io.hpp"
#include "osr/metrics.hpp"
#include "osr/powerlp.hpp"
#include "osr/simplex.hpp"
#include "osr/train.hpp"
#include "selftest.hpp"

struct osr_grid {
  osr::Grid grid;
};

struct osr_checkpoint {
  osr::Checkpoint ckpt;
  osr::H2mgNodeModel model;
};

namespace {

thread_local std::string g_error;

template <typename F>
osr_status guarded(F&& f) {
  g_error.clear();
  try {
    f();
    return OSR_OK;
  } catch (const osr::Error& e) {
    g_error = e.what();
    return static_cast<osr_status>(static_cast<int>(e.code()));
  } catch (const std::exception& e) {
    g_error = e.what();
    return OSR_ERR_NUMERICAL;
  } catch (...) {
    g_error = "unknown failure";
    return OSR_ERR_NUMERICAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) osr::fail(osr::ErrorCode::Invalid, std::string(what) + " is null");
}

osr::Decision to_decision(const uint8_t* states, size_t n, const osr::Grid& g) {
  if (n != g.num_switches()) {
    osr::fail(osr::ErrorCode::Invalid, "decision has " + std::to_string(n) + " entries, grid has " +
                                           std::to_string(g.num_switches()) + " switches");
  }
  if (n) need(states, "states");
  osr::Decision d;
  for (size_t i = 0; i < n; ++i) d.states.push_back(states[i] ? 1 : 0);
  return d;
}

void from_decision(const osr::Decision& d, uint8_t* out, size_t n) {
  if (n != d.size()) osr::fail(osr::ErrorCode::Invalid, "output buffer length does not match the switch count");
  if (n) need(out, "output buffer");
  for (size_t i = 0; i < n; ++i) out[i] = d.states[i];
}

osr::SolverConfig solver_config(const osr_solve_options& o) {
  return {o.max_openings, o.gap, o.time_limit_s};
}

struct Solved {
  osr::Decision decision;
  osr_solve_info info{};
};

Solved solve(const osr::Grid& g, const osr_solve_options& o) {
  Solved s;
  switch (o.method) {
    case OSR_SOLVE_ALL_CLOSED: {
      s.decision = osr::Decision::all_closed(g.num_switches());
      const auto r = osr::exchange_capacity(g, s.decision);
      if (!r.feasible()) osr::fail(osr::ErrorCode::Infeasible, "all-closed decision is infeasible for " + g.context_id);
      s.info.capacity_mw = s.info.bound_mw = r.capacity_mw;
      break;
    }
    case OSR_SOLVE_EXHAUSTIVE: {
      const auto r = osr::exhaustive_best(g, o.max_openings);
      s.decision = r.decision;
      s.info.capacity_mw = s.info.bound_mw = r.capacity_mw;
      s.info.nodes = r.evaluated;
      break;
    }
    case OSR_SOLVE_BNB: {
      const auto r = osr::branch_and_bound(g, solver_config(o));
      s.decision = r.decision;
      s.info.capacity_mw = r.capacity_mw;
      s.info.bound_mw = r.bound_mw;
      s.info.gap_achieved = r.gap_achieved;
      s.info.timed_out = r.timed_out ? 1 : 0;
      s.info.nodes = r.nodes;
      break;
    }
    default:
      osr::fail(osr::ErrorCode::Config, "unknown solve method");
  }
  return s;
}

std::string str(const char* s) { return s ? s : ""; }

}  // namespace

extern "C" {

const char* osr_version(void) { return "0.1.0"; }

const char* osr_last_error(void) { return g_error.c_str(); }

osr_status osr_grid_load(const char* path, osr_grid** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new osr_grid{osr::load_grid(path)};
  });
}

void osr_grid_free(osr_grid* grid) { delete grid; }

size_t osr_grid_num_switches(const osr_grid* grid) { return grid ? grid->grid.num_switches() : 0; }

const char* osr_grid_context_id(const osr_grid* grid) { return grid ? grid->grid.context_id.c_str() : ""; }

osr_status osr_capacity(const osr_grid* grid, const uint8_t* states, size_t n, double big_m, double* capacity_mw) {
  return guarded([&] {
    need(grid, "grid");
    need(capacity_mw, "capacity_mw");
    const auto d = to_decision(states, n, grid->grid);
    const double m = big_m > 0 ? big_m : osr::default_big_m(grid->grid);
    const auto r = osr::exchange_capacity(grid->grid, d, m);
    if (r.status == osr::LpStatus::Unbounded) osr::fail(osr::ErrorCode::Numerical, "exchange LP is unbounded");
    if (!r.feasible()) osr::fail(osr::ErrorCode::Infeasible, "decision is infeasible for " + grid->grid.context_id);
    *capacity_mw = r.capacity_mw;
  });
}

osr_status osr_dump_lp(const osr_grid* grid, const uint8_t* states, size_t n, const char* path) {
  return guarded([&] {
    need(grid, "grid");
    need(path, "path");
    const auto d = to_decision(states, n, grid->grid);
    const auto lp = osr::build_exchange_lp(grid->grid, d, osr::default_big_m(grid->grid));
    std::ostringstream out;
    osr::write_lp_text(lp.problem, out);
    osr::write_text_file(path, out.str());
  });
}

void osr_solve_options_default(osr_solve_options* o) {
  if (!o) return;
  o->method = OSR_SOLVE_BNB;
  o->max_openings = 6;
  o->gap = 0.01;
  o->time_limit_s = 600;
}

osr_status osr_solve(const osr_grid* grid, const osr_solve_options* opts, uint8_t* states_out, size_t n,
                     osr_solve_info* info) {
  return guarded([&] {
    need(grid, "grid");
    need(opts, "options");
    const auto s = solve(grid->grid, *opts);
    from_decision(s.decision, states_out, n);
    if (info) *info = s.info;
  });
}

osr_status osr_checkpoint_load(const char* path, osr_checkpoint** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto c = osr::load_checkpoint(path);
    auto m = c.instantiate();
    *out = new osr_checkpoint{std::move(c), std::move(m)};
  });
}

void osr_checkpoint_free(osr_checkpoint* ckpt) { delete ckpt; }

osr_status osr_decide(const osr_checkpoint* ckpt, const osr_grid* grid, uint8_t* states_out, size_t n) {
  return guarded([&] {
    need(ckpt, "checkpoint");
    need(grid, "grid");
    from_decision(osr::decide(ckpt->model, ckpt->ckpt.normalizer, grid->grid), states_out, n);
  });
}

osr_status osr_scores(const osr_checkpoint* ckpt, const osr_grid* grid, double* logits_out, size_t n) {
  return guarded([&] {
    need(ckpt, "checkpoint");
    need(grid, "grid");
    const auto z = ckpt->model.forward(grid->grid, osr::apply_normalizer(ckpt->ckpt.normalizer, grid->grid));
    if (n != z.size()) osr::fail(osr::ErrorCode::Invalid, "output buffer length does not match the switch count");
    if (n) need(logits_out, "output buffer");
    std::copy(z.logits.begin(), z.logits.end(), logits_out);
  });
}

osr_status osr_ensemble_decide(const osr_checkpoint* fmc, const osr_checkpoint* mt, const osr_grid* grid,
                               uint8_t* states_out, size_t n, int* which_out) {
  return guarded([&] {
    need(fmc, "fmc checkpoint");
    need(mt, "mt checkpoint");
    need(grid, "grid");
    const auto& g = grid->grid;
    const auto c = osr::ensemble_choose(g, osr::decide(fmc->model, fmc->ckpt.normalizer, g),
                                        osr::decide(mt->model, mt->ckpt.normalizer, g));
    from_decision(c.decision, states_out, n);
    if (which_out) *which_out = c.source == "fmc" ? 0 : (c.source == "mt" ? 1 : 2);
  });
}

void osr_noise_default(osr_noise* n) {
  if (!n) return;
  const osr::NoiseConfig d;
  *n = {d.sigma_l, d.sigma_z, d.sigma_t, d.sigma_f, d.p_one_line, d.p_two_lines};
}

osr_status osr_profile_split(const char* profile, size_t index, const char** name, size_t* n) {
  return guarded([&] {
    need(profile, "profile");
    static const auto desk = osr::profile_splits("desk");
    static const auto paper = osr::profile_splits("paper");
    const std::string p = profile;
    if (p != "desk" && p != "paper") osr::profile_splits(p);
    const auto& splits = p == "desk" ? desk : paper;
    if (index >= splits.size()) osr::fail(osr::ErrorCode::Config, "no split " + std::to_string(index));
    if (name) *name = splits[index].name.c_str();
    if (n) *n = splits[index].n;
  });
}

osr_status osr_generate_dataset(const char* base_path, const osr_noise* noise, size_t n, uint64_t seed,
                                const char* out_dir, const char* prefix, size_t* n_written) {
  return guarded([&] {
    need(base_path, "base path");
    need(out_dir, "output directory");
    osr::NoiseConfig nc;
    if (noise) nc = {noise->sigma_l, noise->sigma_z, noise->sigma_t, noise->sigma_f, noise->p_one_line, noise->p_two_lines};
    nc.check();
    const auto base = osr::load_base_case(base_path);
    const auto m = osr::generate_dataset(base, nc, n, seed, out_dir, prefix ? prefix : "ctx");
    if (n_written) *n_written = m.contexts.size();
  });
}

osr_status osr_train_options_default(const char* estimator, osr_train_options* o) {
  return guarded([&] {
    need(estimator, "estimator");
    need(o, "options");
    const auto e = osr::estimator_from_string(estimator);
    const auto c = osr::TrainConfig::defaults_for(e);
    std::memset(o, 0, sizeof *o);
    o->estimator = e == osr::Estimator::Mc ? "mc" : (e == osr::Estimator::Fmc ? "fmc" : "mt");
    o->beta = c.beta;
    o->tau = c.tau;
    o->samples = c.samples;
    o->batch = c.batch;
    o->max_iterations = c.max_iterations;
    o->validation_period = c.validation_period;
    o->seed = c.seed;
    o->model_profile = "tiny";
    o->knots = c.knots;
    o->sampling_perturb = c.sampling.mode == osr::SamplingMode::PerturbAroundMode ? 1 : 0;
    o->reject_noop = c.sampling.reject_noop ? 1 : 0;
    o->p_one = c.sampling.p_one;
    o->p_two = c.sampling.p_two;
    o->lr = c.adam.lr;
    o->clip = c.adam.clip;
    o->threads = c.threads;
  });
}

osr_status osr_train(const osr_train_options* o, osr_log_fn log, void* user, osr_train_info* info) {
  return guarded([&] {
    need(o, "options");
    need(o->train_dir, "train_dir");
    need(o->valid_dir, "valid_dir");
    need(o->out_dir, "out_dir");
    osr::TrainConfig c;
    c.estimator = osr::estimator_from_string(str(o->estimator));
    c.beta = o->beta;
    c.tau = o->tau;
    c.samples = o->samples;
    c.batch = o->batch;
    c.max_iterations = o->max_iterations;
    c.validation_period = o->validation_period;
    c.seed = o->seed;
    c.profile = str(o->model_profile);
    osr::ModelConfig::from_profile(c.profile);
    c.knots = o->knots;
    c.sampling.mode = o->sampling_perturb ? osr::SamplingMode::PerturbAroundMode : osr::SamplingMode::IndependentBernoulli;
    c.sampling.reject_noop = o->reject_noop != 0;
    c.sampling.p_one = o->p_one;
    c.sampling.p_two = o->p_two;
    c.adam.lr = o->lr;
    c.adam.clip = o->clip;
    c.threads = o->threads;
    c.check();

    const auto train_set = osr::load_dataset(o->train_dir);
    const auto valid_set = osr::load_dataset(o->valid_dir);
    osr::MemoryTable memory;
    if (o->memory_in && *o->memory_in) memory = osr::MemoryTable::load(o->memory_in);

    const std::filesystem::path out = o->out_dir;
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) osr::fail(osr::ErrorCode::Io, "cannot create " + out.string());
    std::ofstream logf(out / "train_log.jsonl", std::ios::trunc);
    if (!logf) osr::fail(osr::ErrorCode::Io, "cannot write " + (out / "train_log.jsonl").string());
    const auto res = osr::train(c, train_set, valid_set, &memory, [&](const osr::LogRecord& r) {
      const auto j = osr::log_record_json(r);
      logf << j << '\n';
      logf.flush();
      if (log) log(j.c_str(), user);
    });
    osr::save_checkpoint(out / "best.ckpt", res.best);
    if (c.estimator == osr::Estimator::Mt) memory.save((out / "memory.tsv").string());
    if (info) *info = {res.best_validation_mw, res.best_iteration, res.evaluations};
  });
}

void osr_eval_options_default(osr_eval_options* o) {
  if (!o) return;
  std::memset(o, 0, sizeof *o);
  o->method = "all-closed";
  osr_solve_options_default(&o->solver);
}

osr_status osr_evaluate(const osr_eval_options* o, osr_eval_summary* summary) {
  return guarded([&] {
    need(o, "options");
    need(o->dataset_dir, "dataset_dir");
    need(o->out_dir, "out_dir");
    const std::string method = str(o->method);
    const auto grids = osr::load_dataset(o->dataset_dir);
    if (grids.empty()) osr::fail(osr::ErrorCode::Infeasible, "dataset " + str(o->dataset_dir) + " is empty");

    std::optional<osr::Checkpoint> gnn, fmc, mt;
    std::optional<osr::H2mgNodeModel> gnn_m, fmc_m, mt_m;
    if (method == "gnn") {
      need(o->checkpoint, "checkpoint");
      gnn = osr::load_checkpoint(o->checkpoint);
      gnn_m.emplace(gnn->instantiate());
    } else if (method == "ensemble") {
      need(o->checkpoint_fmc, "fmc checkpoint");
      need(o->checkpoint_mt, "mt checkpoint");
      fmc = osr::load_checkpoint(o->checkpoint_fmc);
      mt = osr::load_checkpoint(o->checkpoint_mt);
      fmc_m.emplace(fmc->instantiate());
      mt_m.emplace(mt->instantiate());
    } else if (method != "all-closed" && method != "bnb" && method != "exhaustive") {
      osr::fail(osr::ErrorCode::Config, "unknown evaluation method '" + method + "'");
    }

    std::map<std::string, osr::Decision> decisions;
    std::map<std::string, double> closed, solver;
    for (const auto& g : grids) {
      const auto c = osr::exchange_capacity(g, osr::Decision::all_closed(g.num_switches()));
      closed[g.context_id] = c.feasible() ? c.capacity_mw : 0.0;
      osr::Decision d;
      if (method == "all-closed") {
        d = osr::Decision::all_closed(g.num_switches());
      } else if (method == "bnb" || method == "exhaustive") {
        osr_solve_options so = o->solver;
        so.method = method == "bnb" ? OSR_SOLVE_BNB : OSR_SOLVE_EXHAUSTIVE;
        const auto s = solve(g, so);
        d = s.decision;
        if (!o->reference_csv) solver[g.context_id] = s.info.capacity_mw;
      } else if (method == "gnn") {
        d = osr::decide(*gnn_m, gnn->normalizer, g);
      } else {
        d = osr::ensemble_choose(g, osr::decide(*fmc_m, fmc->normalizer, g), osr::decide(*mt_m, mt->normalizer, g))
                .decision;
      }
      decisions[g.context_id] = std::move(d);
    }
    if (o->reference_csv && *o->reference_csv) {
      solver.clear();
      for (const auto& r : osr::parse_metrics_csv(osr::read_text_file(o->reference_csv))) {
        solver[r.context_id] = r.capacity_pu * osr::kBaseMva;
      }
    }
    const auto rep = osr::evaluate(method, grids, decisions, closed, solver);

    const std::filesystem::path out = o->out_dir;
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) osr::fail(osr::ErrorCode::Io, "cannot create " + out.string());
    osr::write_text_file(out / "metrics.csv", osr::metrics_csv(rep));
    osr::write_text_file(out / "usage.csv", osr::usage_csv(rep));
    std::ostringstream dj;
    for (const auto& [id, d] : decisions) {
      dj << "{\"context_id\":\"" << id << "\",\"states\":[";
      for (size_t i = 0; i < d.size(); ++i) dj << (i ? "," : "") << int(d.states[i]);
      dj << "]}\n";
    }
    osr::write_text_file(out / "decisions.jsonl", dj.str());
    if (summary) {
      *summary = {rep.contexts.size(), rep.mean_capacity_pu, rep.mean_improvement_pct,
                  rep.mean_normalized ? *rep.mean_normalized : std::numeric_limits<double>::quiet_NaN(),
                  rep.mean_openings, rep.never_used, rep.infeasible, rep.excluded};
    }
  });
}

osr_status osr_report(const char* const* eval_dirs, size_t n_dirs, const char* out_dir, int bins) {
  return guarded([&] {
    need(out_dir, "out_dir");
    if (n_dirs == 0) osr::fail(osr::ErrorCode::Config, "report: no evaluation directories given");
    need(eval_dirs, "eval_dirs");
    std::map<std::string, std::vector<double>> cap, dclosed, dsolver, norm, openings, usage;
    std::ostringstream sum;
    sum << "# " << osr::kMetricsSchema << " summary\n";
    sum << "method,contexts,mean_capacity_pu,mean_improvement_pct,mean_normalized,mean_openings,never_used,"
           "infeasible,excluded\n";
    for (size_t k = 0; k < n_dirs; ++k) {
      const std::filesystem::path dir = eval_dirs[k];
      const auto text = osr::read_text_file(dir / "metrics.csv");
      std::string method = osr::csv_method(text);
      if (method.empty()) method = dir.filename().string();
      if (cap.count(method)) method += "#" + std::to_string(k);
      const auto rows = osr::parse_metrics_csv(text);
      const auto use = osr::parse_usage_csv(osr::read_text_file(dir / "usage.csv"));
      double s_cap = 0, s_imp = 0, s_norm = 0, s_open = 0;
      size_t n_imp = 0, n_norm = 0, infeasible = 0, excluded = 0, never = 0;
      for (const auto& r : rows) {
        cap[method].push_back(r.capacity_pu);
        dclosed[method].push_back(r.capacity_pu - r.all_closed_pu);
        if (r.solver_pu) dsolver[method].push_back(r.capacity_pu - *r.solver_pu);
        if (r.normalized) norm[method].push_back(*r.normalized);
        openings[method].push_back(static_cast<double>(r.openings));
        s_cap += r.capacity_pu;
        s_open += static_cast<double>(r.openings);
        if (r.improvement_pct) {
          s_imp += *r.improvement_pct;
          ++n_imp;
        }
        if (r.normalized) {
          s_norm += *r.normalized;
          ++n_norm;
        }
        infeasible += r.feasible ? 0 : 1;
        excluded += r.excluded ? 1 : 0;
      }
      for (double u : use) never += u == 0.0 ? 1 : 0;
      usage[method] = use;
      const double n = std::max<double>(1.0, static_cast<double>(rows.size()));
      char line[512];
      std::snprintf(line, sizeof line, "%s,%zu,%.10g,%.10g,%s,%.10g,%zu,%zu,%zu\n", method.c_str(), rows.size(),
                    s_cap / n, n_imp ? s_imp / static_cast<double>(n_imp) : 0.0,
                    n_norm ? std::to_string(s_norm / static_cast<double>(n_norm)).c_str() : "", s_open / n, never,
                    infeasible, excluded);
      sum << line;
    }
    const std::vector<osr::Histogram> hs{
        osr::histogram("capacity_pu", cap, bins),       osr::histogram("delta_vs_all_closed_pu", dclosed, bins),
        osr::histogram("delta_vs_solver_pu", dsolver, bins), osr::histogram("normalized_score", norm, bins),
        osr::histogram("openings", openings, bins),     osr::histogram("switch_usage_pct", usage, bins)};
    const std::filesystem::path out = out_dir;
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) osr::fail(osr::ErrorCode::Io, "cannot create " + out.string());
    osr::write_text_file(out / "summary.csv", sum.str());
    osr::write_text_file(out / "histograms.csv", osr::histograms_csv(hs));
  });
}

osr_status osr_selftest(osr_log_fn line, void* user, int* failures) {
  int f = 0;
  const auto st = guarded([&] {
    f = osr::run_selftest([&](const std::string& l) {
      if (line) line(l.c_str(), user);
    });
  });
  if (failures) *failures = f;
  if (st == OSR_OK && f > 0) {
    g_error = std::to_string(f) + " selftest check(s) failed";
    return OSR_ERR_NUMERICAL;
  }
  return st;
}

}  // extern "C"
