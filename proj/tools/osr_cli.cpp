// osr-cli: data generation, training, solving, evaluation, reporting.
//
// Options may also come from a TOML/INI file given with --config; keys sit
// under a section named after the subcommand ([train] beta = 1.0 ...).
// Command-line values override the file; unknown keys are rejected.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "osr/osr.h"

#ifndef OSR_DATA_DIR
#define OSR_DATA_DIR "data"
#endif

namespace {

int exit_code(osr_status s) {
  switch (s) {
    case OSR_OK: return 0;
    case OSR_ERR_INFEASIBLE: return 3;
    case OSR_ERR_NUMERICAL: return 4;
    default: return 2;
  }
}

// Thrown on the first failing library call; main turns it into one line.
struct Failure {
  osr_status status;
  std::string what;
};

void check(osr_status s, const std::string& context) {
  if (s != OSR_OK) throw Failure{s, context + ": " + osr_last_error()};
}

// Resolved configuration, echoed to stderr and saved next to the outputs.
class Resolved {
 public:
  explicit Resolved(std::string section) : section_(std::move(section)) {}

  template <typename T>
  void add(const std::string& key, const T& v) {
    std::ostringstream os;
    if constexpr (std::is_same_v<T, std::string>) {
      os << '"' << v << '"';
    } else if constexpr (std::is_same_v<T, bool>) {
      os << (v ? "true" : "false");
    } else {
      os << v;
    }
    items_.emplace_back(key, os.str());
  }

  std::string text() const {
    std::string s = "[" + section_ + "]\n";
    for (const auto& [k, v] : items_) s += k + " = " + v + "\n";
    return s;
  }

  void emit(const std::string& dir) const {
    std::fprintf(stderr, "# resolved configuration\n%s", text().c_str());
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    std::ofstream(std::filesystem::path(dir) / "config.toml") << text();
  }

 private:
  std::string section_;
  std::vector<std::pair<std::string, std::string>> items_;
};

std::string bits(const std::vector<uint8_t>& s) {
  std::string b;
  for (auto v : s) b += v ? '1' : '0';
  return b;
}

struct GridHandle {
  osr_grid* g = nullptr;
  explicit GridHandle(const std::string& path) { check(osr_grid_load(path.c_str(), &g), path); }
  ~GridHandle() { osr_grid_free(g); }
};

struct CkptHandle {
  osr_checkpoint* c = nullptr;
  explicit CkptHandle(const std::string& path) { check(osr_checkpoint_load(path.c_str(), &c), path); }
  ~CkptHandle() { osr_checkpoint_free(c); }
};

osr_solve_method solve_method(const std::string& m) {
  if (m == "all-closed") return OSR_SOLVE_ALL_CLOSED;
  if (m == "exhaustive") return OSR_SOLVE_EXHAUSTIVE;
  return OSR_SOLVE_BNB;
}

void print_line(const char* line, void*) { std::printf("%s\n", line); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Substation switching: data, training, solving, evaluation"};
  app.set_config("--config", "", "TOML/INI file with per-subcommand sections");
  app.allow_config_extras(false);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(osr_version()));

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Sample randomized contexts from a base case");
  std::string gen_base = std::string(OSR_DATA_DIR) + "/base12.json", gen_out, gen_profile = "desk", gen_prefix;
  std::optional<std::size_t> gen_n;
  std::uint64_t gen_seed = 0;
  osr_noise noise;
  osr_noise_default(&noise);
  gen->add_option("--base", gen_base, "Base-case template")->capture_default_str();
  gen->add_option("--n", gen_n, "Number of contexts (single dataset); omit to write the profile's splits");
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--profile", gen_profile, "Split sizes when --n is absent")
      ->check(CLI::IsMember({"desk", "paper"}))
      ->capture_default_str();
  gen->add_option("--prefix", gen_prefix, "Context id prefix (default: split name or ctx)");
  gen->add_option("--sigma-l", noise.sigma_l)->capture_default_str();
  gen->add_option("--sigma-z", noise.sigma_z)->capture_default_str();
  gen->add_option("--sigma-t", noise.sigma_t)->capture_default_str();
  gen->add_option("--sigma-f", noise.sigma_f)->capture_default_str();
  gen->add_option("--p-one-line", noise.p_one_line)->capture_default_str();
  gen->add_option("--p-two-lines", noise.p_two_lines)->capture_default_str();

  // train
  auto* tr = app.add_subcommand("train", "Train a policy by self-supervision");
  std::string tr_train, tr_valid, tr_out, tr_est = "mt", tr_profile = "tiny", tr_memory;
  std::optional<double> tr_beta, tr_tau, tr_p1, tr_p2, tr_lr, tr_clip;
  std::optional<int> tr_samples, tr_batch, tr_iters, tr_period, tr_knots, tr_threads;
  std::optional<std::string> tr_sampling;
  std::optional<bool> tr_reject;
  std::uint64_t tr_seed = 0;
  tr->add_option("--train", tr_train, "Train dataset directory")->required();
  tr->add_option("--valid", tr_valid, "Validation dataset directory")->required();
  tr->add_option("--out", tr_out, "Output directory")->required();
  tr->add_option("--estimator", tr_est)->check(CLI::IsMember({"mc", "fmc", "mt"}))->capture_default_str();
  tr->add_option("--beta", tr_beta);
  tr->add_option("--tau", tr_tau);
  tr->add_option("--samples", tr_samples);
  tr->add_option("--batch", tr_batch);
  tr->add_option("--iterations", tr_iters);
  tr->add_option("--validation-period", tr_period);
  tr->add_option("--seed", tr_seed)->capture_default_str();
  tr->add_option("--model-profile", tr_profile)->check(CLI::IsMember({"tiny", "paper"}))->capture_default_str();
  tr->add_option("--knots", tr_knots);
  tr->add_option("--sampling", tr_sampling)->check(CLI::IsMember({"independent", "perturb"}));
  tr->add_option("--reject-noop", tr_reject);
  tr->add_option("--p-one", tr_p1);
  tr->add_option("--p-two", tr_p2);
  tr->add_option("--lr", tr_lr);
  tr->add_option("--clip", tr_clip);
  tr->add_option("--threads", tr_threads);
  tr->add_option("--memory-in", tr_memory, "Resume from a saved memory table");

  // solve
  auto* so = app.add_subcommand("solve", "Decide switch states for context files");
  std::vector<std::string> so_files;
  std::string so_method = "bnb", so_ckpt, so_fmc, so_mt, so_dump;
  osr_solve_options so_opts;
  osr_solve_options_default(&so_opts);
  so->add_option("files", so_files, "Context files")->required();
  so->add_option("--method", so_method)
      ->check(CLI::IsMember({"all-closed", "bnb", "exhaustive", "gnn", "ensemble"}))
      ->capture_default_str();
  so->add_option("--max-openings", so_opts.max_openings)->capture_default_str();
  so->add_option("--gap", so_opts.gap)->capture_default_str();
  so->add_option("--time-limit", so_opts.time_limit_s)->capture_default_str();
  so->add_option("--checkpoint", so_ckpt, "Checkpoint for --method gnn");
  so->add_option("--fmc", so_fmc, "Filtered-MC checkpoint for --method ensemble");
  so->add_option("--mt", so_mt, "Memory-table checkpoint for --method ensemble");
  so->add_option("--dump-lp", so_dump, "Write the exchange LP of each chosen decision");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a method over a dataset");
  osr_eval_options ev_opts;
  osr_eval_options_default(&ev_opts);
  std::string ev_method = "all-closed", ev_dataset, ev_out, ev_ckpt, ev_fmc, ev_mt, ev_ref;
  ev->add_option("--method", ev_method)
      ->check(CLI::IsMember({"all-closed", "bnb", "exhaustive", "gnn", "ensemble"}))
      ->capture_default_str();
  ev->add_option("--dataset", ev_dataset)->required();
  ev->add_option("--out", ev_out, "Output directory (default: eval-<method>)");
  ev->add_option("--checkpoint", ev_ckpt);
  ev->add_option("--fmc", ev_fmc);
  ev->add_option("--mt", ev_mt);
  ev->add_option("--reference", ev_ref, "Solver metrics.csv for the normalized score");
  ev->add_option("--max-openings", ev_opts.solver.max_openings)->capture_default_str();
  ev->add_option("--gap", ev_opts.solver.gap)->capture_default_str();
  ev->add_option("--time-limit", ev_opts.solver.time_limit_s)->capture_default_str();

  // report
  auto* rep = app.add_subcommand("report", "Summary table and histogram bins from eval outputs");
  std::vector<std::string> rep_dirs;
  std::string rep_out = "report";
  int rep_bins = 20;
  rep->add_option("dirs", rep_dirs, "Evaluation output directories")->required();
  rep->add_option("--out", rep_out)->capture_default_str();
  rep->add_option("--bins", rep_bins)->check(CLI::PositiveNumber)->capture_default_str();

  auto* st = app.add_subcommand("selftest", "Run the oracle suite");

  for (auto* sub : {gen, tr, so, ev, rep, st}) sub->allow_config_extras(false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      Resolved r("gen-data");
      r.add("base", gen_base);
      if (gen_n) r.add("n", *gen_n);
      r.add("seed", gen_seed);
      r.add("out", gen_out);
      r.add("profile", gen_profile);
      r.add("sigma-l", noise.sigma_l);
      r.add("sigma-z", noise.sigma_z);
      r.add("sigma-t", noise.sigma_t);
      r.add("sigma-f", noise.sigma_f);
      r.add("p-one-line", noise.p_one_line);
      r.add("p-two-lines", noise.p_two_lines);
      r.emit(gen_out);
      if (gen_n) {
        std::size_t written = 0;
        const std::string prefix = gen_prefix.empty() ? "ctx" : gen_prefix;
        check(osr_generate_dataset(gen_base.c_str(), &noise, *gen_n, gen_seed, gen_out.c_str(), prefix.c_str(), &written),
              "gen-data");
        std::printf("%zu contexts written to %s\n", written, gen_out.c_str());
      } else {
        for (std::size_t k = 0;; ++k) {
          const char* name = nullptr;
          std::size_t n = 0;
          if (osr_profile_split(gen_profile.c_str(), k, &name, &n) != OSR_OK) break;
          const std::string dir = (std::filesystem::path(gen_out) / name).string();
          const std::string prefix = gen_prefix.empty() ? name : gen_prefix + "-" + name;
          std::size_t written = 0;
          check(osr_generate_dataset(gen_base.c_str(), &noise, n, gen_seed + k, dir.c_str(), prefix.c_str(), &written),
                "gen-data");
          std::printf("%s: %zu contexts written to %s (seed %llu)\n", name, written, dir.c_str(),
                      static_cast<unsigned long long>(gen_seed + k));
        }
      }
    } else if (*tr) {
      osr_train_options o;
      check(osr_train_options_default(tr_est.c_str(), &o), "train");
      if (tr_beta) o.beta = *tr_beta;
      if (tr_tau) o.tau = *tr_tau;
      if (tr_samples) o.samples = *tr_samples;
      if (tr_batch) o.batch = *tr_batch;
      if (tr_iters) o.max_iterations = *tr_iters;
      if (tr_period) o.validation_period = *tr_period;
      if (tr_knots) o.knots = *tr_knots;
      if (tr_sampling) o.sampling_perturb = *tr_sampling == "perturb";
      if (tr_reject) o.reject_noop = *tr_reject;
      if (tr_p1) o.p_one = *tr_p1;
      if (tr_p2) o.p_two = *tr_p2;
      if (tr_lr) o.lr = *tr_lr;
      if (tr_clip) o.clip = *tr_clip;
      if (tr_threads) o.threads = *tr_threads;
      o.seed = tr_seed;
      o.model_profile = tr_profile.c_str();
      o.train_dir = tr_train.c_str();
      o.valid_dir = tr_valid.c_str();
      o.out_dir = tr_out.c_str();
      o.memory_in = tr_memory.empty() ? nullptr : tr_memory.c_str();
      Resolved r("train");
      r.add("train", tr_train);
      r.add("valid", tr_valid);
      r.add("out", tr_out);
      r.add("estimator", tr_est);
      r.add("beta", o.beta);
      r.add("tau", o.tau);
      r.add("samples", o.samples);
      r.add("batch", o.batch);
      r.add("iterations", o.max_iterations);
      r.add("validation-period", o.validation_period);
      r.add("seed", o.seed);
      r.add("model-profile", tr_profile);
      r.add("knots", o.knots);
      r.add("sampling", std::string(o.sampling_perturb ? "perturb" : "independent"));
      r.add("reject-noop", o.reject_noop != 0);
      r.add("p-one", o.p_one);
      r.add("p-two", o.p_two);
      r.add("lr", o.lr);
      r.add("clip", o.clip);
      r.add("threads", o.threads);
      if (!tr_memory.empty()) r.add("memory-in", tr_memory);
      r.emit(tr_out);
      osr_train_info info{};
      check(osr_train(&o, nullptr, nullptr, &info), "train");
      std::printf("best validation mean capacity %.6f MW at iteration %d (%d evaluations); checkpoint %s/best.ckpt\n",
                  info.best_validation_mw, info.best_iteration, info.evaluations, tr_out.c_str());
    } else if (*so) {
      so_opts.method = solve_method(so_method);
      Resolved r("solve");
      r.add("method", so_method);
      r.add("max-openings", so_opts.max_openings);
      r.add("gap", so_opts.gap);
      r.add("time-limit", so_opts.time_limit_s);
      if (!so_ckpt.empty()) r.add("checkpoint", so_ckpt);
      if (!so_fmc.empty()) r.add("fmc", so_fmc);
      if (!so_mt.empty()) r.add("mt", so_mt);
      r.emit("");
      std::optional<CkptHandle> ck, fmc, mt;
      if (so_method == "gnn") {
        if (so_ckpt.empty()) throw Failure{OSR_ERR_CONFIG, "solve: --method gnn needs --checkpoint"};
        ck.emplace(so_ckpt);
      } else if (so_method == "ensemble") {
        if (so_fmc.empty() || so_mt.empty()) throw Failure{OSR_ERR_CONFIG, "solve: --method ensemble needs --fmc and --mt"};
        fmc.emplace(so_fmc);
        mt.emplace(so_mt);
      }
      std::printf("context_id,method,capacity_mw,capacity_pu,openings,states,bound_mw,gap,timed_out\n");
      int infeasible = 0;
      for (const auto& f : so_files) {
        GridHandle g(f);
        const std::size_t n = osr_grid_num_switches(g.g);
        std::vector<uint8_t> y(n, 1);
        osr_solve_info info{};
        info.bound_mw = NAN;
        info.gap_achieved = NAN;
        if (ck) {
          check(osr_decide(ck->c, g.g, y.data(), n), f);
        } else if (fmc) {
          check(osr_ensemble_decide(fmc->c, mt->c, g.g, y.data(), n, nullptr), f);
        } else {
          check(osr_solve(g.g, &so_opts, y.data(), n, &info), f);
        }
        double cap = 0.0;
        const auto cs = osr_capacity(g.g, y.data(), n, 0.0, &cap);
        if (cs == OSR_ERR_INFEASIBLE) {
          ++infeasible;
        } else {
          check(cs, f);
        }
        std::size_t open = 0;
        for (auto v : y) open += v ? 0 : 1;
        if (!so_dump.empty()) {
          const std::string path = so_files.size() == 1 ? so_dump : so_dump + "." + osr_grid_context_id(g.g) + ".lp";
          check(osr_dump_lp(g.g, y.data(), n, path.c_str()), f);
        }
        if (cs == OSR_ERR_INFEASIBLE) {
          std::printf("%s,%s,infeasible,infeasible,%zu,%s,,,\n", osr_grid_context_id(g.g), so_method.c_str(), open,
                      bits(y).c_str());
        } else {
          std::printf("%s,%s,%.6f,%.6f,%zu,%s,%.6f,%.6f,%d\n", osr_grid_context_id(g.g), so_method.c_str(), cap,
                      cap / 100.0, open, bits(y).c_str(), info.bound_mw, info.gap_achieved, info.timed_out);
        }
      }
      if (infeasible == static_cast<int>(so_files.size())) {
        throw Failure{OSR_ERR_INFEASIBLE, "solve: no feasible decision for any context"};
      }
    } else if (*ev) {
      if (ev_out.empty()) ev_out = "eval-" + ev_method;
      ev_opts.method = ev_method.c_str();
      ev_opts.dataset_dir = ev_dataset.c_str();
      ev_opts.out_dir = ev_out.c_str();
      ev_opts.checkpoint = ev_ckpt.empty() ? nullptr : ev_ckpt.c_str();
      ev_opts.checkpoint_fmc = ev_fmc.empty() ? nullptr : ev_fmc.c_str();
      ev_opts.checkpoint_mt = ev_mt.empty() ? nullptr : ev_mt.c_str();
      ev_opts.reference_csv = ev_ref.empty() ? nullptr : ev_ref.c_str();
      Resolved r("eval");
      r.add("method", ev_method);
      r.add("dataset", ev_dataset);
      r.add("out", ev_out);
      if (!ev_ckpt.empty()) r.add("checkpoint", ev_ckpt);
      if (!ev_fmc.empty()) r.add("fmc", ev_fmc);
      if (!ev_mt.empty()) r.add("mt", ev_mt);
      if (!ev_ref.empty()) r.add("reference", ev_ref);
      r.add("max-openings", ev_opts.solver.max_openings);
      r.add("gap", ev_opts.solver.gap);
      r.add("time-limit", ev_opts.solver.time_limit_s);
      r.emit(ev_out);
      osr_eval_summary s{};
      check(osr_evaluate(&ev_opts, &s), "eval");
      std::printf("method,contexts,mean_capacity_pu,mean_improvement_pct,mean_normalized,mean_openings,never_used,"
                  "infeasible,excluded\n");
      std::printf("%s,%zu,%.6f,%.4f,%s,%.4f,%zu,%zu,%zu\n", ev_method.c_str(), s.contexts, s.mean_capacity_pu,
                  s.mean_improvement_pct, std::isnan(s.mean_normalized) ? "" : std::to_string(s.mean_normalized).c_str(),
                  s.mean_openings, s.never_used, s.infeasible, s.excluded);
    } else if (*rep) {
      Resolved r("report");
      r.add("out", rep_out);
      r.add("bins", rep_bins);
      r.emit(rep_out);
      std::vector<const char*> dirs;
      for (const auto& d : rep_dirs) dirs.push_back(d.c_str());
      check(osr_report(dirs.data(), dirs.size(), rep_out.c_str(), rep_bins), "report");
      std::printf("wrote %s/summary.csv and %s/histograms.csv\n", rep_out.c_str(), rep_out.c_str());
    } else if (*st) {
      int failures = 0;
      check(osr_selftest(print_line, nullptr, &failures), "selftest");
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "osr-cli: %s\n", f.what.c_str());
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "osr-cli: %s\n", e.what());
    return 4;
  }
  return 0;
}
