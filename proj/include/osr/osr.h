/* C interface to the substation reconfiguration library.
 *
 * Every function returns an osr_status. On failure the message is available
 * from osr_last_error() (per thread, valid until the next call on that
 * thread). Handles are opaque and must be released with their _free call.
 */
#ifndef OSR_OSR_H
#define OSR_OSR_H

#include <stddef.h>
#include <stdint.h>

#if defined(OSR_BUILDING_LIBRARY)
#define OSR_API __attribute__((visibility("default")))
#else
#define OSR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  OSR_OK = 0,
  OSR_ERR_CONFIG = 2,
  OSR_ERR_INFEASIBLE = 3,
  OSR_ERR_NUMERICAL = 4,
  OSR_ERR_INVALID = 5,
  OSR_ERR_IO = 6
} osr_status;

typedef struct osr_grid osr_grid;
typedef struct osr_checkpoint osr_checkpoint;

OSR_API const char* osr_version(void);
OSR_API const char* osr_last_error(void);

/* Grids */
OSR_API osr_status osr_grid_load(const char* path, osr_grid** out);
OSR_API void osr_grid_free(osr_grid* grid);
OSR_API size_t osr_grid_num_switches(const osr_grid* grid);
OSR_API const char* osr_grid_context_id(const osr_grid* grid);

/* Exchange capacity of a decision (one 0/1 byte per switch). An infeasible
 * decision returns OSR_ERR_INFEASIBLE. big_m <= 0 selects the default. */
OSR_API osr_status osr_capacity(const osr_grid* grid, const uint8_t* states, size_t n, double big_m,
                                double* capacity_mw);
/* Writes the exchange LP of a decision in LP text layout. */
OSR_API osr_status osr_dump_lp(const osr_grid* grid, const uint8_t* states, size_t n, const char* path);

typedef enum { OSR_SOLVE_ALL_CLOSED = 0, OSR_SOLVE_EXHAUSTIVE = 1, OSR_SOLVE_BNB = 2 } osr_solve_method;

typedef struct {
  osr_solve_method method;
  int max_openings;
  double gap;
  double time_limit_s;
} osr_solve_options;

typedef struct {
  double capacity_mw;
  double bound_mw;
  double gap_achieved;
  int timed_out;
  uint64_t nodes;
} osr_solve_info;

OSR_API void osr_solve_options_default(osr_solve_options* opts);
OSR_API osr_status osr_solve(const osr_grid* grid, const osr_solve_options* opts, uint8_t* states_out, size_t n,
                             osr_solve_info* info);

/* Learned policies */
OSR_API osr_status osr_checkpoint_load(const char* path, osr_checkpoint** out);
OSR_API void osr_checkpoint_free(osr_checkpoint* ckpt);
OSR_API osr_status osr_decide(const osr_checkpoint* ckpt, const osr_grid* grid, uint8_t* states_out, size_t n);
/* Writes the per-switch scores (logits). */
OSR_API osr_status osr_scores(const osr_checkpoint* ckpt, const osr_grid* grid, double* logits_out, size_t n);
/* which_out (optional) receives 0 for fmc, 1 for mt, 2 for the all-closed fallback. */
OSR_API osr_status osr_ensemble_decide(const osr_checkpoint* fmc, const osr_checkpoint* mt, const osr_grid* grid,
                                       uint8_t* states_out, size_t n, int* which_out);

/* Datasets */
typedef struct {
  double sigma_l, sigma_z, sigma_t, sigma_f;
  double p_one_line, p_two_lines;
} osr_noise;

OSR_API void osr_noise_default(osr_noise* noise);
/* Split `index` of a data profile ("desk" or "paper"); OSR_ERR_CONFIG past
 * the last split or for an unknown profile. */
OSR_API osr_status osr_profile_split(const char* profile, size_t index, const char** name, size_t* n);
/* Writes n contexts plus manifest.json into out_dir. n_written may be NULL. */
OSR_API osr_status osr_generate_dataset(const char* base_path, const osr_noise* noise, size_t n, uint64_t seed,
                                        const char* out_dir, const char* prefix, size_t* n_written);

/* Training */
typedef struct {
  const char* estimator; /* "mc", "fmc" or "mt" */
  double beta;
  double tau;
  int samples;
  int batch;
  int max_iterations;
  int validation_period;
  uint64_t seed;
  const char* model_profile; /* "tiny" or "paper" */
  int knots;
  int sampling_perturb; /* 1: perturb around the mode, 0: independent */
  int reject_noop;
  double p_one;
  double p_two;
  double lr;
  double clip;
  int threads;
  const char* train_dir;
  const char* valid_dir;
  const char* out_dir;     /* receives best.ckpt, train_log.jsonl, memory.tsv */
  const char* memory_in;   /* optional memory table to resume from */
} osr_train_options;

typedef struct {
  double best_validation_mw;
  int best_iteration;
  int evaluations;
} osr_train_info;

typedef void (*osr_log_fn)(const char* json_record, void* user);

/* Fills the published settings for the named estimator. */
OSR_API osr_status osr_train_options_default(const char* estimator, osr_train_options* opts);
OSR_API osr_status osr_train(const osr_train_options* opts, osr_log_fn log, void* user, osr_train_info* info);

/* Evaluation. method: "all-closed", "bnb", "exhaustive", "gnn", "ensemble".
 * reference_csv (optional) is a metrics CSV from a solver run used for the
 * normalized score. Writes metrics.csv, usage.csv and decisions.jsonl. */
typedef struct {
  const char* method;
  const char* dataset_dir;
  const char* checkpoint;     /* gnn */
  const char* checkpoint_fmc; /* ensemble */
  const char* checkpoint_mt;  /* ensemble */
  const char* reference_csv;
  const char* out_dir;
  osr_solve_options solver;
} osr_eval_options;

typedef struct {
  size_t contexts;
  double mean_capacity_pu;
  double mean_improvement_pct;
  double mean_normalized; /* NaN when no solver reference */
  double mean_openings;
  size_t never_used;
  size_t infeasible;
  size_t excluded;
} osr_eval_summary;

OSR_API void osr_eval_options_default(osr_eval_options* opts);
OSR_API osr_status osr_evaluate(const osr_eval_options* opts, osr_eval_summary* summary);

/* Summary table and histogram bins from evaluation output directories. */
OSR_API osr_status osr_report(const char* const* eval_dirs, size_t n_dirs, const char* out_dir, int bins);

/* Runs the oracle suite; each check is reported through `line`
 * ("PASS name ..." / "FAIL name ..."). failures receives the failure count. */
OSR_API osr_status osr_selftest(osr_log_fn line, void* user, int* failures);

#ifdef __cplusplus
}
#endif

#endif
