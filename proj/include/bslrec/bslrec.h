/* C interface to the bslrec training and analysis engine.
 *
 * Objects are opaque handles created by *_new / *_load and released with the
 * matching *_free. Every fallible call returns a bsl_status; on failure the
 * message is available from bsl_last_error() on the same thread until the
 * next call. Strings returned through char** are owned by the caller and
 * released with bsl_string_free.
 */
#ifndef BSLREC_BSLREC_H_
#define BSLREC_BSLREC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(BSLREC_BUILDING)
#define BSL_API __attribute__((visibility("default")))
#else
#define BSL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bsl_status {
  BSL_OK = 0,
  BSL_ERR_INVALID_ARGUMENT = 1,
  BSL_ERR_IO = 2,
  BSL_ERR_PARSE = 3,
  BSL_ERR_CONFIG = 4,
  BSL_ERR_NUMERIC = 5,
  BSL_ERR_CORRUPT = 6,
  BSL_ERR_MISMATCH = 7,
  BSL_ERR_INTERNAL = 8
} bsl_status;

typedef enum bsl_loss_kind {
  BSL_LOSS_BPR = 0,
  BSL_LOSS_BCE = 1,
  BSL_LOSS_MSE = 2,
  BSL_LOSS_SL = 3,
  BSL_LOSS_BSL_PSEUDOCODE = 4,
  BSL_LOSS_BSL_CANONICAL = 5,
  BSL_LOSS_SL_NO_VARIANCE = 6
} bsl_loss_kind;

typedef struct bsl_dataset bsl_dataset;
typedef struct bsl_config bsl_config;
typedef struct bsl_model bsl_model;

BSL_API const char* bsl_version(void);
BSL_API const char* bsl_last_error(void);
BSL_API const char* bsl_status_name(bsl_status s);
BSL_API void bsl_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */
BSL_API bsl_status bsl_dataset_load(const char* train_path, const char* test_path, int remap,
                                    bsl_dataset** out);
BSL_API bsl_status bsl_dataset_save(const bsl_dataset* ds, const char* train_path, const char* test_path);
BSL_API bsl_status bsl_dataset_shape(const bsl_dataset* ds, size_t* n_users, size_t* n_items,
                                     size_t* n_train, size_t* n_test);
/* Copies item_popularity into out (n_items entries). */
BSL_API bsl_status bsl_dataset_popularity(const bsl_dataset* ds, size_t* out, size_t n);
BSL_API bsl_status bsl_dataset_groups(const bsl_dataset* ds, size_t n_groups, size_t* out, size_t n);
BSL_API bsl_status bsl_dataset_contaminate(const bsl_dataset* ds, double ratio, uint64_t seed,
                                           bsl_dataset** out, size_t* injected);
BSL_API void bsl_dataset_free(bsl_dataset* ds);

/* Normalizes raw split files into out_dir (train.txt, test.txt, summary.json). */
BSL_API bsl_status bsl_ingest(const char* train_path, const char* test_path, int remap, const char* out_dir);
/* kind: "planted" or "zipf". */
BSL_API bsl_status bsl_generate(const char* kind, uint64_t seed, const char* out_dir);

/* ---- configuration ----------------------------------------------------- */
BSL_API bsl_status bsl_config_new(bsl_config** out);
BSL_API bsl_status bsl_config_load(const char* path, bsl_config** out);
BSL_API bsl_status bsl_config_set(bsl_config* cfg, const char* key, const char* value);
BSL_API bsl_status bsl_config_get(const bsl_config* cfg, const char* key, char** value);
BSL_API bsl_status bsl_config_text(const bsl_config* cfg, char** text);
BSL_API size_t bsl_config_key_count(void);
BSL_API const char* bsl_config_key_name(size_t index);
BSL_API void bsl_config_free(bsl_config* cfg);

/* ---- models ------------------------------------------------------------ */
BSL_API bsl_status bsl_model_load(const char* checkpoint_path, bsl_model** out);
BSL_API bsl_status bsl_model_save(const bsl_model* m, const char* checkpoint_path);
BSL_API bsl_status bsl_model_shape(const bsl_model* m, size_t* n_users, size_t* n_items, size_t* dim,
                                   uint64_t* epoch);
/* Cosine scores of one user against every item (n must equal n_items). */
BSL_API bsl_status bsl_model_score_all(const bsl_model* m, uint32_t user, double* out, size_t n);
BSL_API void bsl_model_free(bsl_model* m);

/* ---- experiments (the command-line subcommands) ------------------------ */
BSL_API bsl_status bsl_run_train(const bsl_config* cfg, const char* out_dir, int resume, unsigned threads,
                                 int verbose);
/* Writes the metric CSV to csv_path (if non-null) only after success. */
BSL_API bsl_status bsl_run_evaluate(const bsl_model* m, const bsl_dataset* ds, const size_t* ks, size_t n_ks,
                                    const bsl_config* cfg, unsigned threads, char** json_out,
                                    const char* csv_path);

typedef struct bsl_sweep_spec {
  const double* r_noise;
  size_t n_r_noise;
  const size_t* n_negatives;
  size_t n_n_negatives;
  const double* pos_noise;
  size_t n_pos_noise;
  const double* tau_grid; /* NULL: the config's grid */
  size_t n_tau_grid;
} bsl_sweep_spec;

BSL_API bsl_status bsl_run_sweep(const bsl_config* cfg, const bsl_sweep_spec* sweep, unsigned threads,
                                 int verbose, const char* csv_path);
BSL_API bsl_status bsl_run_dro_diagnose(const bsl_model* m, const bsl_dataset* ds, const bsl_config* cfg,
                                        const double* taus, size_t n_taus, size_t n_batches,
                                        const char* out_dir);
/* second may be NULL for a single-model report. */
BSL_API bsl_status bsl_run_fairness_report(const bsl_model* first, const bsl_model* second,
                                           const bsl_dataset* ds, const bsl_config* cfg, size_t n_groups,
                                           unsigned threads, char** json_out, const char* csv_path);

/* ---- numerics ---------------------------------------------------------- */
/* pos: batch entries; neg: batch x n_neg row-major. groups may be NULL. */
BSL_API bsl_status bsl_loss_eval(bsl_loss_kind kind, const double* pos, const double* neg, size_t batch,
                                 size_t n_neg, double tau, double tau_pos, double tau_neg, double balance,
                                 const size_t* groups, double* value, double* grad_pos, double* grad_neg);
BSL_API bsl_status bsl_dro_worst_case(const double* scores, const double* base, size_t n, double tau,
                                      double* weights, double* kl_radius);
BSL_API bsl_status bsl_dro_dual_value(const double* scores, const double* base, size_t n, double tau,
                                      double eta, double* value);
BSL_API bsl_status bsl_dro_kl_ball_sup(const double* scores, const double* base, size_t n, double eta,
                                       double* value, double* argmax);
BSL_API bsl_status bsl_dro_tau_star(double variance, double eta, double* tau);
BSL_API bsl_status bsl_dro_estimate_eta(const double* scores, const double* base, size_t n, double tau,
                                        double* eta);

#ifdef __cplusplus
}
#endif

#endif /* BSLREC_BSLREC_H_ */
