#ifndef AHB_AHB_H
#define AHB_AHB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AHB_API __declspec(dllexport)
#else
#define AHB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ahb_status {
  AHB_OK = 0,
  AHB_ERR_CONFIG = 1,
  AHB_ERR_SCHEMA = 2,
  AHB_ERR_PARSE = 3,
  AHB_ERR_VALIDATION = 4,
  AHB_ERR_INFEASIBLE = 5,
  AHB_ERR_FIT = 6,
  AHB_ERR_UNAVAILABLE = 7,
  AHB_ERR_IO = 8,
  AHB_ERR_INTERNAL = 9
} ahb_status;

typedef struct ahb_dataset ahb_dataset;
typedef struct ahb_truth ahb_truth;
typedef struct ahb_model ahb_model;
typedef struct ahb_match ahb_match;

AHB_API const char* ahb_version(void);
AHB_API const char* ahb_status_name(ahb_status status);

/* Message of the last failed call on this thread; empty after a success. */
AHB_API const char* ahb_last_error(void);

/* Strings returned through char** out-parameters are owned by the caller. */
AHB_API void ahb_string_free(char* s);

/* Named sub-stream of a root seed. */
AHB_API uint64_t ahb_derive_seed(uint64_t seed, const char* stream);

/* ---- datasets ---- */

/* schema_json may be NULL for the default schema (covariates: every column
   except t and y). */
AHB_API ahb_status ahb_dataset_load(const char* csv_path, const char* schema_json,
                                    ahb_dataset** out);

/* Draws a dataset from a simulation config; truth may be NULL. */
AHB_API ahb_status ahb_dataset_simulate(const char* dgp_json, ahb_dataset** data,
                                        ahb_truth** truth);

/* Seeded partition. validation may be NULL when validation_fraction is 0. */
AHB_API ahb_status ahb_dataset_split(const ahb_dataset* data, double train_fraction,
                                     double validation_fraction, uint64_t seed,
                                     ahb_dataset** train, ahb_dataset** validation,
                                     ahb_dataset** test);

AHB_API ahb_status ahb_dataset_without_outcomes(const ahb_dataset* data, ahb_dataset** out);
AHB_API ahb_status ahb_dataset_write_csv(const ahb_dataset* data, const char* path);
AHB_API size_t ahb_dataset_rows(const ahb_dataset* data);
AHB_API size_t ahb_dataset_columns(const ahb_dataset* data);
AHB_API size_t ahb_dataset_treated(const ahb_dataset* data);
AHB_API int ahb_dataset_has_outcomes(const ahb_dataset* data);
AHB_API void ahb_dataset_free(ahb_dataset* data);

/* ---- simulation truth ---- */

/* Truth restricted to the units of part (matched by unit id). */
AHB_API ahb_status ahb_truth_subset(const ahb_truth* truth, const ahb_dataset* full,
                                    const ahb_dataset* part, ahb_truth** out);
AHB_API ahb_status ahb_truth_write_csv(const ahb_truth* truth, const ahb_dataset* data,
                                       const char* path);
/* Truth values from a CSV (id, h and optionally g, propensity, y0, y1). A
   truth read from file carries no functions and cannot back an oracle model. */
AHB_API ahb_status ahb_truth_read_csv(const char* path, const ahb_dataset* data,
                                      ahb_truth** out);
AHB_API double ahb_truth_sigma(const ahb_truth* truth);
AHB_API void ahb_truth_free(ahb_truth* truth);

/* ---- outcome models ---- */

/* ensemble_json: {"trees", "max_depth", "min_leaf", "seed"}; NULL for defaults. */
AHB_API ahb_status ahb_model_fit_builtin(const ahb_dataset* train, const char* ensemble_json,
                                         ahb_model** out);
AHB_API ahb_status ahb_model_load_external(const char* predictions_csv, ahb_model** out);
AHB_API ahb_status ahb_model_oracle(const ahb_truth* truth, ahb_model** out);
AHB_API const char* ahb_model_name(const ahb_model* model);
AHB_API void ahb_model_free(ahb_model* model);

/* ---- matching ---- */

/* request_json: {"options": {...match options...}, "variant": "tau_a" | "tau_b"
   | null, "workers": int, "verify_oracle": bool, "trace": bool}. */
AHB_API ahb_status ahb_match_run(const ahb_dataset* test, const ahb_model* model,
                                 const char* request_json, ahb_match** out);

AHB_API size_t ahb_match_units(const ahb_match* run);
AHB_API size_t ahb_match_solved(const ahb_match* run);
/* 1 agree, 0 disagree, -1 not checked. */
AHB_API int ahb_match_oracle_agreement(const ahb_match* run);

/* JSON object: n_units, n_solved, n_failed, errors [{unit_id, stage,
   message}], oracle_agreement, oracle_mismatches, att (when available). */
AHB_API ahb_status ahb_match_summary(const ahb_match* run, char** out_json);

/* boxes.csv, groups.csv, estimates.csv, errors.csv and trace.csv when traced. */
AHB_API ahb_status ahb_match_write(const ahb_match* run, const char* out_dir);

/* request_json: {"methods": [...], "levels": [...], "resampling": {...},
   "true_variance": number | null}. Writes the intervals CSV to path.
   summary_json (may be NULL) receives {"n_intervals", "skipped": [...]}. */
AHB_API ahb_status ahb_match_intervals(const ahb_match* run, const ahb_model* model,
                                       const char* request_json, const char* path,
                                       char** summary_json);

/* Same request; every interval is checked against the true ITE h of the
   truth and a coverage report CSV is written to path. Only the first level
   is used. */
AHB_API ahb_status ahb_match_coverage(const ahb_match* run, const ahb_model* model,
                                      const ahb_truth* truth, const char* request_json,
                                      const char* path);

AHB_API void ahb_match_free(ahb_match* run);

/* ---- tuning and studies ---- */

/* grid_json: array of match-option objects, or an object whose values are
   arrays (expanded as a Cartesian product in key order). Writes the tuning
   report to report_path and the best options object to best_json. */
AHB_API ahb_status ahb_tune(const ahb_dataset* validation, const ahb_model* model,
                            const char* grid_json, int workers, const char* report_path,
                            char** best_json);

/* Replicate study; rows_path receives per-replicate metrics and
   summary_path the per-(scenario, method) mean and sd. */
AHB_API ahb_status ahb_simulation_study(const char* config_json, const char* rows_path,
                                        const char* summary_path);

AHB_API ahb_status ahb_coverage_study(const char* config_json, const char* report_path);

/* Resolved configs with every default filled in (for manifests). kind is one
   of "match", "ensemble", "resampling", "dgp", "schema", "study", "coverage". */
AHB_API ahb_status ahb_resolve_config(const char* kind, const char* json, char** out_json);

/* ---- reports ---- */

/* Summary of a match output directory. data holds the matched units (used for
   treatment lookups); compare_dir may be NULL, otherwise mutual membership
   with the groups of that run is reported. request_json (may be NULL):
   {"cate_column": name, "bins": int}. */
AHB_API ahb_status ahb_report(const char* run_dir, const ahb_dataset* data,
                              const char* compare_dir, const char* request_json,
                              char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* AHB_AHB_H */
