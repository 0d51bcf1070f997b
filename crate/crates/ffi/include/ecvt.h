#ifndef ECVT_H
#define ECVT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EcvtStatus {
  ECVT_STATUS_OK = 0,
  ECVT_STATUS_NULL_POINTER = 1,
  ECVT_STATUS_INVALID_ARGUMENT = 2,
  ECVT_STATUS_PARSE = 3,
  ECVT_STATUS_IO = 4,
  ECVT_STATUS_DEGENERATE_DATA = 5,
  ECVT_STATUS_DOMAIN = 6,
  ECVT_STATUS_RESAMPLING = 7,
  ECVT_STATUS_PANIC = 8,
} EcvtStatus;

typedef enum EcvtPredictionKind {
  // Participant-level simulation; compared through `|r|`.
  ECVT_PREDICTION_KIND_SIMULATION = 0,
  // One value per item; compared through `r^2`.
  ECVT_PREDICTION_KIND_PREDICTOR = 1,
} EcvtPredictionKind;

typedef enum EcvtVerdict {
  ECVT_VERDICT_UNDERFIT = -1,
  ECVT_VERDICT_CONSISTENT = 0,
  ECVT_VERDICT_OVERFIT = 1,
} EcvtVerdict;

// Item x participant table.
typedef struct EcvtTable EcvtTable;

// Result of a full validation run.
typedef struct EcvtValidation EcvtValidation;

typedef struct EcvtIcc {
  double icc;
  // NaN when the residual mean square is zero.
  double q_hat;
  double f_obs;
  double probability;
  double lower;
  double upper;
} EcvtIcc;

// Options for [`ecvt_validate`]. Zero fields take the library defaults,
// except `seed`, which is used as given.
typedef struct EcvtValidateOptions {
  uint64_t seed;
  size_t replicates;
  size_t target_k;
  double alpha;
  // Worker threads; 0 uses the global pool.
  size_t threads;
} EcvtValidateOptions;

typedef struct EcvtValidationSummary {
  size_t items;
  size_t participants;
  double missing_fraction;
  double icc;
  // NaN when undefined.
  double q_anova;
  double r_resampled;
  double q_resampled;
  double chi2;
  size_t df;
  double p_value;
  bool significant;
  bool converged;
} EcvtValidationSummary;

typedef struct EcvtSeriesRow {
  size_t group_size;
  double r_mean;
  double r_sd;
  double predicted;
} EcvtSeriesRow;

typedef struct EcvtFit {
  double r;
  double statistic;
  double icc;
  double lower;
  double upper;
  enum EcvtVerdict verdict;
} EcvtFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer is
// valid until the next call into this library on the same thread.
const char *ecvt_last_error(void);

// Library version as a static NUL-terminated string.
const char *ecvt_version(void);

// Builds a table from `m * n` row-major values. `present` may be null for a
// complete table; otherwise a zero byte marks a missing cell.
//
// # Safety
// `values` must point to `m * n` doubles and `present`, if not null, to
// `m * n` bytes. `out` must be writable.
enum EcvtStatus ecvt_table_from_values(size_t m,
                                       size_t n,
                                       const double *values,
                                       const uint8_t *present,
                                       struct EcvtTable **out);

// Parses a delimited text table with the same autodetection as the CLI.
//
// # Safety
// `text` must be a NUL-terminated string and `out` writable.
enum EcvtStatus ecvt_table_parse(const char *text, struct EcvtTable **out);

// Loads a delimited text table from a file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum EcvtStatus ecvt_table_load(const char *path, struct EcvtTable **out);

// # Safety
// `table` must be null or a handle from this library not yet freed.
void ecvt_table_free(struct EcvtTable *table);

// Number of items (rows); 0 for a null handle.
//
// # Safety
// `table` must be null or a live handle.
size_t ecvt_table_items(const struct EcvtTable *table);

// Number of participants (columns); 0 for a null handle.
//
// # Safety
// `table` must be null or a live handle.
size_t ecvt_table_participants(const struct EcvtTable *table);

// Number of missing cells; 0 for a null handle.
//
// # Safety
// `table` must be null or a live handle.
size_t ecvt_table_missing(const struct EcvtTable *table);

// ANOVA ICC of the item means with a two-sided interval at `probability`.
//
// # Safety
// `table` must be a live handle and `out` writable.
enum EcvtStatus ecvt_icc(const struct EcvtTable *table, double probability, struct EcvtIcc *out);

// Full validation: ANOVA, resampling series and the chi-square test.
// `options` may be null for defaults with seed 0.
//
// # Safety
// `table` must be a live handle, `options` null or readable, `out` writable.
enum EcvtStatus ecvt_validate(const struct EcvtTable *table,
                              const struct EcvtValidateOptions *options,
                              struct EcvtValidation **out);

// # Safety
// `v` must be null or a handle from [`ecvt_validate`] not yet freed.
void ecvt_validation_free(struct EcvtValidation *v);

// # Safety
// `v` must be a live handle and `out` writable.
enum EcvtStatus ecvt_validation_summary(const struct EcvtValidation *v,
                                        struct EcvtValidationSummary *out);

// Number of group sizes in the resampling series; 0 for a null handle.
//
// # Safety
// `v` must be null or a live handle.
size_t ecvt_validation_series_len(const struct EcvtValidation *v);

// # Safety
// `v` must be a live handle and `out` writable.
enum EcvtStatus ecvt_validation_series_row(const struct EcvtValidation *v,
                                           size_t index,
                                           struct EcvtSeriesRow *out);

// The full report as JSON, identical to the CLI's `--json` output. Release
// with [`ecvt_string_free`].
//
// # Safety
// `v` must be a live handle and `out` writable.
enum EcvtStatus ecvt_validation_json(const struct EcvtValidation *v, char **out);

// # Safety
// `s` must be null or a string returned by this library not yet freed.
void ecvt_string_free(char *s);

// Compares `len` item-level predictions with the table's item means and
// judges them against the ICC interval at `1 - alpha`.
//
// # Safety
// `table` must be a live handle, `predictions` must point to `len` doubles
// and `out` must be writable.
enum EcvtStatus ecvt_fit(const struct EcvtTable *table,
                         const double *predictions,
                         size_t len,
                         enum EcvtPredictionKind kind,
                         double alpha,
                         struct EcvtFit *out);

// Quantile of the F distribution.
//
// # Safety
// `out` must be writable.
enum EcvtStatus ecvt_quant_f(double p, double d1, double d2, double *out);

// Chi-square CDF.
//
// # Safety
// `out` must be writable.
enum EcvtStatus ecvt_prob_chi2(double x, double df, double *out);

// Expected correlation of two `n`-participant groups for variance ratio `q`.
double ecvt_extrapolate_icc(double q, double n);

// Variance ratio implied by correlation `rho` at `n` participants.
//
// # Safety
// `out` must be writable.
enum EcvtStatus ecvt_q_from_icc(double rho, double n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ECVT_H */
