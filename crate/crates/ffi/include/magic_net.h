#ifndef MAGIC_NET_H
#define MAGIC_NET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MnLearnerKind {
  MN_LEARNER_KIND_CGRU = 0,
  MN_LEARNER_KIND_MAGIC = 1,
  MN_LEARNER_KIND_CPNN = 2,
} MnLearnerKind;

typedef enum MnStatus {
  MN_STATUS_OK = 0,
  MN_STATUS_NULL_POINTER = 1,
  MN_STATUS_INVALID_ARGUMENT = 2,
  MN_STATUS_IO = 3,
  // A file exists but is not a valid checkpoint of a supported version.
  MN_STATUS_FORMAT = 4,
  // Internal failure; the handle involved should be freed.
  MN_STATUS_PANIC = 5,
} MnStatus;

// Opaque, immutable model checkpoint.
typedef struct MnCheckpoint MnCheckpoint;

// Opaque streaming learner.
typedef struct MnLearner MnLearner;

// Training hyperparameters. Start from [`mn_hyperparams_default`].
typedef struct MnHyperparams {
  size_t window;
  size_t batch_size;
  size_t epochs;
  double lr;
  size_t hidden;
  size_t exp_size;
  size_t num_batches;
} MnHyperparams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on this thread.
const char *mn_last_error_message(void);

// Defaults for synthetic streams (hidden 50, window 10).
struct MnHyperparams mn_hyperparams_default(void);

// Creates a learner. `hyper` may be null for the defaults.
//
// # Safety
// `hyper` must be null or point to a valid `MnHyperparams`; `out` must be
// valid for writes.
enum MnStatus mn_learner_new(enum MnLearnerKind kind,
                             size_t input_dim,
                             const struct MnHyperparams *hyper,
                             uint64_t seed,
                             struct MnLearner **out);

// # Safety
// `learner` must be null or a handle from [`mn_learner_new`] not yet freed.
void mn_learner_free(struct MnLearner *learner);

// Advances the learner's window with `x` and writes P(y = 1).
//
// # Safety
// `learner` must be a live handle, `x` must point to `len` doubles and
// `out_probability` must be valid for writes.
enum MnStatus mn_learner_predict(struct MnLearner *learner,
                                 const double *x,
                                 size_t len,
                                 double *out_probability);

// Advances the window without predicting (held-out points).
//
// # Safety
// As [`mn_learner_predict`].
enum MnStatus mn_learner_observe(struct MnLearner *learner, const double *x, size_t len);

// Adds a labelled point. `out_trained` (nullable) is set when a mini-batch
// was trained.
//
// # Safety
// As [`mn_learner_predict`]; `out_trained` must be null or valid for writes.
enum MnStatus mn_learner_learn(struct MnLearner *learner,
                               const double *x,
                               size_t len,
                               uint8_t label,
                               bool *out_trained);

// Signals a detected concept drift.
//
// # Safety
// `learner` must be a live handle.
enum MnStatus mn_learner_drift_detected(struct MnLearner *learner);

// Number of stored real values.
//
// # Safety
// `learner` must be a live handle and `out` valid for writes.
enum MnStatus mn_learner_param_count(const struct MnLearner *learner, size_t *out);

// Writes the learner's current model as a checkpoint file.
//
// # Safety
// `learner` must be a live handle and `path` a NUL-terminated string.
enum MnStatus mn_learner_save_checkpoint(const struct MnLearner *learner,
                                         const char *path_utf8,
                                         size_t concept_index);

// # Safety
// `path` must be a NUL-terminated string and `out` valid for writes.
enum MnStatus mn_checkpoint_load(const char *path_utf8, struct MnCheckpoint **out);

// # Safety
// `ck` must be null or a handle from [`mn_checkpoint_load`] not yet freed.
void mn_checkpoint_free(struct MnCheckpoint *ck);

// Window length `W` and feature count of a checkpoint.
//
// # Safety
// `ck` must be a live handle; outputs must be valid for writes.
enum MnStatus mn_checkpoint_shape(const struct MnCheckpoint *ck,
                                  size_t *out_window,
                                  size_t *out_input_dim,
                                  size_t *out_candidates);

// P(y = 1) of the checkpoint's answering model on one sequence of `steps`
// rows of `input_dim` features (row-major, oldest first).
//
// # Safety
// `ck` must be a live handle, `seq` must point to `steps * input_dim`
// doubles and `out_probability` must be valid for writes.
enum MnStatus mn_checkpoint_predict(const struct MnCheckpoint *ck,
                                    const double *seq,
                                    size_t steps,
                                    size_t input_dim,
                                    double *out_probability);

// Cohen's Kappa of a binary confusion matrix.
double mn_cohen_kappa(uint64_t tp, uint64_t fn_, uint64_t fp, uint64_t tn);

// AVG and BWT of an `n x n` lower-triangular score matrix packed row by
// row (`n (n + 1) / 2` values: `R[0][0], R[1][0], R[1][1], ...`).
// `out_bwt_defined` is false for `n = 1`, where BWT is reported as 0.
//
// # Safety
// `packed` must point to `n (n + 1) / 2` doubles; outputs must be valid for writes.
enum MnStatus mn_avg_bwt(const double *packed,
                         size_t n,
                         double *out_avg,
                         double *out_bwt,
                         bool *out_bwt_defined);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAGIC_NET_H */
