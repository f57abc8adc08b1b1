/* SPDX-License-Identifier: Apache-2.0
 *
 * kenforge C API: subnetwork extraction and analysis for pairs of
 * (pre-trained, fine-tuned) weight checkpoints.
 *
 * Conventions:
 *   - Every fallible function returns a kf_status; KF_OK (0) means success.
 *     On failure, kf_last_error() returns a message describing what went
 *     wrong (thread-local, valid until the next failing call on the same
 *     thread).
 *   - Objects are opaque handles created by the library and released with
 *     the matching *_free function. Passing NULL where an object is
 *     required yields KF_STATUS_INPUT.
 *   - Strings and arrays returned through char** / char*** out-parameters
 *     are owned by the caller; release them with kf_string_free /
 *     kf_string_array_free.
 *   - The KENFORGE_THREADS environment variable caps internal parallelism
 *     (0 or unset = auto). Results never depend on the thread count.
 */
#ifndef KENFORGE_H
#define KENFORGE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* ---- status codes ---------------------------------------------------- */

typedef int32_t kf_status;

#define KF_STATUS_OK 0        /* success */
#define KF_STATUS_INTERNAL 1  /* unexpected internal failure */
#define KF_STATUS_INPUT 2     /* invalid input, file format or argument */
#define KF_STATUS_EVALUATOR 3 /* evaluator command/callback failed */
#define KF_STATUS_IO 4        /* output I/O failure */

const char* kf_last_error(void);
const char* kf_version(void);

void kf_string_free(char* s);
void kf_string_array_free(char** strings, uint64_t count);

/* ---- opaque handles --------------------------------------------------- */

typedef struct kf_checkpoint kf_checkpoint;
typedef struct kf_maskset kf_maskset;
typedef struct kf_evaluator kf_evaluator;

/* ---- KDE configuration ------------------------------------------------ */

typedef enum kf_bandwidth_rule {
    KF_BANDWIDTH_SCOTT = 0,
    KF_BANDWIDTH_SILVERMAN = 1,
    KF_BANDWIDTH_FIXED = 2,
} kf_bandwidth_rule;

typedef struct kf_kde_config {
    kf_bandwidth_rule bandwidth_rule;
    double fixed_h;              /* used when bandwidth_rule == FIXED; must be > 0 */
    double degenerate_bandwidth; /* fallback when the computed h is not positive */
} kf_kde_config;

/* Gaussian kernel, Scott's rule, degenerate bandwidth 1e-9. */
void kf_kde_config_default(kf_kde_config* config);

/* ---- checkpoints (KENC v1 container) ----------------------------------- */

kf_status kf_checkpoint_new(kf_checkpoint** out);
void kf_checkpoint_free(kf_checkpoint* ckpt);

kf_status kf_checkpoint_read(const char* path, kf_checkpoint** out);
kf_status kf_checkpoint_write(const kf_checkpoint* ckpt, const char* path);

/* values: row-major rows*cols floats, copied in. */
kf_status kf_checkpoint_add_tensor(kf_checkpoint* ckpt, const char* name, uint64_t rows,
                                   uint64_t cols, const float* values);
kf_status kf_checkpoint_meta_set(kf_checkpoint* ckpt, const char* key, const char* value);
/* NULL when the key is absent; pointer valid until the checkpoint changes. */
const char* kf_checkpoint_meta_get(const kf_checkpoint* ckpt, const char* key);

uint64_t kf_checkpoint_tensor_count(const kf_checkpoint* ckpt);
/* Lexicographic tensor order; NULL when index is out of range. */
const char* kf_checkpoint_tensor_name(const kf_checkpoint* ckpt, uint64_t index);
kf_status kf_checkpoint_tensor_shape(const kf_checkpoint* ckpt, const char* name,
                                     uint64_t* rows, uint64_t* cols);
/* Row-major values; NULL when the tensor is absent. */
const float* kf_checkpoint_tensor_values(const kf_checkpoint* ckpt, const char* name);

/* Names of tensors whose bit patterns differ, sorted lexicographically.
 * Both checkpoints must hold the same tensor names and shapes. */
kf_status kf_checkpoint_diff(const kf_checkpoint* a, const kf_checkpoint* b, char*** out_names,
                             uint64_t* out_count);

/* ---- row-level KDE ------------------------------------------------------ */

kf_status kf_kde_bandwidth(const double* row, uint64_t n, const kf_kde_config* config,
                           double* out_h);
/* out_densities must hold n doubles; out_h may be NULL. */
kf_status kf_kde_density(const double* row, uint64_t n, const kf_kde_config* config,
                         double* out_densities, double* out_h);
/* out_indices must hold min(k, n) entries; *out_count receives that size. */
kf_status kf_kde_select_top_k(const double* row, uint64_t n, uint64_t k,
                              const kf_kde_config* config, uint64_t* out_indices,
                              uint64_t* out_count);

/* ---- masks and pruning (KENM v1 container) ------------------------------ */

void kf_maskset_free(kf_maskset* masks);
kf_status kf_maskset_read(const char* path, kf_maskset** out);
kf_status kf_maskset_write(const kf_maskset* masks, const char* path);

uint64_t kf_maskset_k(const kf_maskset* masks);
uint64_t kf_maskset_tensor_count(const kf_maskset* masks);
const char* kf_maskset_tensor_name(const kf_maskset* masks, uint64_t index);
const char* kf_maskset_meta_get(const kf_maskset* masks, const char* key);
kf_status kf_maskset_tensor_shape(const kf_maskset* masks, const char* name, uint64_t* rows,
                                  uint64_t* cols);
kf_status kf_maskset_get_bit(const kf_maskset* masks, const char* name, uint64_t row,
                             uint64_t col, int32_t* out_bit);

/* Row-wise top-k retention masks over the named tensors of `fine`. */
kf_status kf_build_masks(const kf_checkpoint* fine, const char* const* tensor_names,
                         uint64_t n_tensors, uint64_t k, const kf_kde_config* config,
                         kf_maskset** out);

/* fine where the mask is 1, pre where it is 0; unmasked tensors pass
 * through from fine; meta gets state=pruned. */
kf_status kf_apply_masks(const kf_checkpoint* pre, const kf_checkpoint* fine,
                         const kf_maskset* masks, kf_checkpoint** out);

/* Reset report as JSON {"model_reset_pct": .., "per_tensor": {..}}.
 * scope_names NULL = masked tensors only; otherwise exactly the listed
 * tensors are counted. */
kf_status kf_reset_report_json(const kf_maskset* masks, const kf_checkpoint* fine,
                               const char* const* scope_names, uint64_t n_scope,
                               char** out_json);

/* ---- evaluators ----------------------------------------------------------- */

/* Runs [argv..., checkpoint_path]; the command must exit 0 and print a
 * decimal score as the last whitespace-delimited token of stdout. */
kf_status kf_evaluator_external_new(const char* const* argv, uint64_t argc, kf_evaluator** out);
/* score(c) = -sum((c - reference)^2); exact 0 iff c matches the reference. */
kf_status kf_evaluator_synthetic_new(const kf_checkpoint* reference, kf_evaluator** out);

/* Custom scorer; return KF_STATUS_OK and write *out_score, or any other
 * status to signal failure. The checkpoint handle is read-only and only
 * valid during the call. */
typedef kf_status (*kf_score_fn)(const kf_checkpoint* pruned, void* user_data,
                                 double* out_score);
kf_status kf_evaluator_callback_new(kf_score_fn fn, void* user_data, kf_evaluator** out);

void kf_evaluator_free(kf_evaluator* evaluator);
kf_status kf_evaluator_score(kf_evaluator* evaluator, const kf_checkpoint* ckpt,
                             double* out_score);

/* ---- incremental retention sweep ------------------------------------------- */

/* Walks the strictly ascending k schedule until the evaluator score of the
 * pruned checkpoint reaches `baseline`. Outputs the winning mask set and a
 * JSON trace {"k_star", "reached_baseline", "baseline", "trace": [..]}.
 * Either out_masks or out_trace_json may be NULL. */
kf_status kf_k_sweep(const kf_checkpoint* pre, const kf_checkpoint* fine,
                     const char* const* tensor_names, uint64_t n_tensors,
                     const kf_kde_config* config, kf_evaluator* evaluator,
                     const uint64_t* schedule, uint64_t n_schedule, double baseline,
                     kf_maskset** out_masks, char** out_trace_json);

/* ---- subnetwork analysis ----------------------------------------------------- */

/* Tensor selection for the analysis functions: pass an explicit name list
 * OR a regex (searched against tensor names), not both; neither selects
 * every tensor. */

kf_status kf_pairwise_overlap_json(const kf_maskset* a, const kf_maskset* b,
                                   const char* label_a, const char* label_b,
                                   const char* const* tensor_names, uint64_t n_tensors,
                                   const char* tensor_regex, char** out_json);

kf_status kf_in_breadth_json(const kf_maskset* const* masks, const char* const* labels,
                             uint64_t n_masks, const char* const* tensor_names,
                             uint64_t n_tensors, const char* tensor_regex, char** out_json);

/* ---- visual artifacts ----------------------------------------------------------- */

typedef enum kf_grid_format {
    KF_GRID_PGM = 0,
    KF_GRID_CSV = 1,
} kf_grid_format;

/* Tri-panel difference grids of one tensor:
 * out_prefix.{common,a_only,b_only}.{pgm|csv}. stride > 1 block-downsamples
 * (lossy). out_files_json receives a JSON array of the written paths. */
kf_status kf_emit_tri_panel(const kf_maskset* a, const kf_maskset* b, const char* tensor,
                            const char* out_prefix, kf_grid_format format, uint64_t stride,
                            char** out_files_json);

/* Similarity table CSV from overlap-report JSON strings (as produced by
 * kf_pairwise_overlap_json): one row per unordered pair, one column per
 * model label, percentages with 2 decimals. */
kf_status kf_emit_overlap_table(const char* const* report_jsons, uint64_t n_reports,
                                const char* out_path);

/* ---- dataset distillation ---------------------------------------------------------- */

/* Distills a multi-annotator CSV into per-variant gold datasets under
 * out_dir (one CSV per variant + stats.json) via majority voting with
 * ties resolved as irony. column_map remaps header names as
 * "logical=actual,..." (logical: id_sentence, text, variant, annotator,
 * label); NULL keeps the defaults. out_stats_json may be NULL. */
kf_status kf_distill_csv(const char* in_csv, const char* out_dir, const char* column_map,
                         char** out_stats_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* KENFORGE_H */
