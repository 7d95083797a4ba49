#ifndef SEMCOM_H
#define SEMCOM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SemcomStatus {
  SEMCOM_STATUS_OK = 0,
  SEMCOM_STATUS_NULL_POINTER = 1,
  SEMCOM_STATUS_INVALID_UTF8 = 2,
  SEMCOM_STATUS_IO = 3,
  SEMCOM_STATUS_PARSE = 4,
  SEMCOM_STATUS_INVALID_CONFIG = 5,
  SEMCOM_STATUS_INVALID_ARGUMENT = 6,
  SEMCOM_STATUS_EMPTY_DATASET = 7,
  SEMCOM_STATUS_NUMERIC = 8,
  SEMCOM_STATUS_INTERNAL = 9,
  SEMCOM_STATUS_PANIC = 10,
} SemcomStatus;

/**
 * Run configuration.
 */
typedef struct SemcomConfig SemcomConfig;

/**
 * A loaded, unpruned dataset with its tag-to-topic map.
 */
typedef struct SemcomDataset SemcomDataset;

/**
 * Communities and metrics of one detection run.
 */
typedef struct SemcomResult SemcomResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next semcom call on the same thread.
 */
const char *semcom_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *semcom_version(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void semcom_string_free(char *s);

/**
 * New configuration holding the defaults.
 */
struct SemcomConfig *semcom_config_new(void);

/**
 * # Safety
 * `cfg` must come from [`semcom_config_new`] and not be freed twice.
 */
void semcom_config_free(struct SemcomConfig *cfg);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
enum SemcomStatus semcom_config_set_alpha(struct SemcomConfig *cfg, double alpha);

/**
 * PurQ weights to report; replaces the current list.
 *
 * # Safety
 * `cfg` must be a live config handle and `betas` must point to `len` values.
 */
enum SemcomStatus semcom_config_set_betas(struct SemcomConfig *cfg,
                                          const double *betas,
                                          size_t len);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
enum SemcomStatus semcom_config_set_svd_k(struct SemcomConfig *cfg, size_t k);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
enum SemcomStatus semcom_config_set_min_clusters(struct SemcomConfig *cfg, size_t min_clusters);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
enum SemcomStatus semcom_config_set_epsilon(struct SemcomConfig *cfg, double epsilon);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
enum SemcomStatus semcom_config_set_min_tag_freq(struct SemcomConfig *cfg, size_t min_tag_freq);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
enum SemcomStatus semcom_config_set_min_shared(struct SemcomConfig *cfg, size_t min_shared);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
enum SemcomStatus semcom_config_set_profile_theta(struct SemcomConfig *cfg, double theta);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
enum SemcomStatus semcom_config_set_singleton_intra(struct SemcomConfig *cfg, double value);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
enum SemcomStatus semcom_config_set_seed(struct SemcomConfig *cfg, uint64_t seed);

/**
 * Loads the standard TSV files from a directory.
 *
 * # Safety
 * `dir` must be a NUL-terminated string; `out` must be writable.
 */
enum SemcomStatus semcom_dataset_load_dir(const char *dir, struct SemcomDataset **out);

/**
 * Builds a dataset from in-memory TSV texts in the file formats.
 * `friends` and `user_tags` may be NULL.
 *
 * # Safety
 * Non-null pointers must be NUL-terminated strings; `out` must be writable.
 */
enum SemcomStatus semcom_dataset_from_tsv(const char *event_user,
                                          const char *event_tag,
                                          const char *tag_topic,
                                          const char *friends,
                                          const char *user_tags,
                                          struct SemcomDataset **out);

/**
 * Writes a planted synthetic dataset (default shape) into `dir`.
 *
 * # Safety
 * `dir` must be a NUL-terminated string.
 */
enum SemcomStatus semcom_generate_planted(uint64_t seed, const char *dir);

/**
 * Number of events before pruning; 0 for NULL.
 *
 * # Safety
 * `ds` must be NULL or a live dataset handle.
 */
size_t semcom_dataset_event_count(const struct SemcomDataset *ds);

/**
 * Number of users before pruning; 0 for NULL.
 *
 * # Safety
 * `ds` must be NULL or a live dataset handle.
 */
size_t semcom_dataset_user_count(const struct SemcomDataset *ds);

/**
 * # Safety
 * `ds` must come from this library and not be freed twice.
 */
void semcom_dataset_free(struct SemcomDataset *ds);

/**
 * Runs the full pipeline. `cfg` may be NULL for the defaults.
 *
 * # Safety
 * `ds` must be a live dataset handle, `cfg` NULL or a live config handle,
 * `out` writable.
 */
enum SemcomStatus semcom_detect(const struct SemcomDataset *ds,
                                const struct SemcomConfig *cfg,
                                struct SemcomResult **out);

/**
 * Number of communities; 0 for NULL.
 *
 * # Safety
 * `res` must be NULL or a live result handle.
 */
size_t semcom_result_community_count(const struct SemcomResult *res);

/**
 * Member count of community `index`, in output order.
 *
 * # Safety
 * `res` must be a live result handle; `out` writable.
 */
enum SemcomStatus semcom_result_community_size(const struct SemcomResult *res,
                                               size_t index,
                                               size_t *out);

/**
 * Mean community purity.
 *
 * # Safety
 * `res` must be a live result handle; `out` writable.
 */
enum SemcomStatus semcom_result_purity(const struct SemcomResult *res, double *out);

/**
 * Newman modularity of the disjoint projection.
 *
 * # Safety
 * `res` must be a live result handle; `out` writable.
 */
enum SemcomStatus semcom_result_modularity(const struct SemcomResult *res, double *out);

/**
 * PurQ at any `beta > 0`.
 *
 * # Safety
 * `res` must be a live result handle; `out` writable.
 */
enum SemcomStatus semcom_result_purq(const struct SemcomResult *res, double beta, double *out);

/**
 * The communities.json document. Free with [`semcom_string_free`].
 *
 * # Safety
 * `res` must be a live result handle; `out` writable.
 */
enum SemcomStatus semcom_result_communities_json(const struct SemcomResult *res, char **out);

/**
 * The report.json document. Free with [`semcom_string_free`].
 *
 * # Safety
 * `res` must be a live result handle; `out` writable.
 */
enum SemcomStatus semcom_result_report_json(const struct SemcomResult *res, char **out);

/**
 * Writes communities.json and report.json into an existing directory.
 *
 * # Safety
 * `res` must be a live result handle; `dir` a NUL-terminated string.
 */
enum SemcomStatus semcom_result_write(const struct SemcomResult *res, const char *dir);

/**
 * # Safety
 * `res` must come from this library and not be freed twice.
 */
void semcom_result_free(struct SemcomResult *res);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEMCOM_H */
