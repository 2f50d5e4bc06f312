#ifndef SLB_H
#define SLB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#define SLB_SCHEME_KG 0

#define SLB_SCHEME_SG 1

#define SLB_SCHEME_PKG 2

#define SLB_SCHEME_RR 3

#define SLB_SCHEME_DC 4

#define SLB_SCHEME_WC 5

typedef enum SlbStatus {
  SLB_STATUS_OK = 0,
  SLB_STATUS_NULL_POINTER = 1,
  SLB_STATUS_INVALID_ARGUMENT = 2,
  SLB_STATUS_IO = 3,
  SLB_STATUS_PANIC = 4,
} SlbStatus;

/**
 * Routing state of one source.
 */
typedef struct SlbPartitioner SlbPartitioner;

/**
 * SpaceSaving summary over 64-bit keys.
 */
typedef struct SlbSpaceSaving SlbSpaceSaving;

/**
 * Solver output. `d` equals the worker count when `all_workers` is set.
 */
typedef struct SlbChoices {
  bool all_workers;
  size_t d;
} SlbChoices;

/**
 * Where one message was sent.
 */
typedef struct SlbRoutingDecision {
  size_t worker;
  /**
   * Number of candidate workers considered.
   */
  size_t d_used;
  bool was_head;
} SlbRoutingDecision;

/**
 * Simulation over a synthetic Zipf stream. `theta <= 0` selects 1/(5n).
 */
typedef struct SlbSimConfig {
  uint32_t scheme;
  size_t workers;
  size_t sources;
  double zipf_z;
  size_t keys;
  uint64_t messages;
  double theta;
  double epsilon;
  uint64_t seed;
  uint64_t report_every;
} SlbSimConfig;

typedef struct SlbRunSummary {
  uint64_t messages;
  double final_imbalance;
  double mean_imbalance;
  size_t head_size;
  size_t d;
  bool all_workers;
  uint64_t memory_units;
  uint64_t mem_pkg;
  uint64_t mem_sg;
} SlbRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating to `len - 1` bytes. Returns the full
 * message length in bytes, or 0 if no error has been recorded.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t slb_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *slb_version(void);

/**
 * Expected number of distinct workers hit by `h * d` uniform placements
 * into `n` workers.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum SlbStatus slb_expected_workers(size_t h, size_t d, size_t n, double *out);

/**
 * Smallest number of choices for the head keys. `head_probs` need not be
 * sorted; the tail mass is `1 - sum(head_probs)`.
 *
 * # Safety
 * `head_probs` must point to `len` readable doubles (or be null with
 * `len == 0`); `out` must be valid for writes.
 */
enum SlbStatus slb_find_optimal_choices(const double *head_probs,
                                        size_t len,
                                        size_t workers,
                                        double epsilon,
                                        struct SlbChoices *out);

/**
 * Probability of the key with 1-based `rank` under Zipf(`z`) over `keys`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SlbStatus slb_zipf_probability(size_t rank, double z, size_t keys, double *out);

/**
 * `(max - mean) / total` of a load vector; 0 when every count is 0.
 *
 * # Safety
 * `counts` must point to `len` readable values; `out` must be valid for
 * writes.
 */
enum SlbStatus slb_imbalance(const uint64_t *counts, size_t len, double *out);

/**
 * Creates the routing state of source `source_index` out of `sources`.
 * `theta <= 0` and `epsilon <= 0` select the defaults. All sources of one
 * deployment must share `seed`.
 *
 * # Safety
 * `out` must be valid for writes. The handle written there must be freed
 * with [`slb_partitioner_free`].
 */
enum SlbStatus slb_partitioner_new(uint32_t scheme,
                                   size_t workers,
                                   size_t source_index,
                                   size_t sources,
                                   double theta,
                                   double epsilon,
                                   uint64_t seed,
                                   struct SlbPartitioner **out);

/**
 * Routes one message with key `key`.
 *
 * # Safety
 * `partitioner` must be a live handle; `out` must be valid for writes.
 */
enum SlbStatus slb_partitioner_route(struct SlbPartitioner *partitioner,
                                     uint64_t key,
                                     struct SlbRoutingDecision *out);

/**
 * Number of workers the partitioner routes to.
 *
 * # Safety
 * `partitioner` must be a live handle; `out` must be valid for writes.
 */
enum SlbStatus slb_partitioner_workers(const struct SlbPartitioner *partitioner, size_t *out);

/**
 * Copies this source's local load into `counts`, which must hold exactly
 * as many entries as there are workers. `total` may be null.
 *
 * # Safety
 * `partitioner` must be a live handle; `counts` must point to `len`
 * writable values; `total` must be null or valid for writes.
 */
enum SlbStatus slb_partitioner_load(const struct SlbPartitioner *partitioner,
                                    uint64_t *counts,
                                    size_t len,
                                    uint64_t *total);

/**
 * Current choices for head keys (`{false, 2}` before any head appears for
 * D-Choices; KG, SG and PKG report 1, all and 2).
 *
 * # Safety
 * `partitioner` must be a live handle; `out` must be valid for writes.
 */
enum SlbStatus slb_partitioner_head_choices(const struct SlbPartitioner *partitioner,
                                            struct SlbChoices *out);

/**
 * Releases a partitioner. Null is ignored.
 *
 * # Safety
 * `partitioner` must be null or a handle from [`slb_partitioner_new`] that
 * has not been freed.
 */
void slb_partitioner_free(struct SlbPartitioner *partitioner);

/**
 * Creates a summary with `capacity` counters.
 *
 * # Safety
 * `out` must be valid for writes; free the handle with
 * [`slb_space_saving_free`].
 */
enum SlbStatus slb_space_saving_new(size_t capacity, struct SlbSpaceSaving **out);

/**
 * Creates a summary sized to track every key above frequency `theta`.
 *
 * # Safety
 * As [`slb_space_saving_new`].
 */
enum SlbStatus slb_space_saving_for_threshold(double theta, struct SlbSpaceSaving **out);

/**
 * Counts one occurrence of `key`.
 *
 * # Safety
 * `summary` must be a live handle.
 */
enum SlbStatus slb_space_saving_update(struct SlbSpaceSaving *summary, uint64_t key);

/**
 * Estimated count of `key` (never below its true count).
 *
 * # Safety
 * `summary` must be a live handle; `out` must be valid for writes.
 */
enum SlbStatus slb_space_saving_estimate(const struct SlbSpaceSaving *summary,
                                         uint64_t key,
                                         uint64_t *out);

/**
 * Whether `key` is tracked with estimated frequency `>= theta`.
 *
 * # Safety
 * `summary` must be a live handle; `out` must be valid for writes.
 */
enum SlbStatus slb_space_saving_is_head(const struct SlbSpaceSaving *summary,
                                        uint64_t key,
                                        double theta,
                                        bool *out);

/**
 * Number of head keys for `theta` and the remaining tail mass.
 * `tail_mass` may be null.
 *
 * # Safety
 * `summary` must be a live handle; `size` must be valid for writes and
 * `tail_mass` null or valid for writes.
 */
enum SlbStatus slb_space_saving_head(const struct SlbSpaceSaving *summary,
                                     double theta,
                                     size_t *size,
                                     double *tail_mass);

/**
 * Messages counted so far.
 *
 * # Safety
 * `summary` must be a live handle; `out` must be valid for writes.
 */
enum SlbStatus slb_space_saving_observed(const struct SlbSpaceSaving *summary, uint64_t *out);

/**
 * Releases a summary. Null is ignored.
 *
 * # Safety
 * `summary` must be null or an unfreed handle from this library.
 */
void slb_space_saving_free(struct SlbSpaceSaving *summary);

/**
 * Fills `out` with the command-line defaults and PKG as the scheme.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SlbStatus slb_sim_config_default(struct SlbSimConfig *out);

/**
 * Runs one simulation and writes its summary.
 *
 * # Safety
 * `config` must be readable and `out` valid for writes.
 */
enum SlbStatus slb_simulate(const struct SlbSimConfig *config, struct SlbRunSummary *out);

/**
 * Runs one simulation and writes its CSV report to `path`. `out` may be
 * null.
 *
 * # Safety
 * `config` must be readable, `path` a NUL-terminated UTF-8 string and
 * `out` null or valid for writes.
 */
enum SlbStatus slb_simulate_csv(const struct SlbSimConfig *config,
                                const char *path,
                                struct SlbRunSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLB_H */
