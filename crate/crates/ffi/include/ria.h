#ifndef RIA_H
#define RIA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum RiaStatus {
  RIA_STATUS_OK = 0,
  RIA_STATUS_NULL_POINTER = 1,
  RIA_STATUS_INVALID_ARGUMENT = 2,
  // The value exists but does not fit the requested C type.
  RIA_STATUS_OVERFLOW = 3,
  // The requested value is not defined for this object.
  RIA_STATUS_UNAVAILABLE = 4,
  RIA_STATUS_INTERNAL = 5,
} RiaStatus;

// Results of a simulation campaign.
typedef struct RiaCampaign RiaCampaign;

// Replication plan for one (K, n).
typedef struct RiaPlan RiaPlan;

// Sum-DoF breakdown for one K.
typedef struct RiaTheory RiaTheory;

// An exact fraction `num / den` in lowest terms.
typedef struct RiaRatio {
  uint64_t num;
  uint64_t den;
} RiaRatio;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ria_version(void);

// Message for the last failed call on this thread, or NULL. Valid until
// the next library call on the same thread.
const char *ria_last_error(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void ria_string_free(char *s);

// Computes the sum-DoF breakdown for `k >= 2` users.
//
// # Safety
// `out` must be valid for writes.
enum RiaStatus ria_theory_new(uint32_t k, struct RiaTheory **out);

// # Safety
// `h` must come from `ria_theory_new` and not have been freed.
void ria_theory_free(struct RiaTheory *h);

// Optimal number of phase-1 transmitters.
//
// # Safety
// `h` must be a live theory handle and `out` valid for writes.
enum RiaStatus ria_theory_n_star(const struct RiaTheory *h, uint32_t *out);

// Exact sum DoF.
//
// # Safety
// `h` must be a live theory handle and `out` valid for writes.
enum RiaStatus ria_theory_sum_dof(const struct RiaTheory *h, struct RiaRatio *out);

// Sum DoF as a double.
//
// # Safety
// `h` must be a live theory handle and `out` valid for writes.
enum RiaStatus ria_theory_sum_dof_f64(const struct RiaTheory *h, double *out);

// Per-order DoF for `2 <= m <= K`.
//
// # Safety
// `h` must be a live theory handle and `out` valid for writes.
enum RiaStatus ria_theory_order_dof(const struct RiaTheory *h, uint32_t m, struct RiaRatio *out);

// Sum DoF of a comparator scheme by name (`mat_bc`, `two_phase_misoic`,
// `torrellas`, `abdoli_siso_k3`, `maleki_k3`). Three-user schemes report
// `Unavailable` for other K.
//
// # Safety
// `h` must be a live theory handle, `scheme` a NUL-terminated string and
// `out` valid for writes.
enum RiaStatus ria_theory_comparator(const struct RiaTheory *h,
                                     const char *scheme,
                                     struct RiaRatio *out);

// The full breakdown as JSON; free with `ria_string_free`.
//
// # Safety
// `h` must be a live theory handle and `out` valid for writes.
enum RiaStatus ria_theory_to_json(const struct RiaTheory *h, char **out);

// Minimal replication plan; `n = 0` selects the optimal n.
//
// # Safety
// `out` must be valid for writes.
enum RiaStatus ria_plan_new(uint32_t k, uint32_t n, struct RiaPlan **out);

// # Safety
// `h` must come from `ria_plan_new` and not have been freed.
void ria_plan_free(struct RiaPlan *h);

// # Safety
// `h` must be a live plan handle and the outputs valid for writes.
enum RiaStatus ria_plan_totals(const struct RiaPlan *h, uint64_t *symbols, uint64_t *slots);

// Rounds of phase 1 (`m = 1`) or of phase m-I (`2 <= m <= K`).
//
// # Safety
// `h` must be a live plan handle and `out` valid for writes.
enum RiaStatus ria_plan_rounds(const struct RiaPlan *h, uint32_t m, uint64_t *out);

// # Safety
// `h` must be a live plan handle and `out` valid for writes.
enum RiaStatus ria_plan_to_json(const struct RiaPlan *h, char **out);

// Runs `trials` seeded trials. `n = 0` selects the optimal n and
// `antennas = 0` selects K. A campaign with failed trials is still
// returned with `RiaStatus::Ok`; inspect it with `ria_campaign_passed`.
//
// # Safety
// `out` must be valid for writes.
enum RiaStatus ria_simulate(uint32_t k,
                            uint32_t n,
                            uint32_t antennas,
                            uint64_t trials,
                            uint64_t seed,
                            double tolerance,
                            struct RiaCampaign **out);

// # Safety
// `h` must come from `ria_simulate` and not have been freed.
void ria_campaign_free(struct RiaCampaign *h);

// Trials run and trials that decoded every symbol within tolerance.
//
// # Safety
// `h` must be a live campaign handle and the outputs valid for writes.
enum RiaStatus ria_campaign_passed(const struct RiaCampaign *h, uint64_t *trials, uint64_t *passed);

// Total CSIT-rule violations over all trials.
//
// # Safety
// `h` must be a live campaign handle and `out` valid for writes.
enum RiaStatus ria_campaign_csit_violations(const struct RiaCampaign *h, uint64_t *out);

// Largest relative residual over all recovered symbols.
//
// # Safety
// `h` must be a live campaign handle and `out` valid for writes.
enum RiaStatus ria_campaign_max_residual(const struct RiaCampaign *h, double *out);

// Private symbols per slot measured in every trial; `Unavailable` when
// trials disagree or none ran.
//
// # Safety
// `h` must be a live campaign handle and `out` valid for writes.
enum RiaStatus ria_campaign_measured_dof(const struct RiaCampaign *h, struct RiaRatio *out);

// # Safety
// `h` must be a live campaign handle and `out` valid for writes.
enum RiaStatus ria_campaign_to_json(const struct RiaCampaign *h, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIA_H */
