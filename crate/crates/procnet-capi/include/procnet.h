#ifndef PROCNET_H
#define PROCNET_H

/* Generated by cbindgen from procnet-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status code returned by every fallible call.
 */
typedef enum {
  PN_OK = 0,
  /*
   A required pointer argument was null.
   */
  PN_ERR_NULL_ARG = 1,
  /*
   The design name was not one of `d1`..`d4`.
   */
  PN_ERR_BAD_DESIGN = 2,
  /*
   The network run failed (deadlock, protocol fault, limits).
   */
  PN_ERR_RUN = 3,
  /*
   An internal panic was caught at the boundary.
   */
  PN_ERR_PANIC = 4,
} PnStatus;

/*
 Opaque handle to an elaborated design network.
 */
typedef struct PnNetwork PnNetwork;

/*
 Communication-cost summary for one run.
 */
typedef struct {
  uint64_t channel_events;
  uint64_t epochs;
  uint64_t in_flight_max;
  double blocks_per_epoch;
} PnCostSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Encrypt one 64-bit block with the sequential reference.

 `key` is 16 bytes, `block` and `out` 8 bytes, all big-endian.

 # Safety
 All pointers must be valid for the sizes above or null (null yields
 `PnErrNullArg`).
 */
PnStatus pn_kasumi_encrypt(const uint8_t *key, const uint8_t *block, uint8_t *out);

/*
 Derive the 64 16-bit subkeys, written pack-major in group order
 (kL odd pair, kO odd triple, kI odd triple, then the even groups).

 # Safety
 `key` must point to 16 bytes, `out` to 64 `uint16_t`, or be null.
 */
PnStatus pn_key_schedule(const uint8_t *key, uint16_t *out);

/*
 Build a design network. `design` is a NUL-terminated string `d1`..`d4`.
 On success `*out` owns the handle; release it with [`pn_network_free`].

 # Safety
 `design` must be a valid NUL-terminated string; `out` must be a valid
 pointer or null.
 */
PnStatus pn_network_new(const char *design, PnNetwork **out);

/*
 Release a network handle. Null is accepted.

 # Safety
 `net` must have come from [`pn_network_new`] and not been freed before.
 */
void pn_network_free(PnNetwork *net);

/*
 Encrypt `n_blocks` 8-byte blocks through the design network.

 # Safety
 `blocks` and `out` must each point to `8 * n_blocks` bytes; `key` to 16
 bytes. Null pointers yield `PnErrNullArg` (zero-block calls may pass null
 data pointers).
 */
PnStatus pn_network_encrypt(PnNetwork *net,
                            const uint8_t *key,
                            const uint8_t *blocks,
                            size_t n_blocks,
                            uint8_t *out,
                            uint64_t seed);

/*
 Run an instrumented workload and return the cost summary.

 # Safety
 `key` must point to 16 bytes and `out` to a `PnCostSummary`, or be null.
 */
PnStatus pn_network_measure(PnNetwork *net,
                            const uint8_t *key,
                            size_t n_blocks,
                            uint64_t seed,
                            PnCostSummary *out);

/*
 Static description of a status code.
 */
const char *pn_status_message(PnStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROCNET_H */
