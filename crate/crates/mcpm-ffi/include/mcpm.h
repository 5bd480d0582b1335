#ifndef MCPM_H
#define MCPM_H

/* Generated by cbindgen from the mcpm-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every API function.
typedef enum mcpm_status {
  MCPM_STATUS_OK = 0,
  // A required pointer argument was null.
  MCPM_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  MCPM_STATUS_UTF8 = 2,
  // A parameter violated a documented precondition.
  MCPM_STATUS_INVALID_PARAMETER = 3,
  // An argument left an operation's mathematical domain.
  MCPM_STATUS_DOMAIN = 4,
  // A combinatorial guard tripped (state space too large).
  MCPM_STATUS_GUARD = 5,
  // The run configuration is malformed or inconsistent.
  MCPM_STATUS_CONFIG = 6,
  // A numeric routine failed to converge or left its valid regime.
  MCPM_STATUS_NUMERICAL = 7,
  MCPM_STATUS_IO = 8,
  MCPM_STATUS_CSV = 9,
  // An internal panic was caught at the boundary.
  MCPM_STATUS_PANIC = 10,
} mcpm_status;

// Diffusion channel: point transmitter and absorbing spherical receiver.
typedef struct mcpm_channel mcpm_channel;

// Parsed run configuration; the TOML grammar is documented in the
// repository's README.
typedef struct mcpm_run_config mcpm_run_config;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message from this thread's most recent failing call; empty when no
// failure has occurred. The pointer stays valid until the next failing
// call on the same thread.
const char *mcpm_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *mcpm_version(void);

// Free a string returned by this library. Accepts null.
//
// # Safety
// `s` must have been returned by this library and not freed before.
void mcpm_string_free(char *s);

// Create a channel from the transmitter distance (micrometers, center to
// center), receiver radius (micrometers), and diffusion coefficient
// (square micrometers per second).
//
// # Safety
// `out` must be a valid pointer.
enum mcpm_status mcpm_channel_new(double r0_um,
                                  double rr_um,
                                  double d_um2_s,
                                  struct mcpm_channel **out);

// Destroy a channel handle. Accepts null.
//
// # Safety
// `ch` must have come from `mcpm_channel_new` and not been freed before.
void mcpm_channel_free(struct mcpm_channel *ch);

// Time of the first-hit density peak, seconds.
//
// # Safety
// `ch` and `out` must be valid pointers.
enum mcpm_status mcpm_channel_peak_time_s(const struct mcpm_channel *ch, double *out);

// Probability that a molecule is ever captured.
//
// # Safety
// `ch` and `out` must be valid pointers.
enum mcpm_status mcpm_channel_capture_probability(const struct mcpm_channel *ch, double *out);

// Probability that the first hit lands in `[a_s, b_s]` seconds.
//
// # Safety
// `ch` and `out` must be valid pointers.
enum mcpm_status mcpm_channel_hit_probability(const struct mcpm_channel *ch,
                                              double a_s,
                                              double b_s,
                                              double *out);

// Fill `out[0..l]` with the channel coefficients of an `l`-slot grid with
// slot length `ts_s` and reception offset `tau_s`.
//
// # Safety
// `ch` must be valid and `out` must point to at least `l` doubles.
enum mcpm_status mcpm_channel_coefficients(const struct mcpm_channel *ch,
                                           double ts_s,
                                           double tau_s,
                                           size_t l,
                                           double *out);

// Parse a TOML run configuration from a NUL-terminated string.
//
// # Safety
// `toml_text` must be a NUL-terminated string; `out` must be valid.
enum mcpm_status mcpm_config_parse(const char *toml_text, struct mcpm_run_config **out);

// Destroy a configuration handle. Accepts null.
//
// # Safety
// `cfg` must have come from `mcpm_config_parse` and not been freed before.
void mcpm_config_free(struct mcpm_run_config *cfg);

// Override the experiment's master seed.
//
// # Safety
// `cfg` must be a valid configuration handle.
enum mcpm_status mcpm_config_set_seed(struct mcpm_run_config *cfg, uint64_t seed);

// Run one command against a configuration and return its CSV text.
// `command` is one of `coeffs`, `design`, `simulate`, `sweep`,
// `analytic` — the same tokens as the command line tool. On success
// `*csv_out` receives a NUL-terminated UTF-8 string owned by the caller;
// free it with `mcpm_string_free`.
//
// # Safety
// `cfg` must be valid; `command` must be NUL-terminated; `csv_out` must
// be a valid pointer.
enum mcpm_status mcpm_run_csv(const struct mcpm_run_config *cfg,
                              const char *command,
                              char **csv_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCPM_H */
