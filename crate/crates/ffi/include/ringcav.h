#ifndef RINGCAV_H
#define RINGCAV_H

#include <stddef.h>
#include <stdint.h>

// Result of every fallible call.
typedef enum RingcavStatus {
  RINGCAV_STATUS_OK = 0,
  RINGCAV_STATUS_NULL_POINTER = 1,
  RINGCAV_STATUS_INVALID_UTF8 = 2,
  RINGCAV_STATUS_DOMAIN = 3,
  RINGCAV_STATUS_UNSUPPORTED_REGIME = 4,
  RINGCAV_STATUS_FIT = 5,
  RINGCAV_STATUS_INTEGRATION = 6,
  RINGCAV_STATUS_INSUFFICIENT_RINGING = 7,
  RINGCAV_STATUS_BRACKET = 8,
  RINGCAV_STATUS_CONFIG = 9,
  RINGCAV_STATUS_SCHEMA = 10,
  RINGCAV_STATUS_IO = 11,
  RINGCAV_STATUS_BUFFER_TOO_SMALL = 12,
  RINGCAV_STATUS_PANIC = 13,
} RingcavStatus;

// Column selector for [`ringcav_trace_column`].
typedef enum RingcavTraceColumn {
  // s
  RINGCAV_TRACE_COLUMN_TIME = 0,
  // rad/s
  RINGCAV_TRACE_COLUMN_DETUNING = 1,
  RINGCAV_TRACE_COLUMN_U = 2,
  RINGCAV_TRACE_COLUMN_V = 3,
  RINGCAV_TRACE_COLUMN_W = 4,
  RINGCAV_TRACE_COLUMN_IM_RHO12 = 5,
} RingcavTraceColumn;

// Opaque experiment configuration.
typedef struct RingcavConfig RingcavConfig;

// Opaque Bloch-sweep trace.
typedef struct RingcavTrace RingcavTrace;

// Derived cavity parameters.
typedef struct RingcavCavity {
  double finesse;
  double fsr_hz;
  double fwhm_hz;
  double buildup;
  double mode_volume_m3;
} RingcavCavity;

// Derived trap parameters.
typedef struct RingcavTrap {
  double depth_k;
  double axial_hz;
  double radial_v_hz;
  double radial_h_hz;
  double axial_to_radial;
} RingcavTrap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ringcav_version(void);

// Copies the last error message of this thread into `buf`.
//
// Returns the buffer size needed including the terminating NUL, or 0 when
// there is no pending error. Truncates when `len` is too small.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t ringcav_last_error(char *buf, size_t len);

// Built-in defaults. Never returns null.
struct RingcavConfig *ringcav_config_default(void);

// Parses and validates a JSON configuration.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum RingcavStatus ringcav_config_from_json(const char *json, struct RingcavConfig **out);

// Loads a JSON configuration file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum RingcavStatus ringcav_config_load(const char *path, struct RingcavConfig **out);

// Serialises a configuration; free the result with [`ringcav_string_free`].
//
// # Safety
// `config` must come from this library; `out` must be writable.
enum RingcavStatus ringcav_config_to_json(const struct RingcavConfig *config, char **out);

// # Safety
// `config` must be null or come from this library, and not be used afterwards.
void ringcav_config_free(struct RingcavConfig *config);

// # Safety
// `s` must be null or a string returned by this library.
void ringcav_string_free(char *s);

// # Safety
// `config` must come from this library; `out` must be writable.
enum RingcavStatus ringcav_cavity(const struct RingcavConfig *config, struct RingcavCavity *out);

// # Safety
// `config` must come from this library; `out` must be writable.
enum RingcavStatus ringcav_trap(const struct RingcavConfig *config, struct RingcavTrap *out);

// RIR signal at `n` two-photon detunings (rad/s) for `temperature` (K).
//
// # Safety
// `delta_omega` and `signal` must each hold `n` doubles.
enum RingcavStatus ringcav_rir_spectrum(const struct RingcavConfig *config,
                                        double temperature,
                                        const double *delta_omega,
                                        size_t n,
                                        double *signal);

// Temperature (K) fitted to a measured RIR spectrum.
//
// # Safety
// `delta_omega` and `signal` must each hold `n` doubles; `temperature` must be writable.
enum RingcavStatus ringcav_rir_fit(const struct RingcavConfig *config,
                                   const double *delta_omega,
                                   const double *signal,
                                   size_t n,
                                   double *temperature);

// Temperature (K) from cloud widths (m) measured at release times (s).
//
// # Safety
// `times` and `widths` must each hold `n` doubles; `temperature` must be writable.
enum RingcavStatus ringcav_tof_fit(const struct RingcavConfig *config,
                                   const double *times,
                                   const double *widths,
                                   size_t n,
                                   double *temperature);

// Integrates the configured Bloch sweep; free the trace with [`ringcav_trace_free`].
//
// # Safety
// `config` must come from this library; `out` must be writable.
enum RingcavStatus ringcav_bloch_sweep(const struct RingcavConfig *config,
                                       struct RingcavTrace **out);

// Number of samples in `trace`; 0 for a null handle.
//
// # Safety
// `trace` must be null or come from this library.
size_t ringcav_trace_len(const struct RingcavTrace *trace);

// Copies one column of `trace` into `buf`, which must hold the full trace.
// `column` is one of `RingcavTraceColumn`.
//
// # Safety
// `trace` must come from this library; `buf` must hold `len` doubles.
enum RingcavStatus ringcav_trace_column(const struct RingcavTrace *trace,
                                        int32_t column,
                                        double *buf,
                                        size_t len);

// # Safety
// `trace` must be null or come from this library, and not be used afterwards.
void ringcav_trace_free(struct RingcavTrace *trace);

// Smallest scan rate (Hz/s) whose relative overshoot reaches `threshold`.
//
// # Safety
// `config` must come from this library; `rate` must be writable.
enum RingcavStatus ringcav_bloch_critical_rate(const struct RingcavConfig *config,
                                               double threshold,
                                               double *rate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RINGCAV_H */
