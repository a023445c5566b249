#ifndef SNSPD_SIM_H
#define SNSPD_SIM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SnspdStatus {
  SNSPD_STATUS_OK = 0,
  SNSPD_STATUS_NULL_ARGUMENT = 1,
  SNSPD_STATUS_INVALID_INPUT = 2,
  SNSPD_STATUS_NUMERICAL = 3,
  SNSPD_STATUS_IO = 4,
  SNSPD_STATUS_INVALID_UTF8 = 5,
  // The computation succeeded but has no value (no latch, no pulse, no peak).
  SNSPD_STATUS_NO_RESULT = 6,
  SNSPD_STATUS_BUFFER_TOO_SMALL = 7,
  SNSPD_STATUS_PANIC = 8,
} SnspdStatus;

typedef enum SnspdHistogramKind {
  SNSPD_HISTOGRAM_KIND_SIGNAL = 0,
  SNSPD_HISTOGRAM_KIND_BACKGROUND = 1,
  SNSPD_HISTOGRAM_KIND_SUBTRACTED = 2,
} SnspdHistogramKind;

typedef struct SnspdHistogram SnspdHistogram;

typedef struct SnspdParams SnspdParams;

typedef struct SnspdTrace SnspdTrace;

typedef struct SnspdOperatingPoint {
  // V
  double voltage;
  // A
  double current;
  // W
  double electrical_power;
} SnspdOperatingPoint;

typedef struct SnspdMaxPowerPoint {
  // Ω
  double resistance;
  struct SnspdOperatingPoint point;
} SnspdMaxPowerPoint;

typedef struct SnspdEquilibrium {
  // V
  double voltage;
  // A
  double source_current;
  // A
  double wire_current;
  // A
  double leak_current;
  // Ω
  double wire_resistance;
} SnspdEquilibrium;

typedef struct SnspdEdgeMetrics {
  // s
  double rise_time_90;
  // s
  double fall_time_90;
  // Hz
  double repetition_rate;
  size_t pulses;
} SnspdEdgeMetrics;

typedef struct SnspdPeak {
  // s
  double peak_time;
  // s
  double fwhm;
  int64_t peak_counts;
  int64_t area;
} SnspdPeak;

typedef struct SnspdSineFit {
  // V
  double vpi;
  double amplitude;
  double offset;
  // rad
  double phase;
  double residual_rms;
} SnspdSineFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failing call on this thread, or null. Valid
// until the next failing call on the same thread.
const char *snspd_last_error(void);

// Library version as a static NUL-terminated string.
const char *snspd_version(void);

// Loads a named preset into a new handle.
enum SnspdStatus snspd_params_preset(const char *name, struct SnspdParams **out);

enum SnspdStatus snspd_params_clone(const struct SnspdParams *params, struct SnspdParams **out);

// Applies one `section.key[_unit] = value` assignment. The handle is left
// unchanged when the value is rejected or makes the bundle inconsistent.
enum SnspdStatus snspd_params_set(struct SnspdParams *params, const char *assignment);

// Writes the bundle as config text into `buf` (NUL-terminated). `needed`
// receives the buffer size required including the NUL, also when `buf` is
// too small.
enum SnspdStatus snspd_params_render(const struct SnspdParams *params,
                                     char *buf,
                                     size_t capacity,
                                     size_t *needed);

void snspd_params_free(struct SnspdParams *params);

// Photodiode operating point on a resistive load.
enum SnspdStatus snspd_operating_point(const struct SnspdParams *params,
                                       double optical_power_w,
                                       double load_ohm,
                                       struct SnspdOperatingPoint *out);

// Load within `[r_min_ohm, r_max_ohm]` maximising delivered power.
enum SnspdStatus snspd_max_power_point(const struct SnspdParams *params,
                                       double optical_power_w,
                                       double r_min_ohm,
                                       double r_max_ohm,
                                       struct SnspdMaxPowerPoint *out);

// Latched steady state under constant bias light. Returns
// `SNSPD_STATUS_NO_RESULT` when the source cannot sustain the hotspot.
enum SnspdStatus snspd_equilibrium(const struct SnspdParams *params,
                                   double optical_power_w,
                                   struct SnspdEquilibrium *out);

enum SnspdStatus snspd_detection_efficiency(const struct SnspdParams *params,
                                            double bias_current_a,
                                            double *out);

// Modulator fibre-to-fibre transmission at the configured temperature.
enum SnspdStatus snspd_transmission(const struct SnspdParams *params,
                                    double voltage_v,
                                    double *out);

// Simulates `sim.trace_periods` periods of the trace drive and applies the
// readout chain.
enum SnspdStatus snspd_trace_run(const struct SnspdParams *params,
                                 uint64_t seed,
                                 struct SnspdTrace **out);

size_t snspd_trace_len(const struct SnspdTrace *trace);

// Borrows a channel by name: `time_s`, `v_node_V`, `r_wire_ohm`, `p_out_W`,
// `v_readout_mV` or `click`.
enum SnspdStatus snspd_trace_channel(const struct SnspdTrace *trace,
                                     const char *name,
                                     const double **data,
                                     size_t *len);

// Borrows the discriminator click times in seconds.
enum SnspdStatus snspd_trace_clicks(const struct SnspdTrace *trace,
                                    const double **times,
                                    size_t *count);

// Edge timing of the optical output. Returns `SNSPD_STATUS_NO_RESULT` when
// the trace holds no complete pulse.
enum SnspdStatus snspd_trace_edges(const struct SnspdTrace *trace, struct SnspdEdgeMetrics *out);

void snspd_trace_free(struct SnspdTrace *trace);

// Runs the signal and background counting experiments over `n_periods`
// each and subtracts them.
enum SnspdStatus snspd_histogram_run(const struct SnspdParams *params,
                                     uint64_t n_periods,
                                     uint64_t seed,
                                     struct SnspdHistogram **out);

// Borrows one histogram: `n_bins + 1` edges in seconds, `n_bins` counts and
// `n_bins` Poisson errors. `kind` is an `SnspdHistogramKind` value. Any of
// the three array outputs may be null.
enum SnspdStatus snspd_histogram_bins(const struct SnspdHistogram *histogram,
                                      uint32_t kind,
                                      const double **edges,
                                      const int64_t **counts,
                                      const double **errors,
                                      size_t *n_bins);

// Peak of the background-subtracted histogram. Returns
// `SNSPD_STATUS_NO_RESULT` when no bin is positive.
enum SnspdStatus snspd_histogram_peak(const struct SnspdHistogram *histogram,
                                      struct SnspdPeak *out);

// Click delay of a single photon arriving at the pulse time. Returns
// `SNSPD_STATUS_NO_RESULT` when such a photon produces no click.
enum SnspdStatus snspd_histogram_expected_delay(const struct SnspdHistogram *histogram,
                                                double *out);

void snspd_histogram_free(struct SnspdHistogram *histogram);

// Fits `y = offset + amplitude cos(pi x / vpi + phase)`. A non-positive
// `vpi_hint` selects the built-in start grid.
enum SnspdStatus snspd_fit_sine_vpi(const double *x,
                                    const double *y,
                                    size_t n,
                                    double vpi_hint,
                                    struct SnspdSineFit *out);

// Propagation loss in dB/cm from Fabry-Pérot fringe contrast.
enum SnspdStatus snspd_fabry_perot_loss(double contrast,
                                        double facet_reflectivity,
                                        double length_cm,
                                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SNSPD_SIM_H */
