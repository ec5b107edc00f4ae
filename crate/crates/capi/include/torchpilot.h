/* C interface to the torchpilot vision and control pipeline. */

#ifndef TORCHPILOT_H
#define TORCHPILOT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Why an aborted run stopped.
typedef enum TpAbortCause {
  TP_ABORT_NONE = 0,
  TP_ABORT_CALIBRATION_FAILED = 1,
  TP_ABORT_POOL_LOST = 2,
  TP_ABORT_PATH_TIMEOUT = 3,
} TpAbortCause;

// Cutting mode selector for [`tp_run_experiment`].
typedef enum TpMode {
  TP_MODE_SLOW = 0,
  TP_MODE_FAST = 1,
  TP_MODE_CONTROLLED = 2,
  TP_MODE_CONSTANT = 3,
} TpMode;

// Call outcome. `TP_OK` means the out-parameters are valid.
typedef enum TpStatus {
  TP_OK = 0,
  TP_INVALID_ARGUMENT = 1,
  TP_PARSE_ERROR = 2,
  TP_VALIDATION_ERROR = 3,
  TP_CALIBRATION_FAILED = 4,
  TP_POOL_LOST = 5,
  TP_IO_ERROR = 6,
  TP_RUN_ABORTED = 7,
} TpStatus;

// Opaque frame analyzer: a calibrated vision pipeline.
typedef struct TpAnalyzer TpAnalyzer;

// Opaque run configuration.
typedef struct TpConfig TpConfig;

// Result summary of one experiment run.
typedef struct TpRunSummary {
  double success_ratio;
  uint64_t steps;
  uint8_t aborted;
  enum TpAbortCause cause;
} TpRunSummary;

// Pool features measured from one frame.
typedef struct TpFeatures {
  double convexity;
  double intensity;
  double state;
} TpFeatures;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread. The pointer stays
// valid until the next failing call on the same thread.
const char *tp_last_error_message(void);

// Library version as a static string.
const char *tp_version(void);

// Creates a config holding the full default parameter set.
struct TpConfig *tp_config_default(void);

// Loads and validates a TOML config file.
//
// # Safety
// `path` must be a valid NUL-terminated string and `out` a valid pointer.
enum TpStatus tp_config_load(const char *path, struct TpConfig **out);

// Frees a config handle. Accepts null.
//
// # Safety
// `cfg` must have come from this library and not been freed before.
void tp_config_free(struct TpConfig *cfg);

// Runs one experiment and fills `summary`. When `out_dir` is non-null,
// telemetry and summary CSVs (and frame dumps, if requested) are written
// beneath it in the standard layout.
//
// `constant_speed` is only read for `TpModeConstant`. `plate_index`
// selects among the configured plates.
//
// # Safety
// `cfg` and `summary` must be valid; `out_dir`, when non-null, must be a
// NUL-terminated string.
enum TpStatus tp_run_experiment(const struct TpConfig *cfg,
                                enum TpMode mode,
                                double constant_speed,
                                uint32_t plate_index,
                                const char *out_dir,
                                uint8_t dump_frames,
                                struct TpRunSummary *summary);

// Calibrates an analyzer from `count` bare-flame frames, laid out as
// contiguous rows of 8-bit RGB triples, `width * height * 3` bytes each.
//
// # Safety
// `cfg`, `frames` (holding `count * width * height * 3` readable bytes),
// and `out` must be valid pointers.
enum TpStatus tp_analyzer_new(const struct TpConfig *cfg,
                              const uint8_t *frames,
                              uint32_t width,
                              uint32_t height,
                              uint32_t count,
                              struct TpAnalyzer **out);

// Measures pool features on one raw RGB frame. Returns `TP_POOL_LOST`
// when no measurable pool is visible; `features` is untouched then.
//
// # Safety
// `analyzer` must be a live handle, `rgb` must hold
// `width * height * 3` readable bytes, and `features` must be valid.
enum TpStatus tp_analyzer_measure(const struct TpAnalyzer *analyzer,
                                  const uint8_t *rgb,
                                  uint32_t width,
                                  uint32_t height,
                                  struct TpFeatures *features);

// Baseline intensity measured at calibration.
//
// # Safety
// `analyzer` must be a live handle.
double tp_analyzer_baseline(const struct TpAnalyzer *analyzer);

// Flame centroid measured at calibration, written to `x` and `y`.
//
// # Safety
// All pointers must be valid.
enum TpStatus tp_analyzer_centroid(const struct TpAnalyzer *analyzer, double *x, double *y);

// Frees an analyzer handle. Accepts null.
//
// # Safety
// `analyzer` must have come from this library and not been freed before.
void tp_analyzer_free(struct TpAnalyzer *analyzer);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TORCHPILOT_H */
