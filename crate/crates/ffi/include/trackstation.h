#ifndef TRACKSTATION_H
#define TRACKSTATION_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TsStatus {
  TS_STATUS_OK = 0,
  TS_STATUS_NULL_POINTER = 1,
  TS_STATUS_INVALID_ARGUMENT = 2,
  TS_STATUS_PARSE_ERROR = 3,
  TS_STATUS_DUPLICATE_COMMAND = 4,
  TS_STATUS_IO_ERROR = 5,
  TS_STATUS_INTERNAL = 6,
} TsStatus;

// Opaque station handle.
typedef struct TsStation TsStation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, static storage.
const char *ts_version(void);

// Message for the last failure on this thread; valid until the next call
// that fails.
const char *ts_last_error(void);

// # Safety
// `s` must be null or a string returned by this library.
void ts_string_free(char *s);

// Great-circle distance in metres.
//
// # Safety
// `out` must be valid for writes.
enum TsStatus ts_haversine_distance(double lat1,
                                    double lon1,
                                    double lat2,
                                    double lon2,
                                    double *out);

// Initial bearing in degrees, `[0, 360)`.
//
// # Safety
// `out` must be valid for writes.
enum TsStatus ts_initial_bearing(double lat1, double lon1, double lat2, double lon2, double *out);

// XOR checksum of the characters between `$` and `*`.
//
// # Safety
// `body` must be a NUL-terminated string and `out` valid for writes.
enum TsStatus ts_nmea_checksum(const char *body, uint8_t *out);

// One-way latency in seconds of an `n_bytes` frame, stub antennas.
//
// # Safety
// `mode` must be a NUL-terminated string and `out` valid for writes.
enum TsStatus ts_one_way_latency(const char *mode, uint32_t baud, size_t n_bytes, double *out);

// Range in metres at the given off-boresight angles.
//
// # Safety
// String arguments must be NUL-terminated and `out` valid for writes.
enum TsStatus ts_effective_max_range(const char *mode,
                                     uint32_t baud,
                                     const char *tx_antenna,
                                     const char *rx_antenna,
                                     double tx_angle_deg,
                                     double rx_angle_deg,
                                     double *out);

// Creates a station without a journal. `config_toml` may be null for the
// defaults.
//
// # Safety
// `config_toml` must be null or NUL-terminated; `out` valid for writes.
enum TsStatus ts_station_new(const char *config_toml,
                             int64_t start_unix_ms,
                             struct TsStation **out);

// # Safety
// `s` must be null or a handle from [`ts_station_new`] not yet freed.
void ts_station_free(struct TsStation *s);

// Feeds one NMEA line. `accepted` is set to 1 when it became telemetry and
// 0 when it was rejected; a rejection is not an error.
//
// # Safety
// `s` must be a live handle, `line` NUL-terminated, `accepted` valid for
// writes.
enum TsStatus ts_station_ingest(struct TsStation *s,
                                const char *line,
                                int64_t now_unix_ms,
                                int32_t *accepted);

// Handles a gateway command frame and returns the ack as JSON.
//
// # Safety
// `s` must be a live handle, `frame_json` NUL-terminated, `ack_json` valid
// for writes.
enum TsStatus ts_station_command(struct TsStation *s,
                                 const char *frame_json,
                                 int64_t now_unix_ms,
                                 char **ack_json);

// Advances the tracker by `dt_s` seconds.
//
// # Safety
// `s` must be a live handle.
enum TsStatus ts_station_tick(struct TsStation *s, int64_t now_unix_ms, double dt_s);

// Current gimbal azimuth in degrees.
//
// # Safety
// `s` must be a live handle and `out` valid for writes.
enum TsStatus ts_station_azimuth(struct TsStation *s, double *out);

// The full snapshot as JSON.
//
// # Safety
// `s` must be a live handle and `out` valid for writes.
enum TsStatus ts_station_snapshot_json(struct TsStation *s, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRACKSTATION_H */
