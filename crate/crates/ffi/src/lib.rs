//! C ABI over `trackstation`.
//!
//! Every function returns a [`TsStatus`]; results come back through out
//! pointers. Strings handed out by the library are NUL-terminated UTF-8 and
//! must be released with [`ts_string_free`]. After a non-OK status,
//! [`ts_last_error`] describes the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use chrono::{DateTime, TimeZone, Utc};

use trackstation::geo::{self, GeoPoint};
use trackstation::linkmodel::{self, AntennaKind, Calibration, LinkSpec, ModeName};
use trackstation::station::{gateway_decode, Ingest, Station, StationConfig, StationError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    DuplicateCommand = 4,
    IoError = 5,
    Internal = 6,
}

/// Opaque station handle.
pub struct TsStation {
    inner: Station,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: TsStatus, msg: impl Into<String>) -> TsStatus {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
    status
}

fn guard(f: impl FnOnce() -> TsStatus) -> TsStatus {
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(TsStatus::Internal, "panic inside trackstation"),
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, TsStatus> {
    if p.is_null() {
        return Err(fail(TsStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(TsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut T, v: T) -> TsStatus {
    if out.is_null() {
        return fail(TsStatus::NullPointer, "output pointer is null");
    }
    *out = v;
    TsStatus::Ok
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> TsStatus {
    match CString::new(s) {
        Ok(c) => put(out, c.into_raw()),
        Err(_) => fail(TsStatus::Internal, "string contains NUL"),
    }
}

fn point(lat: f64, lon: f64) -> Result<GeoPoint, TsStatus> {
    GeoPoint::new(lat, lon).map_err(|e| fail(TsStatus::InvalidArgument, e.to_string()))
}

fn time_ms(ms: i64) -> Result<DateTime<Utc>, TsStatus> {
    Utc.timestamp_millis_opt(ms)
        .single()
        .ok_or_else(|| fail(TsStatus::InvalidArgument, format!("timestamp {ms} ms out of range")))
}

fn station_status(e: &StationError) -> TsStatus {
    let status = match e {
        StationError::DuplicateCommand(_) => TsStatus::DuplicateCommand,
        StationError::InvalidCommand { .. } | StationError::Config(_) => TsStatus::InvalidArgument,
        StationError::Journal(_) => TsStatus::IoError,
        StationError::Link(_) | StationError::Tracker(_) => TsStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

macro_rules! tryst {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn ts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failure on this thread; valid until the next call
/// that fails.
#[no_mangle]
pub extern "C" fn ts_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ts_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Great-circle distance in metres.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_haversine_distance(
    lat1: f64,
    lon1: f64,
    lat2: f64,
    lon2: f64,
    out: *mut f64,
) -> TsStatus {
    guard(|| {
        let a = tryst!(point(lat1, lon1));
        let b = tryst!(point(lat2, lon2));
        put(out, geo::haversine_distance(&a, &b))
    })
}

/// Initial bearing in degrees, `[0, 360)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_initial_bearing(
    lat1: f64,
    lon1: f64,
    lat2: f64,
    lon2: f64,
    out: *mut f64,
) -> TsStatus {
    guard(|| {
        let a = tryst!(point(lat1, lon1));
        let b = tryst!(point(lat2, lon2));
        match geo::initial_bearing(&a, &b) {
            Ok(v) => put(out, v),
            Err(e) => fail(TsStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// XOR checksum of the characters between `$` and `*`.
///
/// # Safety
/// `body` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_nmea_checksum(body: *const c_char, out: *mut u8) -> TsStatus {
    guard(|| {
        let b = tryst!(text(body, "body"));
        put(out, geo::nmea_checksum(b))
    })
}

fn link(mode: &str, baud: u32, tx: &str, rx: &str) -> Result<linkmodel::LinkConfig, TsStatus> {
    let mode: ModeName = mode
        .parse()
        .map_err(|e: String| fail(TsStatus::InvalidArgument, e))?;
    let tx: AntennaKind = tx.parse().map_err(|e: String| fail(TsStatus::InvalidArgument, e))?;
    let rx: AntennaKind = rx.parse().map_err(|e: String| fail(TsStatus::InvalidArgument, e))?;
    let cal = Calibration::load().map_err(|e| fail(TsStatus::IoError, e.to_string()))?;
    cal.link_config(&LinkSpec::new(mode, baud).with_antennas(tx, rx))
        .map_err(|e| fail(TsStatus::InvalidArgument, e.to_string()))
}

/// One-way latency in seconds of an `n_bytes` frame, stub antennas.
///
/// # Safety
/// `mode` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_one_way_latency(
    mode: *const c_char,
    baud: u32,
    n_bytes: usize,
    out: *mut f64,
) -> TsStatus {
    guard(|| {
        let m = tryst!(text(mode, "mode"));
        let cfg = tryst!(link(m, baud, "stub", "stub"));
        put(out, linkmodel::one_way_latency(&cfg, n_bytes))
    })
}

/// Range in metres at the given off-boresight angles.
///
/// # Safety
/// String arguments must be NUL-terminated and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_effective_max_range(
    mode: *const c_char,
    baud: u32,
    tx_antenna: *const c_char,
    rx_antenna: *const c_char,
    tx_angle_deg: f64,
    rx_angle_deg: f64,
    out: *mut f64,
) -> TsStatus {
    guard(|| {
        let m = tryst!(text(mode, "mode"));
        let tx = tryst!(text(tx_antenna, "tx_antenna"));
        let rx = tryst!(text(rx_antenna, "rx_antenna"));
        let cfg = tryst!(link(m, baud, tx, rx));
        put(out, linkmodel::effective_max_range(&cfg, tx_angle_deg, rx_angle_deg))
    })
}

/// Creates a station without a journal. `config_toml` may be null for the
/// defaults.
///
/// # Safety
/// `config_toml` must be null or NUL-terminated; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_station_new(
    config_toml: *const c_char,
    start_unix_ms: i64,
    out: *mut *mut TsStation,
) -> TsStatus {
    guard(|| {
        if out.is_null() {
            return fail(TsStatus::NullPointer, "output pointer is null");
        }
        let config = if config_toml.is_null() {
            StationConfig::default()
        } else {
            let t = tryst!(text(config_toml, "config_toml"));
            match StationConfig::parse(t) {
                Ok(c) => c,
                Err(e) => return fail(TsStatus::ParseError, e.to_string()),
            }
        };
        let cal = match Calibration::load() {
            Ok(c) => c,
            Err(e) => return fail(TsStatus::IoError, e.to_string()),
        };
        let start = tryst!(time_ms(start_unix_ms));
        match Station::new(config, cal, None, start) {
            Ok(s) => put(out, Box::into_raw(Box::new(TsStation { inner: s }))),
            Err(e) => station_status(&e),
        }
    })
}

/// # Safety
/// `s` must be null or a handle from [`ts_station_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ts_station_free(s: *mut TsStation) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

unsafe fn station<'a>(s: *mut TsStation) -> Result<&'a mut Station, TsStatus> {
    s.as_mut()
        .map(|h| &mut h.inner)
        .ok_or_else(|| fail(TsStatus::NullPointer, "station handle is null"))
}

/// Feeds one NMEA line. `accepted` is set to 1 when it became telemetry and
/// 0 when it was rejected; a rejection is not an error.
///
/// # Safety
/// `s` must be a live handle, `line` NUL-terminated, `accepted` valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn ts_station_ingest(
    s: *mut TsStation,
    line: *const c_char,
    now_unix_ms: i64,
    accepted: *mut i32,
) -> TsStatus {
    guard(|| {
        let st = tryst!(station(s));
        let l = tryst!(text(line, "line"));
        let now = tryst!(time_ms(now_unix_ms));
        match st.ingest_telemetry(l, now) {
            Ok(Ingest::Accepted(_)) => put(accepted, 1),
            Ok(Ingest::Rejected(_)) => put(accepted, 0),
            Err(e) => station_status(&e),
        }
    })
}

/// Handles a gateway command frame and returns the ack as JSON.
///
/// # Safety
/// `s` must be a live handle, `frame_json` NUL-terminated, `ack_json` valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_station_command(
    s: *mut TsStation,
    frame_json: *const c_char,
    now_unix_ms: i64,
    ack_json: *mut *mut c_char,
) -> TsStatus {
    guard(|| {
        let st = tryst!(station(s));
        let f = tryst!(text(frame_json, "frame_json"));
        let now = tryst!(time_ms(now_unix_ms));
        let c = match gateway_decode(f) {
            Ok(c) => c,
            Err(e) => return fail(TsStatus::ParseError, e.to_string()),
        };
        match st.handle_command(c, now) {
            Ok(ack) => put_string(ack_json, serde_json::to_string(&ack).expect("ack serialises")),
            Err(e) => station_status(&e),
        }
    })
}

/// Advances the tracker by `dt_s` seconds.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ts_station_tick(s: *mut TsStation, now_unix_ms: i64, dt_s: f64) -> TsStatus {
    guard(|| {
        let st = tryst!(station(s));
        let now = tryst!(time_ms(now_unix_ms));
        if !(dt_s.is_finite() && dt_s >= 0.0) {
            return fail(TsStatus::InvalidArgument, "dt_s must be finite and non-negative");
        }
        match st.tick(now, dt_s) {
            Ok(_) => TsStatus::Ok,
            Err(e) => station_status(&e),
        }
    })
}

/// Current gimbal azimuth in degrees.
///
/// # Safety
/// `s` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_station_azimuth(s: *mut TsStation, out: *mut f64) -> TsStatus {
    guard(|| {
        let st = tryst!(station(s));
        put(out, st.snapshot().gimbal.az)
    })
}

/// The full snapshot as JSON.
///
/// # Safety
/// `s` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_station_snapshot_json(s: *mut TsStation, out: *mut *mut c_char) -> TsStatus {
    guard(|| {
        let st = tryst!(station(s));
        let json = serde_json::to_string(&st.snapshot()).expect("snapshot serialises");
        put_string(out, json)
    })
}
