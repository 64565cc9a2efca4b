use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use trackstation_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

const T0_MS: i64 = 1_714_557_600_000;

fn frame(body: &str) -> CString {
    c(&format!(r#"{{"type":"command","time":"2024-05-01T10:00:00Z","body":{body}}}"#))
}

#[test]
fn geo_functions() {
    let mut d = 0.0;
    let s = unsafe { ts_haversine_distance(51.5074, -0.1278, 48.8566, 2.3522, &mut d) };
    assert_eq!(s, TsStatus::Ok);
    assert!((d - 343_556.0).abs() < 1_000.0, "{d}");

    let mut b = 0.0;
    let s = unsafe { ts_initial_bearing(0.0, 0.0, 0.0, 0.0, &mut b) };
    assert_eq!(s, TsStatus::InvalidArgument);
    let msg = unsafe { CStr::from_ptr(ts_last_error()) }.to_str().unwrap();
    assert!(!msg.is_empty());

    let s = unsafe { ts_haversine_distance(91.0, 0.0, 0.0, 0.0, &mut d) };
    assert_eq!(s, TsStatus::InvalidArgument);
    let s = unsafe { ts_haversine_distance(1.0, 0.0, 0.0, 0.0, ptr::null_mut()) };
    assert_eq!(s, TsStatus::NullPointer);
}

#[test]
fn checksum_and_link() {
    let mut x = 0u8;
    let body = c("GPGGA,123519,4807.038,N,01131.000,E,1,08,0.9,545.4,M,46.9,M,,");
    assert_eq!(unsafe { ts_nmea_checksum(body.as_ptr(), &mut x) }, TsStatus::Ok);
    assert_eq!(x, 0x47);

    let mut r = 0.0;
    let (fu4, stub) = (c("FU4"), c("stub"));
    let s = unsafe { ts_effective_max_range(fu4.as_ptr(), 1200, stub.as_ptr(), stub.as_ptr(), 0.0, 0.0, &mut r) };
    assert_eq!(s, TsStatus::Ok);
    assert!((r - 60.84).abs() < 1.0, "{r}");

    let mut l = 0.0;
    let bad = c("FU9");
    assert_eq!(unsafe { ts_one_way_latency(bad.as_ptr(), 9600, 1, &mut l) }, TsStatus::InvalidArgument);
    let fu3 = c("FU3");
    assert_eq!(unsafe { ts_one_way_latency(fu3.as_ptr(), 9600, 1, &mut l) }, TsStatus::Ok);
    assert!(l > 0.0);
}

#[test]
fn station_lifecycle() {
    let mut st = ptr::null_mut();
    assert_eq!(unsafe { ts_station_new(ptr::null(), T0_MS, &mut st) }, TsStatus::Ok);
    assert!(!st.is_null());

    let mut accepted = -1;
    let garbage = c("$GPGGA,garbage*00");
    assert_eq!(unsafe { ts_station_ingest(st, garbage.as_ptr(), T0_MS, &mut accepted) }, TsStatus::Ok);
    assert_eq!(accepted, 0);

    let f = frame(r#"{"id":"a","kind":"manual_point","az":45,"el":0}"#);
    let mut ack = ptr::null_mut();
    assert_eq!(unsafe { ts_station_command(st, f.as_ptr(), T0_MS, &mut ack) }, TsStatus::Ok);
    let ack_text = unsafe { CStr::from_ptr(ack) }.to_str().unwrap().to_owned();
    unsafe { ts_string_free(ack) };
    assert!(ack_text.contains(r#""status":"ok""#), "{ack_text}");
    assert_eq!(
        unsafe { ts_station_command(st, f.as_ptr(), T0_MS, &mut ack) },
        TsStatus::DuplicateCommand
    );
    let bad = frame(r#"{"id":"b","kind":"manual_point","az":400,"el":0}"#);
    assert_eq!(unsafe { ts_station_command(st, bad.as_ptr(), T0_MS, &mut ack) }, TsStatus::ParseError);

    for i in 0..20 {
        assert_eq!(unsafe { ts_station_tick(st, T0_MS + 100 * i, 0.1) }, TsStatus::Ok);
    }
    let mut az = 0.0;
    assert_eq!(unsafe { ts_station_azimuth(st, &mut az) }, TsStatus::Ok);
    assert!((az - 45.0).abs() < 1e-9, "{az}");

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { ts_station_snapshot_json(st, &mut json) }, TsStatus::Ok);
    let v: serde_json::Value =
        serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    unsafe { ts_string_free(json) };
    assert_eq!(v["gimbal"]["mode"], "manual");
    assert_eq!(v["rejections"]["checksum"], 1);
    unsafe { ts_station_free(st) };
    unsafe { ts_station_free(ptr::null_mut()) };
}

#[test]
fn bad_config_is_parse_error() {
    let mut st = ptr::null_mut();
    let cfg = c("no_such_key = 1");
    assert_eq!(unsafe { ts_station_new(cfg.as_ptr(), T0_MS, &mut st) }, TsStatus::ParseError);
    assert!(st.is_null());
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/trackstation.h")
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(header()).unwrap();
    for f in [
        "ts_version",
        "ts_last_error",
        "ts_string_free",
        "ts_haversine_distance",
        "ts_initial_bearing",
        "ts_nmea_checksum",
        "ts_one_way_latency",
        "ts_effective_max_range",
        "ts_station_new",
        "ts_station_free",
        "ts_station_ingest",
        "ts_station_command",
        "ts_station_tick",
        "ts_station_azimuth",
        "ts_station_snapshot_json",
    ] {
        assert!(h.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(h.contains("typedef struct TsStation TsStation;"));
    assert!(h.contains("TS_STATUS_DUPLICATE_COMMAND = 4"));
}

fn cc() -> Option<&'static str> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
}

#[test]
fn c_program_links_against_static_library() {
    let Some(cc) = cc() else {
        eprintln!("no C compiler; skipped");
        return;
    };
    // target/<profile>/deps/<this test> -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libtrackstation_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("ffi_smoke");
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/c/smoke.c");
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let run = Command::new(&out).output().unwrap();
    assert!(
        run.status.success(),
        "smoke exited {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
