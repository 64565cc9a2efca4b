use std::path::Path;
use std::process::{Command, Output};

fn trackstation(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trackstation"))
        .args(args)
        .output()
        .unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn bench_writes_tables_logs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for kind in ["throughput", "latency"] {
        let o = trackstation(&["bench", kind, "--all-paper-configs", "--output-dir", out]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(dir.path().join(format!("{kind}.txt")).is_file());
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(format!("{kind}.json"))).unwrap()).unwrap();
        assert_eq!(json.as_array().unwrap().len(), 8);
    }
    assert!(dir.path().join("logs/latency_1.csv").is_file());
    assert!(dir.path().join("logs/throughput_8.log").is_file());
    let m = manifest(dir.path());
    assert_eq!(m["exit_code"], 0);
    assert!(m["finished_at"].is_string());
}

#[test]
fn range_bench_for_one_mode() {
    let dir = tempfile::tempdir().unwrap();
    let o = trackstation(&[
        "bench", "range", "--mode", "FU2", "--seed", "3", "--output-dir", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().any(|n| n.starts_with("range_") && n.ends_with(".geojson")), "{names:?}");
    assert!(String::from_utf8_lossy(&o.stdout).contains("FU2"));
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(trackstation(&["bench", "sideways"]).status.code(), Some(2));
    assert_eq!(
        trackstation(&["bench", "range", "--config", "/nonexistent.toml", "--output-dir", out]).status.code(),
        Some(2)
    );
    assert_eq!(manifest(dir.path())["exit_code"], 2);
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "name = \"x\"\nbogus_key = 1\n").unwrap();
    assert_eq!(
        trackstation(&["track", "--scenario", bad.to_str().unwrap(), "--output-dir", out]).status.code(),
        Some(2)
    );
    assert_eq!(trackstation(&["replay", "/nonexistent.jsonl"]).status.code(), Some(2));
    assert_eq!(trackstation(&["--help"]).status.code(), Some(0));
}

#[test]
fn track_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = trackstation(&["track", "--scenario", "stationary", "--output-dir", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trace.csv", "track.geojson", "summary.json", "logs/track_sent.log", "logs/track_received.log"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let journal = dir.path().join(summary["journal"].as_str().unwrap());

    let r = trackstation(&["replay", journal.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    let replayed: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(replayed, summary["snapshot"]);

    // Same seed, same bytes.
    let again = tempfile::tempdir().unwrap();
    let o = trackstation(&["track", "--scenario", "stationary", "--output-dir", again.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    for f in ["trace.csv", "track.geojson", "logs/track_sent.log"] {
        assert_eq!(
            std::fs::read(dir.path().join(f)).unwrap(),
            std::fs::read(again.path().join(f)).unwrap(),
            "{f}"
        );
    }

    let text = std::fs::read_to_string(&journal).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[2] = "]]";
    std::fs::write(&journal, lines.join("\n")).unwrap();
    assert_eq!(trackstation(&["replay", journal.to_str().unwrap()]).status.code(), Some(1));
}
