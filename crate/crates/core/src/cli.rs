//! Command-line entry points. [`run`] returns the process exit code:
//! 0 on completion, 1 on a failed payload comparison or corrupt journal,
//! 2 on configuration or I/O errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration as StdDuration;

use chrono::{DateTime, SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bench::{self, BenchRecord, BenchSuite, LatencyOptions};
use crate::linkmodel::{Calibration, ModeName};
use crate::sim::{TrackScenario, TrackSim};
use crate::station::server::{self, refusal_frame};
use crate::station::{journal_replay, Journal, JournalError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "trackstation", version, about = "Simulated HC-12 ground station")]
pub struct Cli {
    /// More log output; repeat for debug.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Serial-link benchmarks over the modeled radio.
    Bench(BenchArgs),
    /// Closed-loop tracking session.
    Track(TrackArgs),
    /// Rebuilds a station snapshot from a session journal.
    Replay {
        journal: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchKindArg {
    Throughput,
    Latency,
    Range,
}

impl BenchKindArg {
    fn as_str(self) -> &'static str {
        match self {
            BenchKindArg::Throughput => "throughput",
            BenchKindArg::Latency => "latency",
            BenchKindArg::Range => "range",
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub kind: BenchKindArg,
    /// Suite file; defaults to the bundled hardware-trial configurations.
    #[arg(long, conflicts_with = "all_paper_configs")]
    pub config: Option<PathBuf>,
    /// Run every bundled hardware-trial configuration.
    #[arg(long)]
    pub all_paper_configs: bool,
    /// Keep only configurations in this radio mode (FU1..FU4).
    #[arg(long)]
    pub mode: Option<ModeName>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Scenario file, or a bundled name: circle, circle_frozen, stationary.
    #[arg(long, default_value = "circle")]
    pub scenario: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also run the websocket gateway and UI server.
    #[arg(long)]
    pub serve: bool,
    #[arg(long, default_value_t = 8765)]
    pub port: u16,
    /// UI assets to serve.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    /// Simulated seconds per wall second while serving; 0 runs flat out.
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
    #[arg(long, default_value = "out")]
    pub output_dir: PathBuf,
}

/// Written when a run starts and rewritten when it ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_paths: Vec<String>,
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    pub started_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
    pub exit_code: Option<i32>,
    pub data_dir: Option<String>,
}

impl RunManifest {
    fn new(subcommand: String, config_paths: Vec<String>, seed: Option<u64>, output_dir: &Path) -> Self {
        RunManifest {
            subcommand,
            config_paths,
            seed,
            output_dir: output_dir.to_path_buf(),
            started_at: Utc::now(),
            finished_at: None,
            exit_code: None,
            data_dir: std::env::var(crate::linkmodel::DATA_DIR_ENV).ok(),
        }
    }

    fn write(&self) -> Result<(), String> {
        write_file(
            &self.output_dir.join("manifest.json"),
            &serde_json::to_string_pretty(self).expect("manifest serialises"),
        )
    }

    fn close(mut self, code: i32) -> i32 {
        self.finished_at = Some(Utc::now());
        self.exit_code = Some(code);
        match self.write() {
            Ok(()) => code,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_CONFIG
            }
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn lines(v: &[String]) -> String {
    let mut s = v.join("\n");
    if !s.is_empty() {
        s.push('\n');
    }
    s
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialises");
    s.push('\n');
    s
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn calibration() -> Result<Calibration, String> {
    Calibration::load().map_err(|e| e.to_string())
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match cli.command {
        CliCommand::Bench(a) => cmd_bench(&a),
        CliCommand::Track(a) => cmd_track(&a),
        CliCommand::Replay { journal } => cmd_replay(&journal),
    }
}

pub fn cmd_bench(a: &BenchArgs) -> i32 {
    let config_paths = a.config.iter().map(|p| p.display().to_string()).collect();
    let manifest = RunManifest::new(
        format!("bench {}", a.kind.as_str()),
        config_paths,
        Some(a.seed),
        &a.output_dir,
    );
    if let Err(e) = manifest.write() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let code = match bench_inner(a) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    };
    manifest.close(code)
}

fn bench_inner(a: &BenchArgs) -> Result<i32, String> {
    let cal = calibration()?;
    let mut suite = match &a.config {
        Some(p) => BenchSuite::from_path(p).map_err(|e| e.to_string())?,
        None => BenchSuite::reference(),
    };
    if let Some(m) = a.mode {
        suite = suite.only_mode(m);
    }
    let out = &a.output_dir;
    let (records, failed) = match a.kind {
        BenchKindArg::Throughput => {
            let recs = bench::run_throughput_suite(&cal, &suite).map_err(|e| e.to_string())?;
            let mut failed = false;
            for r in &recs {
                if let BenchRecord::Throughput { result, .. } = r {
                    failed |= !result.passed;
                    let line = format!(
                        "config={} link={} duration_s={:.9} bytes_received={} passed={} failure={}\n",
                        result.config_id,
                        result.link,
                        result.duration_s,
                        result.bytes_received,
                        result.passed,
                        result.failure.as_deref().unwrap_or("-")
                    );
                    write_file(&out.join(format!("logs/throughput_{}.log", result.config_id)), &line)?;
                }
            }
            (recs, failed)
        }
        BenchKindArg::Latency => {
            let recs = bench::run_latency_suite(&cal, &suite, LatencyOptions::default())
                .map_err(|e| e.to_string())?;
            let mut failed = false;
            for r in &recs {
                if let BenchRecord::Latency { result, .. } = r {
                    failed |= !result.valid;
                    let mut csv = String::from("iteration,round_trip_ms\n");
                    for (i, s) in result.samples_ms.iter().enumerate() {
                        csv.push_str(&format!("{},{:.9}\n", i + 1, s));
                    }
                    write_file(&out.join(format!("logs/latency_{}.csv", result.config_id)), &csv)?;
                }
            }
            (recs, failed)
        }
        BenchKindArg::Range => {
            let runs = bench::run_range_suite(&cal, &suite, a.seed).map_err(|e| e.to_string())?;
            let mut recs = Vec::new();
            for r in runs {
                let id = &r.summary.config_id;
                write_file(&out.join(format!("logs/range_{id}_sent.log")), &lines(&r.logs.sent_log))?;
                write_file(
                    &out.join(format!("logs/range_{id}_received.log")),
                    &lines(&r.logs.received_log),
                )?;
                let geo = bench::export_geojson(&r.matched, &r.scenario.base_position);
                write_file(&out.join(format!("range_{id}.geojson")), &pretty(&geo))?;
                recs.push(BenchRecord::Range(r.summary));
            }
            (recs, false)
        }
    };
    let table = bench::report_tables(&records);
    let name = a.kind.as_str();
    write_file(&out.join(format!("{name}.txt")), &table)?;
    write_file(&out.join(format!("{name}.json")), &pretty(&records))?;
    emit(&table);
    Ok(if failed { EXIT_FAILED } else { EXIT_OK })
}

fn load_scenario(arg: &str) -> Result<TrackScenario, String> {
    let path = Path::new(arg);
    if path.exists() {
        return TrackScenario::from_path(path).map_err(|e| e.to_string());
    }
    TrackScenario::preset(arg).ok_or_else(|| format!("{arg}: no such scenario file or bundled scenario"))
}

pub fn cmd_track(a: &TrackArgs) -> i32 {
    let manifest = RunManifest::new("track".into(), vec![a.scenario.clone()], a.seed, &a.output_dir);
    if let Err(e) = manifest.write() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let code = match track_inner(a) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    };
    manifest.close(code)
}

fn track_inner(a: &TrackArgs) -> Result<(), String> {
    let mut scenario = load_scenario(&a.scenario)?;
    if let Some(seed) = a.seed {
        scenario.seed = seed;
    }
    let cal = calibration()?;
    let session_id = scenario.station_config().session_id.unwrap_or_default();
    let journal = Journal::create(&a.output_dir, &session_id).map_err(|e| e.to_string())?;
    let tick_s = scenario.tick_s;
    let mut sim = TrackSim::new(scenario, cal, Some(journal)).map_err(|e| e.to_string())?;

    let stop = Arc::new(AtomicBool::new(false));
    let gateway = if a.serve {
        let events = sim.station_mut().subscribe();
        let handle = server::serve(&format!("127.0.0.1:{}", a.port), a.static_dir.clone(), events)
            .map_err(|e| format!("gateway: {e}"))?;
        eprintln!("serving on http://{}", handle.local_addr());
        let s = Arc::clone(&stop);
        if let Err(e) = ctrlc::set_handler(move || s.store(true, Ordering::SeqCst)) {
            log::warn!("no interrupt handler: {e}");
        }
        Some(handle)
    } else {
        None
    };
    let pace = (a.serve && a.speed > 0.0).then(|| StdDuration::from_secs_f64(tick_s / a.speed));

    while !sim.finished() && !stop.load(Ordering::SeqCst) {
        if let Some(g) = &gateway {
            while let Ok(inbound) = g.commands().try_recv() {
                let now = sim.now();
                let mut c = inbound.command;
                c.issued_at = now;
                let id = c.id.clone();
                if let Err(e) = sim.station_mut().handle_command(c, now) {
                    let _ = inbound.reply.send(refusal_frame(&id, &e, now));
                }
            }
        }
        sim.step().map_err(|e| e.to_string())?;
        if let Some(p) = pace {
            std::thread::sleep(p);
        }
    }
    if let Some(g) = gateway {
        g.shutdown();
    }
    let journal_path = sim.station().journal_path();
    let run = sim.finish().map_err(|e| e.to_string())?;
    let out = &a.output_dir;
    write_file(&out.join("trace.csv"), &run.trace_csv())?;
    write_file(&out.join("track.geojson"), &pretty(&run.geojson()))?;
    write_file(&out.join("logs/track_sent.log"), &lines(&run.sent_log))?;
    write_file(&out.join("logs/track_received.log"), &lines(&run.received_log))?;
    let mut summary = run.summary();
    summary["journal"] = serde_json::json!(journal_path
        .as_deref()
        .and_then(|p| p.strip_prefix(out).ok())
        .map(|p| p.display().to_string()));
    summary["snapshot"] = snapshot_summary(&run.snapshot);
    write_file(&out.join("summary.json"), &pretty(&summary))?;
    emit(&pretty(&summary));
    Ok(())
}

/// The compact view `replay` prints and `track` records.
pub fn snapshot_summary(s: &crate::station::StationSnapshot) -> serde_json::Value {
    serde_json::json!({
        "session_id": s.session_id,
        "radio_mode": s.radio_mode,
        "baud": s.baud,
        "fix_interval_s": s.fix_interval_s,
        "gimbal": s.gimbal,
        "telemetry_records": s.telemetry.len(),
        "last_seq": s.telemetry.last().map(|r| r.seq),
        "stats": s.stats,
        "rejections": s.rejections,
        "commands_accepted": s.commands_accepted,
        "acks": s.acks,
        "pending_commands": s.pending_commands,
        "sweeps_completed": s.sweeps_completed,
        "pressure_hpa": s.pressure_hpa,
        "last_event_time": s.last_event_time.map(|t| t.to_rfc3339_opts(SecondsFormat::AutoSi, true)),
    })
}

pub fn cmd_replay(path: &Path) -> i32 {
    match journal_replay(path) {
        Ok(r) => {
            if r.truncated_tail {
                eprintln!("warning: dropped truncated final record");
            }
            emit(&pretty(&snapshot_summary(&r.snapshot)));
            EXIT_OK
        }
        Err(e @ JournalError::JournalCorrupt { .. }) => {
            eprintln!("error: {e}");
            EXIT_FAILED
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
