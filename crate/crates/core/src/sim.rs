//! Closed-loop tracking sessions: a moving portable, its telemetry over the
//! modeled link, and the station steering the base antenna in response.

use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bench::{self, default_start_time, TransmissionMatch};
use crate::geo::{destination, format_gga, haversine_distance, initial_bearing, GeoPoint};
use crate::linkmodel::{self, Calibration, ChannelState, LinkSpec};
use crate::station::{
    Command, CommandKind, Journal, Station, StationConfig, StationError, StationSnapshot,
};
use crate::tracker::{pointing_error, GimbalMode, TrackerConfig};

const CIRCLE: &str = include_str!("../data/scenarios/circle.toml");
const CIRCLE_FROZEN: &str = include_str!("../data/scenarios/circle_frozen.toml");
const STATIONARY: &str = include_str!("../data/scenarios/stationary.toml");

/// Where the portable is over time, relative to the base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetPath {
    Stationary {
        bearing_deg: f64,
        distance_m: f64,
    },
    Circle {
        radius_m: f64,
        speed_m_s: f64,
        #[serde(default)]
        start_bearing_deg: f64,
        #[serde(default = "yes")]
        clockwise: bool,
    },
    /// Straight radial walk away from the base.
    Line {
        bearing_deg: f64,
        #[serde(default)]
        start_m: f64,
        speed_m_s: f64,
    },
}

fn yes() -> bool {
    true
}

impl TargetPath {
    pub fn position(&self, base: &GeoPoint, t: f64) -> GeoPoint {
        match *self {
            TargetPath::Stationary {
                bearing_deg,
                distance_m,
            } => destination(base, bearing_deg, distance_m),
            TargetPath::Circle {
                radius_m,
                speed_m_s,
                start_bearing_deg,
                clockwise,
            } => {
                let swept = (speed_m_s * t / radius_m).to_degrees();
                let b = if clockwise {
                    start_bearing_deg + swept
                } else {
                    start_bearing_deg - swept
                };
                destination(base, b, radius_m)
            }
            TargetPath::Line {
                bearing_deg,
                start_m,
                speed_m_s,
            } => destination(base, bearing_deg, start_m + speed_m_s * t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledCommand {
    pub at_s: f64,
    pub id: String,
    #[serde(flatten)]
    pub kind: CommandKind,
}

fn default_base_lat() -> f64 {
    52.9115
}

fn default_base_lon() -> f64 {
    -1.1847
}

fn default_tick() -> f64 {
    0.5
}

fn default_fix_interval() -> f64 {
    bench::DEFAULT_FIX_INTERVAL_S
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackScenario {
    pub name: String,
    #[serde(default = "default_base_lat")]
    pub base_lat: f64,
    #[serde(default = "default_base_lon")]
    pub base_lon: f64,
    /// `tx_antenna` is the one on the gimbal.
    pub link: LinkSpec,
    #[serde(default)]
    pub tracker: TrackerConfig,
    pub target: TargetPath,
    pub duration_s: f64,
    #[serde(default = "default_tick")]
    pub tick_s: f64,
    #[serde(default = "default_fix_interval")]
    pub fix_interval_s: f64,
    /// Pins the gimbal at the opening true bearing plus this offset.
    #[serde(default)]
    pub frozen_offset_deg: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_start_time")]
    pub start_time: DateTime<Utc>,
    #[serde(default)]
    pub commands: Vec<ScheduledCommand>,
}

impl TrackScenario {
    pub fn parse(text: &str) -> Result<Self, StationError> {
        let s: TrackScenario = toml::from_str(text).map_err(|e| StationError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_path(path: &Path) -> Result<Self, StationError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| StationError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Bundled scenarios: `circle`, `circle_frozen`, `stationary`.
    pub fn preset(name: &str) -> Option<Self> {
        let text = match name {
            "circle" => CIRCLE,
            "circle_frozen" => CIRCLE_FROZEN,
            "stationary" => STATIONARY,
            _ => return None,
        };
        Some(Self::parse(text).expect("bundled scenario parses"))
    }

    pub fn validate(&self) -> Result<(), StationError> {
        let bad = |m: &str| Err(StationError::Config(format!("{}: {m}", self.name)));
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            return bad("duration_s must be non-negative");
        }
        if !(self.tick_s.is_finite() && self.tick_s > 0.0) {
            return bad("tick_s must be positive");
        }
        if !(self.fix_interval_s.is_finite() && self.fix_interval_s > 0.0) {
            return bad("fix_interval_s must be positive");
        }
        match self.target {
            TargetPath::Circle { radius_m, .. } if !(radius_m > 0.0) => bad("radius_m must be positive"),
            TargetPath::Stationary { distance_m, .. } if distance_m < 0.0 => bad("distance_m is negative"),
            _ => Ok(()),
        }
    }

    pub fn base_position(&self) -> Result<GeoPoint, StationError> {
        GeoPoint::new(self.base_lat, self.base_lon)
            .map_err(|e| StationError::Config(format!("base position: {e}")))
    }

    pub fn station_config(&self) -> StationConfig {
        StationConfig {
            session_id: Some(format!("{}-{}", self.name, self.seed)),
            base_lat: self.base_lat,
            base_lon: self.base_lon,
            link: self.link.clone(),
            tracker: self.tracker.clone(),
            fix_interval_s: self.fix_interval_s,
            seed: self.seed,
            ..StationConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub tick: usize,
    pub t_s: f64,
    pub az_deg: f64,
    pub true_bearing_deg: f64,
    pub pointing_error_deg: f64,
    pub distance_m: f64,
    pub mode: GimbalMode,
    /// Set on ticks where the portable transmitted.
    pub fix_delivered: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct TrackRun {
    pub scenario: TrackScenario,
    pub trace: Vec<TraceRow>,
    pub sent_log: Vec<String>,
    pub received_log: Vec<String>,
    pub matched: TransmissionMatch,
    pub snapshot: StationSnapshot,
}

impl TrackRun {
    pub fn delivery_ratio(&self) -> f64 {
        if self.sent_log.is_empty() {
            return 0.0;
        }
        self.received_log.len() as f64 / self.sent_log.len() as f64
    }

    pub fn final_pointing_error(&self) -> Option<f64> {
        self.trace.last().map(|r| r.pointing_error_deg)
    }

    pub fn geojson(&self) -> Value {
        bench::export_geojson(&self.matched, &self.snapshot.base_position)
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("tick,t_s,az_deg,true_bearing_deg,pointing_error_deg,distance_m,mode,fix\n");
        for r in &self.trace {
            let fix = match r.fix_delivered {
                Some(true) => "delivered",
                Some(false) => "lost",
                None => "",
            };
            out.push_str(&format!(
                "{},{:.3},{:.6},{:.6},{:.6},{:.3},{},{}\n",
                r.tick,
                r.t_s,
                r.az_deg,
                r.true_bearing_deg,
                r.pointing_error_deg,
                r.distance_m,
                r.mode.as_str(),
                fix
            ));
        }
        out
    }

    pub fn summary(&self) -> Value {
        serde_json::json!({
            "scenario": self.scenario.name,
            "seed": self.scenario.seed,
            "ticks": self.trace.len(),
            "fixes_sent": self.sent_log.len(),
            "fixes_received": self.received_log.len(),
            "delivery_ratio": self.delivery_ratio(),
            "final_pointing_error_deg": self.final_pointing_error(),
            "sweeps_completed": self.snapshot.sweeps_completed,
            "commands_accepted": self.snapshot.commands_accepted,
            "acks": self.snapshot.acks,
        })
    }
}

/// Step-wise driver, so a caller can interleave its own commands (the
/// gateway) between ticks.
pub struct TrackSim {
    scenario: TrackScenario,
    station: Station,
    base: GeoPoint,
    ticks: usize,
    tick: usize,
    next_fix_s: f64,
    fix_index: usize,
    next_command: usize,
    trace: Vec<TraceRow>,
    sent_log: Vec<String>,
    received_log: Vec<String>,
}

fn at(start: DateTime<Utc>, t: f64) -> DateTime<Utc> {
    start + Duration::nanoseconds((t * 1e9).round() as i64)
}

impl TrackSim {
    pub fn new(
        scenario: TrackScenario,
        calibration: Calibration,
        journal: Option<Journal>,
    ) -> Result<Self, StationError> {
        scenario.validate()?;
        let base = scenario.base_position()?;
        let mut config = scenario.station_config();
        let frozen = scenario.frozen_offset_deg.map(|offset| {
            let p0 = scenario.target.position(&base, 0.0);
            let b0 = initial_bearing(&base, &p0).unwrap_or(0.0);
            crate::geo::normalize_deg(b0 + offset)
        });
        if let Some(az) = frozen {
            config.tracker.initial_azimuth_deg = az;
        }
        let mut station = Station::new(config, calibration, journal, scenario.start_time)?;
        if let Some(az) = frozen {
            let c = Command {
                id: "frozen".into(),
                issued_at: scenario.start_time,
                kind: CommandKind::ManualPoint { az, el: 0.0 },
            };
            station.handle_command(c, scenario.start_time)?;
        }
        let ticks = (scenario.duration_s / scenario.tick_s).round() as usize;
        Ok(TrackSim {
            scenario,
            station,
            base,
            ticks,
            tick: 0,
            next_fix_s: 0.0,
            fix_index: 0,
            next_command: 0,
            trace: Vec::new(),
            sent_log: Vec::new(),
            received_log: Vec::new(),
        })
    }

    pub fn station(&self) -> &Station {
        &self.station
    }

    pub fn station_mut(&mut self) -> &mut Station {
        &mut self.station
    }

    pub fn now(&self) -> DateTime<Utc> {
        at(self.scenario.start_time, self.tick as f64 * self.scenario.tick_s)
    }

    pub fn finished(&self) -> bool {
        self.tick > self.ticks
    }

    fn channel(&self, pos: &GeoPoint) -> (ChannelState, f64) {
        let distance_m = haversine_distance(&self.base, pos);
        let bearing = initial_bearing(&self.base, pos).unwrap_or(self.station.tracker().state().azimuth_deg);
        let ch = ChannelState {
            distance_m,
            tx_off_boresight_deg: pointing_error(self.station.tracker().state(), bearing),
            rx_off_boresight_deg: 0.0,
            rng_seed: 0,
        };
        (ch, bearing)
    }

    /// Portable fix, transmission, station tick, in that order.
    pub fn step(&mut self) -> Result<TraceRow, StationError> {
        let t = self.tick as f64 * self.scenario.tick_s;
        let now = self.now();
        let pos = self.scenario.target.position(&self.base, t);
        let (ch, _) = self.channel(&pos);
        self.station.set_link_channel(ch);

        while let Some(sc) = self.scenario.commands.get(self.next_command) {
            if sc.at_s > t + 1e-9 {
                break;
            }
            let c = Command {
                id: sc.id.clone(),
                issued_at: now,
                kind: sc.kind.clone(),
            };
            self.next_command += 1;
            if let Err(e) = self.station.handle_command(c, now) {
                log::warn!("scheduled command {}: {e}", sc.id);
            }
        }

        let mut fix_delivered = None;
        if t + 1e-9 >= self.next_fix_s {
            let sentence = format_gga(&pos.with_time(now), &now, 1);
            let raw = sentence.raw().to_string();
            let link = self.station.link().clone();
            let frame_len = sentence.to_line().len();
            let chunk = link.mode.max_packet_bytes.unwrap_or(frame_len).min(frame_len);
            let k = self.fix_index;
            let delivered = (0..bench::packet_count(&link, frame_len)).all(|c| {
                let ch = ChannelState {
                    rng_seed: bench::packet_seed(self.scenario.seed, k, c),
                    ..ch
                };
                linkmodel::packet_outcome(&link, &ch, chunk).is_delivered()
            });
            self.sent_log.push(raw.clone());
            if delivered {
                let latency = linkmodel::one_way_latency(&link, frame_len);
                self.station.ingest_telemetry(&raw, now)?;
                self.station.record_transmission(true, Some(latency), now)?;
                self.received_log.push(raw);
            } else {
                self.station.record_transmission(false, None, now)?;
            }
            fix_delivered = Some(delivered);
            self.fix_index += 1;
            self.next_fix_s += self.station.state().fix_interval_s;
        }

        self.station.tick(now, self.scenario.tick_s)?;
        let (after, bearing) = self.channel(&pos);
        let g = self.station.tracker().state();
        let row = TraceRow {
            tick: self.tick,
            t_s: t,
            az_deg: g.azimuth_deg,
            true_bearing_deg: bearing,
            pointing_error_deg: after.tx_off_boresight_deg,
            distance_m: after.distance_m,
            mode: g.mode,
            fix_delivered,
        };
        self.trace.push(row.clone());
        self.tick += 1;
        Ok(row)
    }

    pub fn finish(mut self) -> Result<TrackRun, StationError> {
        self.station.flush_journal()?;
        let matched = bench::match_transmissions(&self.sent_log, &self.received_log);
        Ok(TrackRun {
            snapshot: self.station.snapshot(),
            scenario: self.scenario,
            trace: self.trace,
            sent_log: self.sent_log,
            received_log: self.received_log,
            matched,
        })
    }
}

pub fn run_track(
    scenario: TrackScenario,
    calibration: Calibration,
    journal: Option<Journal>,
) -> Result<TrackRun, StationError> {
    let mut sim = TrackSim::new(scenario, calibration, journal)?;
    while !sim.finished() {
        sim.step()?;
    }
    sim.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for n in ["circle", "circle_frozen", "stationary"] {
            assert!(TrackScenario::preset(n).is_some(), "{n}");
        }
        assert!(TrackScenario::preset("nope").is_none());
    }

    #[test]
    fn circle_path_keeps_radius() {
        let base = GeoPoint::new(52.9, -1.2).unwrap();
        let p = TargetPath::Circle {
            radius_m: 100.0,
            speed_m_s: 1.5,
            start_bearing_deg: 0.0,
            clockwise: true,
        };
        for t in [0.0, 10.0, 200.0, 419.0] {
            assert!((haversine_distance(&base, &p.position(&base, t)) - 100.0).abs() < 1e-6);
        }
        let quarter = 100.0 * std::f64::consts::FRAC_PI_2 / 1.5;
        let b = initial_bearing(&base, &p.position(&base, quarter)).unwrap();
        assert!((b - 90.0).abs() < 0.01, "{b}");
    }

    #[test]
    fn unknown_scenario_keys_rejected() {
        let text = format!("{CIRCLE}\nsurprise = 1\n");
        assert!(TrackScenario::parse(&text).is_err());
    }

    #[test]
    fn short_stationary_run_tracks() {
        let mut s = TrackScenario::preset("stationary").unwrap();
        s.duration_s = 5.0;
        let run = run_track(s, Calibration::embedded(), None).unwrap();
        assert!(run.final_pointing_error().unwrap() < 1.0);
        assert_eq!(run.snapshot.gimbal.mode, GimbalMode::Tracking);
    }
}
