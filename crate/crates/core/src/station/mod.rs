//! The base-unit service.
//!
//! Every state change is an event: it is journaled, folded into
//! [`StationState`], then fanned out on the [`Bus`]. Snapshots are derived
//! from the fold alone, so replaying a journal rebuilds them exactly.

mod bus;
pub mod events;
pub mod gateway;
pub mod journal;
pub mod server;
mod state;

pub use bus::Bus;
pub use events::{
    Ack, AckStatus, BenchKind, Command, CommandKind, EventBody, GimbalBody, LinkEvent, LinkStats,
    RejectionReason, SensorSource, TelemetryRecord, Topic,
};
pub use gateway::{gateway_decode, gateway_encode, GatewayError};
pub use journal::{journal_replay, Journal, JournalError, Replay};
pub use state::{RejectionCounts, StationSnapshot, StationState, ROLLING_WINDOW, TELEMETRY_WINDOW};

use std::collections::HashSet;
use std::path::PathBuf;
use std::sync::mpsc::Receiver;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::{self, LatencyOptions, RadioLink, RangeScenario};
use crate::geo::{parse_nmea, validate_fix, FixError, GeoPoint, NmeaError, NmeaSentence};
use crate::linkmodel::{
    self, AntennaKind, Calibration, ChannelState, LinkConfig, LinkError, LinkSpec, ModeName,
};
use crate::tracker::{
    pointing_error, GimbalState, ServoCommand, TickOutput, Tracker, TrackerConfig, TrackerError,
};

use events::{
    CommandBody, RejectionBody, SensorBody, SessionBody, StatsBody, SweepBody,
};

#[derive(Debug, Error)]
pub enum StationError {
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
    #[error("journal: {0}")]
    Journal(#[from] std::io::Error),
    #[error("duplicate command id {0:?}")]
    DuplicateCommand(String),
    #[error("invalid command parameter {field}: {reason}")]
    InvalidCommand { field: String, reason: String },
    #[error("config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationConfig {
    pub session_id: Option<String>,
    pub base_lat: f64,
    pub base_lon: f64,
    pub base_alt_m: Option<f64>,
    pub link: LinkSpec,
    pub tracker: TrackerConfig,
    pub fix_interval_s: f64,
    pub gateway_port: u16,
    pub static_dir: Option<PathBuf>,
    pub telemetry_window: usize,
    /// Seeds the fate of commands sent over the radio.
    pub seed: u64,
}

impl Default for StationConfig {
    fn default() -> Self {
        StationConfig {
            session_id: None,
            base_lat: 52.9115,
            base_lon: -1.1847,
            base_alt_m: None,
            link: LinkSpec::new(ModeName::Fu3, 9600)
                .with_antennas(AntennaKind::Yagi, AntennaKind::OmniUnity),
            tracker: TrackerConfig::default(),
            fix_interval_s: bench::DEFAULT_FIX_INTERVAL_S,
            gateway_port: 8765,
            static_dir: None,
            telemetry_window: TELEMETRY_WINDOW,
            seed: 0,
        }
    }
}

impl StationConfig {
    pub fn parse(text: &str) -> Result<Self, StationError> {
        toml::from_str(text).map_err(|e| StationError::Config(e.to_string()))
    }

    pub fn base_position(&self) -> Result<GeoPoint, StationError> {
        let p = GeoPoint::new(self.base_lat, self.base_lon)
            .map_err(|e| StationError::Config(format!("base position: {e}")))?;
        Ok(match self.base_alt_m {
            Some(a) => p.with_alt(a),
            None => p,
        })
    }

    pub fn session_body(&self, session_id: &str) -> SessionBody {
        let t = &self.tracker;
        let gimbal = GimbalState::new(
            crate::geo::normalize_deg(t.initial_azimuth_deg),
            0.0,
            t.max_az_rate_deg_s.max(f64::MIN_POSITIVE),
            t.max_el_rate_deg_s.max(f64::MIN_POSITIVE),
        )
        .unwrap_or_else(|_| GimbalState::new(0.0, 0.0, 60.0, 30.0).unwrap());
        SessionBody {
            session_id: session_id.to_string(),
            base_position: self
                .base_position()
                .unwrap_or_else(|_| GeoPoint::new(0.0, 0.0).unwrap()),
            radio_mode: self.link.mode,
            baud: self.link.baud,
            fix_interval_s: self.fix_interval_s,
            telemetry_window: self.telemetry_window.max(1),
            gimbal: GimbalBody::from(&gimbal),
        }
    }
}

/// Outcome of feeding one line to the station.
#[derive(Debug, Clone, PartialEq)]
pub enum Ingest {
    Accepted(TelemetryRecord),
    Rejected(RejectionReason),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SensorReading {
    Gps { time: DateTime<Utc>, position: GeoPoint },
    Barometric { time: DateTime<Utc>, pressure_hpa: f64 },
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn seconds(s: f64) -> Duration {
    Duration::nanoseconds((s * 1e9).round() as i64)
}

fn wire_safe(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// The radio frame that carries a command to the portable.
pub fn command_wire_frame(c: &Command) -> String {
    let mut fields = vec![wire_safe(&c.id), c.kind.name().to_string()];
    match &c.kind {
        CommandKind::SetRadioMode { mode, baud } => {
            fields.push(mode.to_string());
            fields.push(baud.to_string());
        }
        CommandKind::SetFixInterval { seconds } => fields.push(format!("{seconds}")),
        CommandKind::ManualPoint { az, el } => {
            fields.push(format!("{az}"));
            fields.push(format!("{el}"));
        }
        CommandKind::StartBench { bench } => fields.push(bench.as_str().to_string()),
        CommandKind::StartSweep | CommandKind::ResumeTracking => {}
    }
    NmeaSentence::build("PT", "CMD", &fields)
        .expect("command frame is well formed")
        .to_line()
}

/// The portable's acknowledgement frame.
pub fn ack_wire_frame(id: &str) -> String {
    NmeaSentence::build("PT", "ACK", &[wire_safe(id)])
        .expect("ack frame is well formed")
        .to_line()
}

/// Issue-to-ack time of a delivered command: both frames' UART, air and
/// module time.
pub fn command_round_trip(link: &LinkConfig, c: &Command) -> f64 {
    linkmodel::one_way_latency(link, command_wire_frame(c).len())
        + linkmodel::one_way_latency(link, ack_wire_frame(&c.id).len())
}

/// How long the station waits before declaring a command undelivered.
pub fn command_timeout(link: &LinkConfig) -> f64 {
    3.0 * linkmodel::round_trip_latency(link) + 1.0
}

pub struct Station {
    config: StationConfig,
    calibration: Calibration,
    link: LinkConfig,
    tracker: Tracker,
    state: StationState,
    journal: Option<Journal>,
    bus: Bus,
    seen_ids: HashSet<String>,
    commands_sent: u64,
    channel_hint: Option<ChannelState>,
    opening: LinkEvent,
}

impl Station {
    pub fn new(
        config: StationConfig,
        calibration: Calibration,
        journal: Option<Journal>,
        now: DateTime<Utc>,
    ) -> Result<Self, StationError> {
        config.base_position()?;
        let link = calibration.link_config(&config.link)?;
        let tracker = Tracker::new(config.tracker.clone())?;
        let session_id = config
            .session_id
            .clone()
            .unwrap_or_else(|| format!("session-{:016x}", mix(config.seed)));
        let mut session = config.session_body(&session_id);
        session.gimbal = GimbalBody::from(tracker.state());
        let mut station = Station {
            state: StationState::new(session.clone()),
            config,
            calibration,
            link,
            tracker,
            journal,
            bus: Bus::new(),
            seen_ids: HashSet::new(),
            commands_sent: 0,
            channel_hint: None,
            opening: LinkEvent::new(now, EventBody::Session(session)),
        };
        let opening = station.opening.clone();
        station.publish(opening, true)?;
        Ok(station)
    }

    pub fn config(&self) -> &StationConfig {
        &self.config
    }

    pub fn link(&self) -> &LinkConfig {
        &self.link
    }

    pub fn tracker(&self) -> &Tracker {
        &self.tracker
    }

    pub fn state(&self) -> &StationState {
        &self.state
    }

    pub fn snapshot(&self) -> StationSnapshot {
        self.state.snapshot()
    }

    pub fn journal_path(&self) -> Option<PathBuf> {
        self.journal.as_ref().map(|j| j.path().to_path_buf())
    }

    /// Every later event, preceded by the session opener and the current
    /// gimbal state.
    pub fn subscribe(&mut self) -> Receiver<LinkEvent> {
        let now = self.state.last_event_time.unwrap_or(self.opening.time);
        let gimbal = LinkEvent::new(now, EventBody::Gimbal(GimbalBody::from(self.tracker.state())));
        self.bus.subscribe_with(&[self.opening.clone(), gimbal])
    }

    pub fn subscribe_topics(&mut self, topics: &[Topic]) -> Receiver<LinkEvent> {
        self.bus.subscribe_topics(topics)
    }

    /// Geometry for commands sent to the portable, normally kept current by
    /// whoever knows the truth (the simulator). Without it the station uses
    /// its own estimate.
    pub fn set_link_channel(&mut self, ch: ChannelState) {
        self.channel_hint = Some(ch);
    }

    fn publish(&mut self, e: LinkEvent, durable: bool) -> Result<(), StationError> {
        if let Some(j) = self.journal.as_mut() {
            j.append(&e, durable)?;
        }
        self.state.apply(&e);
        self.bus.publish(&e);
        Ok(())
    }

    pub fn flush_journal(&mut self) -> Result<(), StationError> {
        if let Some(j) = self.journal.as_mut() {
            j.sync()?;
        }
        Ok(())
    }

    fn publish_gimbal(&mut self, now: DateTime<Utc>) -> Result<(), StationError> {
        let body = GimbalBody::from(self.tracker.state());
        self.publish(LinkEvent::new(now, EventBody::Gimbal(body)), false)
    }

    pub fn ingest_telemetry(&mut self, line: &str, now: DateTime<Utc>) -> Result<Ingest, StationError> {
        let line = line.trim_end_matches(['\r', '\n']);
        let checked = parse_nmea(line)
            .map_err(|e| match e {
                NmeaError::ChecksumMismatch { .. } => (RejectionReason::Checksum, e.to_string()),
                NmeaError::MalformedSentence(_) => (RejectionReason::Malformed, e.to_string()),
            })
            .and_then(|s| {
                validate_fix(&s).map_err(|e| match e {
                    FixError::NoFix => (RejectionReason::NoFix, e.to_string()),
                    _ => (RejectionReason::InvalidField, e.to_string()),
                })
            });
        match checked {
            Ok(fix) => {
                let rec = TelemetryRecord {
                    seq: self.state.next_seq,
                    fix,
                    raw_nmea: line.to_string(),
                    pressure_hpa: self.state.pressure_hpa,
                    received_at: now,
                };
                self.publish(LinkEvent::new(now, EventBody::Telemetry(rec.clone())), false)?;
                Ok(Ingest::Accepted(rec))
            }
            Err((reason, detail)) => {
                let body = RejectionBody {
                    reason,
                    line: line.to_string(),
                    detail,
                };
                self.publish(LinkEvent::new(now, EventBody::Rejection(body)), false)?;
                Ok(Ingest::Rejected(reason))
            }
        }
    }

    /// Counts one portable transmission towards the link statistics.
    pub fn record_transmission(
        &mut self,
        delivered: bool,
        latency_s: Option<f64>,
        now: DateTime<Utc>,
    ) -> Result<LinkStats, StationError> {
        let latency_ms = latency_s.map(|l| l * 1e3);
        let stats = self.state.next_stats(delivered, latency_ms);
        let body = StatsBody {
            stats: stats.clone(),
            last_delivered: delivered,
            last_latency_ms: latency_ms.filter(|_| delivered),
        };
        self.publish(LinkEvent::new(now, EventBody::Stats(body)), false)?;
        Ok(stats)
    }

    pub fn sensor_feed_attach<I>(&mut self, readings: I) -> Result<usize, StationError>
    where
        I: IntoIterator<Item = SensorReading>,
    {
        let mut n = 0;
        for r in readings {
            let (time, body) = match r {
                SensorReading::Gps { time, position } => (
                    time,
                    SensorBody {
                        source: SensorSource::Gps,
                        position: Some(position),
                        pressure_hpa: None,
                    },
                ),
                SensorReading::Barometric { time, pressure_hpa } => (
                    time,
                    SensorBody {
                        source: SensorSource::Barometric,
                        position: None,
                        pressure_hpa: Some(pressure_hpa),
                    },
                ),
            };
            self.publish(LinkEvent::new(time, EventBody::Sensor(body)), false)?;
            n += 1;
        }
        Ok(n)
    }

    /// Advances the tracker one tick and publishes the new gimbal state.
    pub fn tick(&mut self, now: DateTime<Utc>, dt: f64) -> Result<TickOutput, StationError> {
        let est = self.state.estimate;
        let out = self.tracker.tick(est.as_ref(), now, dt, self.state.fix_interval_s);
        self.publish_gimbal(now)?;
        if let Some(direction) = out.sweep_completed {
            let body = SweepBody {
                direction,
                az: out.state.azimuth_deg,
                reference_error: out.state.reference_error_deg,
            };
            self.publish(LinkEvent::new(now, EventBody::SweepComplete(body)), false)?;
        }
        Ok(out)
    }

    fn default_channel(&self) -> ChannelState {
        match &self.state.estimate {
            Some(e) => ChannelState {
                distance_m: e.distance_m,
                tx_off_boresight_deg: pointing_error(self.tracker.state(), e.bearing_deg),
                rx_off_boresight_deg: 0.0,
                rng_seed: 0,
            },
            None => ChannelState::at_distance(0.0),
        }
    }

    /// Sends a command frame and waits for the portable's ack frame, both
    /// through the link model. Returns the round trip when both arrive.
    fn exchange_over_link(&mut self, c: &Command) -> Option<f64> {
        let mut ch = self.channel_hint.unwrap_or_else(|| self.default_channel());
        let base_seed = mix(self.config.seed ^ mix(self.commands_sent));
        self.commands_sent += 1;
        let frames = [command_wire_frame(c).len(), ack_wire_frame(&c.id).len()];
        for (f, &len) in frames.iter().enumerate() {
            let chunk = self.link.mode.max_packet_bytes.unwrap_or(len).min(len);
            for k in 0..bench::packet_count(&self.link, len) {
                ch.rng_seed = mix(base_seed ^ mix(((f as u64) << 32) | k as u64));
                if !linkmodel::packet_outcome(&self.link, &ch, chunk).is_delivered() {
                    return None;
                }
            }
        }
        Some(command_round_trip(&self.link, c))
    }

    fn run_bench(&self, kind: BenchKind) -> (AckStatus, String) {
        let mut radio = RadioLink::new(self.link.clone());
        match kind {
            BenchKind::Throughput => match bench::run_throughput_test(
                &mut radio,
                "station",
                bench::reference_payload(),
                &bench::START_MARKER,
                &bench::END_MARKER,
            ) {
                Ok(r) if r.passed => (AckStatus::Ok, format!("{:.6} s, passed", r.duration_s)),
                Ok(r) => (AckStatus::Failed, r.failure.unwrap_or_default()),
                Err(e) => (AckStatus::Failed, e.to_string()),
            },
            BenchKind::Latency => {
                match bench::run_latency_test(&mut radio, "station", LatencyOptions::default()) {
                    Ok(r) => match r.avg_ms {
                        Some(avg) => (AckStatus::Ok, format!("avg {avg:.4} ms")),
                        None => (AckStatus::Failed, "no valid echoes".into()),
                    },
                    Err(e) => (AckStatus::Failed, e.to_string()),
                }
            }
            BenchKind::Range => {
                let s = RangeScenario::straight_walk(
                    "station",
                    self.state.base_position,
                    0.0,
                    100.0,
                    self.link.clone(),
                );
                let furthest = bench::run_range_scenario(&s).ok().and_then(|logs| {
                    let m = bench::match_transmissions(&logs.sent_log, &logs.received_log);
                    bench::furthest_success_distance(&m, &s.base_position).ok()
                });
                match furthest {
                    Some(d) => (AckStatus::Ok, format!("furthest {d:.2} m")),
                    None => (AckStatus::Failed, "no successful transmissions".into()),
                }
            }
        }
    }

    /// Accepts a command, routes it, and publishes exactly one ack.
    pub fn handle_command(&mut self, c: Command, now: DateTime<Utc>) -> Result<Ack, StationError> {
        if self.seen_ids.contains(&c.id) {
            return Err(StationError::DuplicateCommand(c.id));
        }
        gateway::validate_kind(&c.kind).map_err(|(field, reason)| StationError::InvalidCommand {
            field: field.to_string(),
            reason,
        })?;
        self.seen_ids.insert(c.id.clone());
        self.publish(
            LinkEvent::new(
                c.issued_at,
                EventBody::Command(CommandBody {
                    id: c.id.clone(),
                    kind: c.kind.clone(),
                }),
            ),
            false,
        )?;

        let (status, latency_s, detail) = match &c.kind {
            CommandKind::ManualPoint { az, el } => {
                self.tracker.set_manual(ServoCommand::new(*az, *el, now));
                self.publish_gimbal(now)?;
                (AckStatus::Ok, 0.0, None)
            }
            CommandKind::StartSweep => {
                self.tracker.start_sweep();
                self.publish_gimbal(now)?;
                (AckStatus::Ok, 0.0, None)
            }
            CommandKind::ResumeTracking => {
                self.tracker.resume_tracking();
                self.publish_gimbal(now)?;
                (AckStatus::Ok, 0.0, None)
            }
            CommandKind::StartBench { bench } => {
                let (status, detail) = self.run_bench(*bench);
                (status, 0.0, Some(detail))
            }
            CommandKind::SetFixInterval { .. } => match self.exchange_over_link(&c) {
                Some(rtt) => (AckStatus::Ok, rtt, None),
                None => (AckStatus::Undelivered, command_timeout(&self.link), None),
            },
            CommandKind::SetRadioMode { mode, baud } => {
                let spec = LinkSpec {
                    mode: *mode,
                    baud: *baud,
                    ..self.config.link.clone()
                };
                match self.calibration.link_config(&spec) {
                    Err(e) => (AckStatus::Failed, 0.0, Some(e.to_string())),
                    Ok(next) => match self.exchange_over_link(&c) {
                        Some(rtt) => {
                            self.link = next;
                            self.config.link = spec;
                            (AckStatus::Ok, rtt, None)
                        }
                        None => (AckStatus::Undelivered, command_timeout(&self.link), None),
                    },
                }
            }
        };
        let ack = Ack {
            id: c.id.clone(),
            status,
            latency_s,
            detail,
        };
        self.publish(
            LinkEvent::new(now + seconds(latency_s), EventBody::Ack(ack.clone())),
            true,
        )?;
        Ok(ack)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{destination, format_gga};
    use chrono::TimeZone;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 5, 1, 10, 0, 0).unwrap()
    }

    fn station() -> Station {
        Station::new(StationConfig::default(), Calibration::embedded(), None, t0()).unwrap()
    }

    fn line_at(s: &Station, bearing: f64, dist: f64) -> String {
        let p = destination(&s.snapshot().base_position, bearing, dist);
        format_gga(&p, &t0(), 1).raw().to_string()
    }

    fn cmd(id: &str, kind: CommandKind) -> Command {
        Command {
            id: id.into(),
            issued_at: t0(),
            kind,
        }
    }

    #[test]
    fn fresh_snapshot() {
        let s = station().snapshot();
        assert!(s.telemetry.is_empty());
        assert_eq!(s.gimbal.mode, crate::tracker::GimbalMode::Idle);
        assert_eq!((s.stats.sent, s.stats.delivered, s.stats.lost), (0, 0, 0));
        assert_eq!(s.pressure_hpa, None);
        assert_eq!(s.rejections, RejectionCounts::default());
    }

    #[test]
    fn ingest_and_reject() {
        let mut st = station();
        let good = line_at(&st, 90.0, 40.0);
        assert!(matches!(st.ingest_telemetry(&good, t0()).unwrap(), Ingest::Accepted(r) if r.seq == 1));
        let est = st.snapshot().estimate.unwrap();
        assert!((est.bearing_deg - 90.0).abs() < 0.01);

        let mut bad = good.clone();
        bad.replace_range(bad.len() - 2.., "00");
        assert_eq!(
            st.ingest_telemetry(&bad, t0()).unwrap(),
            Ingest::Rejected(RejectionReason::Checksum)
        );
        let p = destination(&st.snapshot().base_position, 10.0, 5.0);
        let nofix = format_gga(&p, &t0(), 0).raw().to_string();
        assert_eq!(
            st.ingest_telemetry(&nofix, t0()).unwrap(),
            Ingest::Rejected(RejectionReason::NoFix)
        );
        let snap = st.snapshot();
        assert_eq!(snap.estimate.unwrap(), est);
        assert_eq!((snap.rejections.checksum, snap.rejections.no_fix), (1, 1));
        assert_eq!(snap.telemetry.len(), 1);
    }

    #[test]
    fn success_ratio_arithmetic() {
        let mut st = station();
        for i in 0..10 {
            st.record_transmission(i < 7, Some(0.05), t0()).unwrap();
        }
        let s = st.snapshot();
        assert_eq!(s.stats.success_ratio, Some(0.7));
        assert_eq!((s.stats.sent, s.stats.delivered, s.stats.lost), (10, 7, 3));
        assert!((s.stats.avg_latency_ms.unwrap() - 50.0).abs() < 1e-9);
        assert_eq!(st.snapshot(), s);
    }

    #[test]
    fn manual_point_and_duplicates() {
        let mut st = station();
        let ack = st
            .handle_command(cmd("c1", CommandKind::ManualPoint { az: 90.0, el: 0.0 }), t0())
            .unwrap();
        assert_eq!(ack.status, AckStatus::Ok);
        assert_eq!(st.snapshot().gimbal.mode, crate::tracker::GimbalMode::Manual);
        let dup = st.handle_command(cmd("c1", CommandKind::StartSweep), t0());
        assert!(matches!(dup, Err(StationError::DuplicateCommand(_))));
        let snap = st.snapshot();
        assert_eq!((snap.commands_accepted, snap.acks), (1, 1));
        assert!(snap.pending_commands.is_empty());
    }

    #[test]
    fn out_of_range_link_command_is_undelivered() {
        let mut st = station();
        st.set_link_channel(ChannelState::at_distance(1_000.0));
        let ack = st
            .handle_command(cmd("f", CommandKind::SetFixInterval { seconds: 2.0 }), t0())
            .unwrap();
        assert_eq!(ack.status, AckStatus::Undelivered);
        assert!((ack.latency_s - command_timeout(st.link())).abs() < 1e-12);
        assert_eq!(st.snapshot().fix_interval_s, 5.0);

        st.set_link_channel(ChannelState::at_distance(10.0));
        let ack = st
            .handle_command(cmd("g", CommandKind::SetFixInterval { seconds: 2.0 }), t0())
            .unwrap();
        assert_eq!(ack.status, AckStatus::Ok);
        assert_eq!(st.snapshot().fix_interval_s, 2.0);
    }

    #[test]
    fn radio_mode_switch_changes_link() {
        let mut st = station();
        let ack = st
            .handle_command(
                cmd("m", CommandKind::SetRadioMode { mode: ModeName::Fu4, baud: 1200 }),
                t0(),
            )
            .unwrap();
        assert_eq!(ack.status, AckStatus::Ok);
        assert_eq!(st.link().mode.name, ModeName::Fu4);
        assert_eq!(st.snapshot().radio_mode, ModeName::Fu4);
    }

    #[test]
    fn invalid_parameters_rejected_before_acceptance() {
        let mut st = station();
        let r = st.handle_command(cmd("x", CommandKind::ManualPoint { az: 400.0, el: 0.0 }), t0());
        assert!(matches!(r, Err(StationError::InvalidCommand { .. })));
        assert_eq!(st.snapshot().commands_accepted, 0);
    }

    #[test]
    fn sensors_merge() {
        let mut st = station();
        assert_eq!(st.snapshot().pressure_hpa, None);
        let good = line_at(&st, 0.0, 50.0);
        st.ingest_telemetry(&good, t0()).unwrap();
        let before = st.snapshot().estimate.unwrap().bearing_deg;
        let moved = destination(&st.snapshot().base_position, 90.0, 50.0);
        st.sensor_feed_attach([
            SensorReading::Barometric {
                time: t0(),
                pressure_hpa: 1013.25,
            },
            SensorReading::Gps {
                time: t0(),
                position: moved,
            },
        ])
        .unwrap();
        let snap = st.snapshot();
        assert_eq!(snap.pressure_hpa, Some(1013.25));
        assert_eq!(snap.base_position, moved);
        let after = snap.estimate.unwrap().bearing_deg;
        assert!((before - 0.0).abs() < 0.01 && (after - 315.0).abs() < 0.5, "{after}");
    }

    #[test]
    fn bench_command_reports() {
        let mut st = station();
        let ack = st
            .handle_command(
                cmd("b", CommandKind::StartBench { bench: BenchKind::Latency }),
                t0(),
            )
            .unwrap();
        assert_eq!(ack.status, AckStatus::Ok);
        assert!(ack.detail.unwrap().starts_with("avg"));
    }
}
