use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::geo::GeoPoint;
use crate::linkmodel::ModeName;
use crate::tracker::{GimbalMode, GimbalState, SweepDirection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topic {
    Session,
    Telemetry,
    Gimbal,
    Command,
    Ack,
    Stats,
    SweepComplete,
    Rejection,
    Sensor,
}

impl Topic {
    pub const ALL: [Topic; 9] = [
        Topic::Session,
        Topic::Telemetry,
        Topic::Gimbal,
        Topic::Command,
        Topic::Ack,
        Topic::Stats,
        Topic::SweepComplete,
        Topic::Rejection,
        Topic::Sensor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Topic::Session => "session",
            Topic::Telemetry => "telemetry",
            Topic::Gimbal => "gimbal",
            Topic::Command => "command",
            Topic::Ack => "ack",
            Topic::Stats => "stats",
            Topic::SweepComplete => "sweep_complete",
            Topic::Rejection => "rejection",
            Topic::Sensor => "sensor",
        }
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub seq: u64,
    pub fix: GeoPoint,
    pub raw_nmea: String,
    pub pressure_hpa: Option<f64>,
    pub received_at: DateTime<Utc>,
}

/// Gimbal state as it crosses the gateway.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GimbalBody {
    pub az: f64,
    pub el: f64,
    pub mode: GimbalMode,
    pub max_az_rate: f64,
    pub max_el_rate: f64,
    pub sweep_progress: f64,
    pub reference_error: f64,
}

impl From<&GimbalState> for GimbalBody {
    fn from(s: &GimbalState) -> Self {
        GimbalBody {
            az: s.azimuth_deg,
            el: s.elevation_deg,
            mode: s.mode,
            max_az_rate: s.max_az_rate_deg_s,
            max_el_rate: s.max_el_rate_deg_s,
            sweep_progress: s.sweep_progress_deg,
            reference_error: s.reference_error_deg,
        }
    }
}

impl From<&GimbalBody> for GimbalState {
    fn from(b: &GimbalBody) -> Self {
        GimbalState {
            azimuth_deg: b.az,
            elevation_deg: b.el,
            max_az_rate_deg_s: b.max_az_rate,
            max_el_rate_deg_s: b.max_el_rate,
            mode: b.mode,
            sweep_progress_deg: b.sweep_progress,
            reference_error_deg: b.reference_error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchKind {
    Throughput,
    Latency,
    Range,
}

impl BenchKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BenchKind::Throughput => "throughput",
            BenchKind::Latency => "latency",
            BenchKind::Range => "range",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CommandKind {
    SetRadioMode { mode: ModeName, baud: u32 },
    SetFixInterval { seconds: f64 },
    ManualPoint { az: f64, el: f64 },
    StartSweep,
    ResumeTracking,
    StartBench { bench: BenchKind },
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::SetRadioMode { .. } => "set_radio_mode",
            CommandKind::SetFixInterval { .. } => "set_fix_interval",
            CommandKind::ManualPoint { .. } => "manual_point",
            CommandKind::StartSweep => "start_sweep",
            CommandKind::ResumeTracking => "resume_tracking",
            CommandKind::StartBench { .. } => "start_bench",
        }
    }

    /// Commands the portable must receive over the radio.
    pub fn travels_over_link(&self) -> bool {
        matches!(
            self,
            CommandKind::SetRadioMode { .. } | CommandKind::SetFixInterval { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub id: String,
    pub issued_at: DateTime<Utc>,
    pub kind: CommandKind,
}

/// The command as it appears in a frame body; `issued_at` is the frame time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandBody {
    pub id: String,
    #[serde(flatten)]
    pub kind: CommandKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AckStatus {
    Ok,
    Undelivered,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub id: String,
    pub status: AckStatus,
    /// Issue-to-ack time: the modeled link round trip, or the timeout.
    pub latency_s: f64,
    pub detail: Option<String>,
}

/// Link counters after a transmission.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkStats {
    pub sent: u64,
    pub delivered: u64,
    pub lost: u64,
    pub success_ratio: Option<f64>,
    pub rolling_success_ratio: Option<f64>,
    pub avg_latency_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsBody {
    #[serde(flatten)]
    pub stats: LinkStats,
    pub last_delivered: bool,
    pub last_latency_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepBody {
    pub direction: SweepDirection,
    pub az: f64,
    pub reference_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionReason {
    /// Intact framing, wrong checksum: damaged in flight.
    Checksum,
    Malformed,
    /// The GPS itself reported no fix.
    NoFix,
    InvalidField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionBody {
    pub reason: RejectionReason,
    pub line: String,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorSource {
    Gps,
    Barometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorBody {
    pub source: SensorSource,
    pub position: Option<GeoPoint>,
    pub pressure_hpa: Option<f64>,
}

/// Opening record of every session; replay starts from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionBody {
    pub session_id: String,
    pub base_position: GeoPoint,
    pub radio_mode: ModeName,
    pub baud: u32,
    pub fix_interval_s: f64,
    pub telemetry_window: usize,
    pub gimbal: GimbalBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "body", rename_all = "snake_case")]
pub enum EventBody {
    Session(SessionBody),
    Telemetry(TelemetryRecord),
    Gimbal(GimbalBody),
    Command(CommandBody),
    Ack(Ack),
    Stats(StatsBody),
    SweepComplete(SweepBody),
    Rejection(RejectionBody),
    Sensor(SensorBody),
}

impl EventBody {
    pub fn topic(&self) -> Topic {
        match self {
            EventBody::Session(_) => Topic::Session,
            EventBody::Telemetry(_) => Topic::Telemetry,
            EventBody::Gimbal(_) => Topic::Gimbal,
            EventBody::Command(_) => Topic::Command,
            EventBody::Ack(_) => Topic::Ack,
            EventBody::Stats(_) => Topic::Stats,
            EventBody::SweepComplete(_) => Topic::SweepComplete,
            EventBody::Rejection(_) => Topic::Rejection,
            EventBody::Sensor(_) => Topic::Sensor,
        }
    }
}

/// A timestamped bus event. Serialises as `{"type", "time", "body"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkEvent {
    #[serde(flatten)]
    pub body: EventBody,
    pub time: DateTime<Utc>,
}

impl LinkEvent {
    pub fn new(time: DateTime<Utc>, body: EventBody) -> Self {
        LinkEvent { body, time }
    }

    pub fn topic(&self) -> Topic {
        self.body.topic()
    }

    pub fn command(c: &Command) -> Self {
        LinkEvent::new(
            c.issued_at,
            EventBody::Command(CommandBody {
                id: c.id.clone(),
                kind: c.kind.clone(),
            }),
        )
    }
}
