use std::collections::{BTreeMap, VecDeque};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::events::{
    AckStatus, CommandKind, EventBody, GimbalBody, LinkEvent, LinkStats, RejectionReason,
    SessionBody, TelemetryRecord,
};
use crate::geo::GeoPoint;
use crate::linkmodel::ModeName;
use crate::tracker::{update_estimate, TargetEstimate};

pub const TELEMETRY_WINDOW: usize = 500;
pub const ROLLING_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionCounts {
    pub checksum: u64,
    pub malformed: u64,
    pub no_fix: u64,
    pub invalid_field: u64,
}

impl RejectionCounts {
    fn bump(&mut self, r: RejectionReason) {
        match r {
            RejectionReason::Checksum => self.checksum += 1,
            RejectionReason::Malformed => self.malformed += 1,
            RejectionReason::NoFix => self.no_fix += 1,
            RejectionReason::InvalidField => self.invalid_field += 1,
        }
    }
}

/// Immutable view of the station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationSnapshot {
    pub session_id: String,
    pub base_position: GeoPoint,
    pub pressure_hpa: Option<f64>,
    pub gimbal: GimbalBody,
    pub estimate: Option<TargetEstimate>,
    pub telemetry: Vec<TelemetryRecord>,
    pub stats: LinkStats,
    pub radio_mode: ModeName,
    pub baud: u32,
    pub fix_interval_s: f64,
    pub rejections: RejectionCounts,
    pub commands_accepted: u64,
    pub acks: u64,
    pub pending_commands: Vec<String>,
    pub sweeps_completed: u64,
    pub last_event_time: Option<DateTime<Utc>>,
}

/// Everything the station knows, as a left fold over its events.
#[derive(Debug, Clone, PartialEq)]
pub struct StationState {
    pub session: SessionBody,
    pub base_position: GeoPoint,
    pub pressure_hpa: Option<f64>,
    pub gimbal: GimbalBody,
    pub estimate: Option<TargetEstimate>,
    pub telemetry: VecDeque<TelemetryRecord>,
    pub next_seq: u64,
    pub stats: LinkStats,
    pub recent: VecDeque<bool>,
    latency_sum_ms: f64,
    latency_count: u64,
    pub radio_mode: ModeName,
    pub baud: u32,
    pub fix_interval_s: f64,
    pub rejections: RejectionCounts,
    pub commands_accepted: u64,
    pub acks: u64,
    pub pending: BTreeMap<String, CommandKind>,
    pub sweeps_completed: u64,
    pub last_event_time: Option<DateTime<Utc>>,
}

impl StationState {
    pub fn new(session: SessionBody) -> Self {
        StationState {
            base_position: session.base_position,
            pressure_hpa: None,
            gimbal: session.gimbal,
            estimate: None,
            telemetry: VecDeque::new(),
            next_seq: 1,
            stats: LinkStats::default(),
            recent: VecDeque::new(),
            latency_sum_ms: 0.0,
            latency_count: 0,
            radio_mode: session.radio_mode,
            baud: session.baud,
            fix_interval_s: session.fix_interval_s,
            rejections: RejectionCounts::default(),
            commands_accepted: 0,
            acks: 0,
            pending: BTreeMap::new(),
            sweeps_completed: 0,
            last_event_time: None,
            session,
        }
    }

    /// Counters after one more transmission.
    pub fn next_stats(&self, delivered: bool, latency_ms: Option<f64>) -> LinkStats {
        let sent = self.stats.sent + 1;
        let ok = self.stats.delivered + delivered as u64;
        let mut recent: Vec<bool> = self.recent.iter().copied().collect();
        recent.push(delivered);
        if recent.len() > ROLLING_WINDOW {
            recent.remove(0);
        }
        let rolling = recent.iter().filter(|&&d| d).count() as f64 / recent.len() as f64;
        let (sum, n) = match latency_ms.filter(|_| delivered) {
            Some(l) => (self.latency_sum_ms + l, self.latency_count + 1),
            None => (self.latency_sum_ms, self.latency_count),
        };
        LinkStats {
            sent,
            delivered: ok,
            lost: sent - ok,
            success_ratio: Some(ok as f64 / sent as f64),
            rolling_success_ratio: Some(rolling),
            avg_latency_ms: (n > 0).then(|| sum / n as f64),
        }
    }

    fn refresh_estimate(&mut self) {
        if let Some(est) = self.estimate {
            self.estimate = update_estimate(&self.base_position, &est.last_fix, est.received_at).ok();
        }
    }

    pub fn apply(&mut self, e: &LinkEvent) {
        self.last_event_time = Some(e.time);
        match &e.body {
            EventBody::Session(s) => *self = StationState::new(s.clone()),
            EventBody::Telemetry(rec) => {
                self.next_seq = rec.seq + 1;
                if let Ok(est) = update_estimate(&self.base_position, &rec.fix, rec.received_at) {
                    self.estimate = Some(est);
                }
                self.telemetry.push_back(rec.clone());
                while self.telemetry.len() > self.session.telemetry_window {
                    self.telemetry.pop_front();
                }
            }
            EventBody::Gimbal(g) => self.gimbal = *g,
            EventBody::Command(c) => {
                self.commands_accepted += 1;
                self.pending.insert(c.id.clone(), c.kind.clone());
            }
            EventBody::Ack(a) => {
                self.acks += 1;
                if let Some(kind) = self.pending.remove(&a.id) {
                    if a.status == AckStatus::Ok {
                        match kind {
                            CommandKind::SetFixInterval { seconds } => self.fix_interval_s = seconds,
                            CommandKind::SetRadioMode { mode, baud } => {
                                self.radio_mode = mode;
                                self.baud = baud;
                            }
                            _ => {}
                        }
                    }
                }
            }
            EventBody::Stats(s) => {
                self.recent.push_back(s.last_delivered);
                while self.recent.len() > ROLLING_WINDOW {
                    self.recent.pop_front();
                }
                if let (true, Some(l)) = (s.last_delivered, s.last_latency_ms) {
                    self.latency_sum_ms += l;
                    self.latency_count += 1;
                }
                self.stats = s.stats.clone();
            }
            EventBody::SweepComplete(_) => self.sweeps_completed += 1,
            EventBody::Rejection(r) => self.rejections.bump(r.reason),
            EventBody::Sensor(s) => {
                if let Some(p) = s.position {
                    self.base_position = p;
                    self.refresh_estimate();
                }
                if let Some(h) = s.pressure_hpa {
                    self.pressure_hpa = Some(h);
                }
            }
        }
    }

    pub fn snapshot(&self) -> StationSnapshot {
        StationSnapshot {
            session_id: self.session.session_id.clone(),
            base_position: self.base_position,
            pressure_hpa: self.pressure_hpa,
            gimbal: self.gimbal,
            estimate: self.estimate,
            telemetry: self.telemetry.iter().cloned().collect(),
            stats: self.stats.clone(),
            radio_mode: self.radio_mode,
            baud: self.baud,
            fix_interval_s: self.fix_interval_s,
            rejections: self.rejections,
            commands_accepted: self.commands_accepted,
            acks: self.acks,
            pending_commands: self.pending.keys().cloned().collect(),
            sweeps_completed: self.sweeps_completed,
            last_event_time: self.last_event_time,
        }
    }
}
