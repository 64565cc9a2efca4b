//! Deterministic model of an HC-12 class point-to-point radio link.
//!
//! Timing follows the slower of the UART and the air interface plus a
//! calibrated per-row overhead. Range follows a log-distance model anchored
//! to stub-antenna measurements, scaled by antenna gains.

mod antenna;
mod calibration;

pub use antenna::{antenna_gain, AntennaKind, AntennaPattern};
pub use calibration::{
    Calibration, CalibrationError, LinkSpec, OutcomeSpec, DATA_DIR_ENV,
};

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// UART rates the module accepts.
pub const SUPPORTED_BAUDS: [u32; 6] = [1200, 2400, 4800, 9600, 38400, 115200];

/// 8N1 framing: start bit, eight data bits, stop bit.
pub const BITS_PER_UART_BYTE: f64 = 10.0;

/// Slack on the deterministic range comparison so geodesic round-off at the
/// boundary does not flip an outcome.
const RANGE_EPSILON_M: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkError {
    #[error("unsupported UART baud {0}")]
    UnsupportedBaud(u32),
    #[error("negative overhead {0}")]
    NegativeOverhead(f64),
    #[error("invalid link parameter: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModeName {
    #[serde(rename = "FU1")]
    Fu1,
    #[serde(rename = "FU2")]
    Fu2,
    #[serde(rename = "FU3")]
    Fu3,
    #[serde(rename = "FU4")]
    Fu4,
}

impl ModeName {
    pub const ALL: [ModeName; 4] = [ModeName::Fu1, ModeName::Fu2, ModeName::Fu3, ModeName::Fu4];

    pub fn as_str(self) -> &'static str {
        match self {
            ModeName::Fu1 => "FU1",
            ModeName::Fu2 => "FU2",
            ModeName::Fu3 => "FU3",
            ModeName::Fu4 => "FU4",
        }
    }
}

impl fmt::Display for ModeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModeName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "FU1" => Ok(ModeName::Fu1),
            "FU2" => Ok(ModeName::Fu2),
            "FU3" => Ok(ModeName::Fu3),
            "FU4" => Ok(ModeName::Fu4),
            _ => Err(format!("unknown radio mode {s:?}")),
        }
    }
}

/// How the over-the-air payload rate is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AirRateRule {
    /// Fixed payload rate in bytes/s regardless of UART baud.
    Fixed(f64),
    /// Air rate tracks the UART, so the UART is always the bottleneck.
    ScalesWithUart,
    /// Payload rate in bytes/s back-solved from throughput measurements.
    Calibrated(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioMode {
    pub name: ModeName,
    /// `None` means no packet size limit.
    pub max_packet_bytes: Option<usize>,
    pub min_packet_gap_s: f64,
    pub air_rate: AirRateRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeModel {
    /// Delivered iff the distance is within the effective range.
    Deterministic,
    /// Logistic success probability in `(range - distance) / steepness_m`.
    Stochastic { steepness_m: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub mode: RadioMode,
    pub uart_baud: u32,
    pub tx_antenna: AntennaPattern,
    pub rx_antenna: AntennaPattern,
    /// Module processing delay per direction for a short frame.
    pub per_direction_overhead_s: f64,
    /// Fixed cost added to a bulk transfer.
    pub transfer_overhead_s: f64,
    pub buffer_capacity_bytes: usize,
    /// Stub-to-stub range for this mode and baud.
    pub range_base_m: f64,
    /// Antenna gain sum at which `range_base_m` applies.
    pub reference_gain_dbi: f64,
    pub path_loss_exponent: f64,
    pub outcome: OutcomeModel,
}

impl LinkConfig {
    pub fn validate(&self) -> Result<(), LinkError> {
        if !SUPPORTED_BAUDS.contains(&self.uart_baud) {
            return Err(LinkError::UnsupportedBaud(self.uart_baud));
        }
        for o in [self.per_direction_overhead_s, self.transfer_overhead_s] {
            if !(o >= 0.0) {
                return Err(LinkError::NegativeOverhead(o));
            }
        }
        if !(self.path_loss_exponent > 0.0) {
            return Err(LinkError::Invalid("path loss exponent must be positive".into()));
        }
        if !(self.range_base_m > 0.0) {
            return Err(LinkError::Invalid("range base must be positive".into()));
        }
        if let OutcomeModel::Stochastic { steepness_m } = self.outcome {
            if !(steepness_m > 0.0) {
                return Err(LinkError::Invalid("steepness must be positive".into()));
            }
        }
        if let Some(max) = self.mode.max_packet_bytes {
            if self.buffer_capacity_bytes < max {
                log::debug!(
                    "buffer of {} bytes is smaller than a {} packet",
                    self.buffer_capacity_bytes,
                    self.mode.name
                );
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!("{}@{}", self.mode.name, self.uart_baud)
    }
}

/// Geometry of one transmission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub distance_m: f64,
    pub tx_off_boresight_deg: f64,
    pub rx_off_boresight_deg: f64,
    pub rng_seed: u64,
}

impl ChannelState {
    pub fn at_distance(distance_m: f64) -> Self {
        ChannelState {
            distance_m,
            tx_off_boresight_deg: 0.0,
            rx_off_boresight_deg: 0.0,
            rng_seed: 0,
        }
    }
}

/// How the sender feeds bytes into the module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pacing {
    /// Back-to-back at the UART rate.
    Continuous,
    /// Bursts of `burst_bytes` separated by `gap_s` of idle UART.
    Paced { burst_bytes: usize, gap_s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferResult {
    pub duration_s: f64,
    pub bytes_lost: usize,
    pub overflowed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossCause {
    OutOfRange,
    OversizePacket,
    Fading,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacketOutcome {
    Delivered,
    Lost(LossCause),
}

impl PacketOutcome {
    pub fn is_delivered(self) -> bool {
        matches!(self, PacketOutcome::Delivered)
    }
}

pub fn uart_transfer_time(n_bytes: usize, uart_baud: u32) -> f64 {
    n_bytes as f64 * BITS_PER_UART_BYTE / uart_baud as f64
}

/// Over-the-air payload rate in bytes/s.
pub fn air_payload_rate(mode: &RadioMode, uart_baud: u32) -> f64 {
    match mode.air_rate {
        AirRateRule::Fixed(r) | AirRateRule::Calibrated(r) => r,
        AirRateRule::ScalesWithUart => uart_baud as f64 / BITS_PER_UART_BYTE,
    }
}

/// Per-byte schedule of a transfer through the module's input buffer.
///
/// Byte `k` is fully clocked in at its UART arrival time. It leaves once it
/// has arrived and one air slot (`1 / air_rate`) after its predecessor left.
/// A byte arriving while the buffer holds `buffer_capacity_bytes` undeparted
/// bytes is dropped.
#[derive(Debug, Clone)]
pub(crate) struct TransferSchedule {
    /// Departure time for every accepted byte, `None` for dropped bytes.
    pub departures: Vec<Option<f64>>,
    pub last_departure_s: f64,
    pub bytes_lost: usize,
}

pub(crate) fn schedule_transfer(cfg: &LinkConfig, n_bytes: usize, pacing: Pacing) -> TransferSchedule {
    let byte_time = BITS_PER_UART_BYTE / cfg.uart_baud as f64;
    let air_slot = 1.0 / air_payload_rate(&cfg.mode, cfg.uart_baud);
    let capacity = cfg.buffer_capacity_bytes.max(1);

    let (burst, gap) = match pacing {
        Pacing::Continuous => (n_bytes.max(1), 0.0),
        Pacing::Paced { burst_bytes, gap_s } => (burst_bytes.max(1), gap_s.max(0.0)),
    };

    let mut in_buffer: VecDeque<f64> = VecDeque::new();
    let mut departures = Vec::with_capacity(n_bytes);
    let mut last_departure: f64 = 0.0;
    let mut lost = 0;
    for k in 0..n_bytes {
        let clock = (k + 1) as f64 * byte_time + (k / burst) as f64 * gap;
        while in_buffer.front().is_some_and(|&d| d <= clock) {
            in_buffer.pop_front();
        }
        if in_buffer.len() >= capacity {
            lost += 1;
            departures.push(None);
            continue;
        }
        let departs = clock.max(last_departure + air_slot);
        last_departure = departs;
        in_buffer.push_back(departs);
        departures.push(Some(departs));
    }
    TransferSchedule {
        departures,
        last_departure_s: last_departure,
        bytes_lost: lost,
    }
}

/// Time to push `n_bytes` through the link and how much of it survived.
///
/// The duration is the departure of the last accepted byte plus the
/// calibrated transfer overhead, which makes it the larger of the UART time
/// and the air time.
pub fn simulate_transfer(cfg: &LinkConfig, n_bytes: usize, pacing: Pacing) -> TransferResult {
    if n_bytes == 0 {
        return TransferResult {
            duration_s: 0.0,
            bytes_lost: 0,
            overflowed: false,
        };
    }
    let s = schedule_transfer(cfg, n_bytes, pacing);
    TransferResult {
        duration_s: s.last_departure_s + cfg.transfer_overhead_s,
        bytes_lost: s.bytes_lost,
        overflowed: s.bytes_lost > 0,
    }
}

/// One-way latency of an `n_bytes` frame: UART in, air, module overhead.
pub fn one_way_latency(cfg: &LinkConfig, n_bytes: usize) -> f64 {
    let bits = n_bytes as f64 * BITS_PER_UART_BYTE;
    bits / cfg.uart_baud as f64
        + bits / (8.0 * air_payload_rate(&cfg.mode, cfg.uart_baud))
        + cfg.per_direction_overhead_s
}

/// Round trip of a 1-byte echo.
pub fn round_trip_latency(cfg: &LinkConfig) -> f64 {
    2.0 * one_way_latency(cfg, 1)
}

/// Round trip of a 1-byte echo over a plain wire at `uart_baud`.
pub fn wired_round_trip(uart_baud: u32) -> f64 {
    2.0 * uart_transfer_time(1, uart_baud)
}

/// Maximum range in metres given both antennas' off-boresight angles.
pub fn effective_max_range(cfg: &LinkConfig, tx_angle_deg: f64, rx_angle_deg: f64) -> f64 {
    let gain = antenna_gain(&cfg.tx_antenna, tx_angle_deg) + antenna_gain(&cfg.rx_antenna, rx_angle_deg);
    cfg.range_base_m
        * 10f64.powf((gain - cfg.reference_gain_dbi) / (10.0 * cfg.path_loss_exponent))
}

/// Logistic delivery probability for the stochastic model.
pub fn delivery_probability(range_m: f64, distance_m: f64, steepness_m: f64) -> f64 {
    1.0 / (1.0 + (-(range_m - distance_m) / steepness_m).exp())
}

/// Fate of a single packet. Pure in `(cfg, ch, n_bytes)`.
pub fn packet_outcome(cfg: &LinkConfig, ch: &ChannelState, n_bytes: usize) -> PacketOutcome {
    if cfg.mode.max_packet_bytes.is_some_and(|max| n_bytes > max) {
        return PacketOutcome::Lost(LossCause::OversizePacket);
    }
    if ch.distance_m <= 0.0 {
        return PacketOutcome::Delivered;
    }
    let range = effective_max_range(cfg, ch.tx_off_boresight_deg, ch.rx_off_boresight_deg);
    match cfg.outcome {
        OutcomeModel::Deterministic => {
            if ch.distance_m <= range + RANGE_EPSILON_M {
                PacketOutcome::Delivered
            } else {
                PacketOutcome::Lost(LossCause::OutOfRange)
            }
        }
        OutcomeModel::Stochastic { steepness_m } => {
            let p = delivery_probability(range, ch.distance_m, steepness_m);
            let draw: f64 = ChaCha8Rng::seed_from_u64(ch.rng_seed).gen();
            if draw < p {
                PacketOutcome::Delivered
            } else {
                PacketOutcome::Lost(LossCause::Fading)
            }
        }
    }
}
