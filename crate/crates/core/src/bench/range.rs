use chrono::{DateTime, Duration, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::geo::{
    self, format_gga, format_rmc, haversine_distance, parse_nmea, validate_fix, GeoPoint,
    SentenceType,
};
use crate::linkmodel::{packet_outcome, ChannelState, LinkConfig};
use crate::tracker::shortest_delta;

pub const DEFAULT_FIX_INTERVAL_S: f64 = 5.0;
pub const DEFAULT_WALK_SPEED_M_S: f64 = 0.1;

/// Where the portable's antenna points while it walks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AntennaAim {
    /// Boresight always on the base.
    TowardsBase,
    /// Boresight held at a fixed azimuth.
    Fixed { azimuth_deg: f64 },
}

/// A walk with the portable unit. The portable end is the link's `tx`.
#[derive(Debug, Clone)]
pub struct RangeScenario {
    pub name: String,
    pub path: Vec<GeoPoint>,
    pub walk_speed_m_s: f64,
    pub fix_interval_s: f64,
    pub base_position: GeoPoint,
    pub link: LinkConfig,
    pub sentence_type: SentenceType,
    pub antenna_aim: AntennaAim,
    /// Fix indices at which the GPS reports no fix.
    pub gps_dropouts: Vec<usize>,
    pub seed: u64,
    pub start_time: DateTime<Utc>,
}

pub fn default_start_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 4, 18, 11, 0, 0).unwrap()
}

impl RangeScenario {
    /// Walk from the base along `bearing_deg` for `length_m`.
    pub fn straight_walk(
        name: &str,
        base: GeoPoint,
        bearing_deg: f64,
        length_m: f64,
        link: LinkConfig,
    ) -> Self {
        RangeScenario {
            name: name.to_string(),
            path: vec![base, geo::destination(&base, bearing_deg, length_m)],
            walk_speed_m_s: DEFAULT_WALK_SPEED_M_S,
            fix_interval_s: DEFAULT_FIX_INTERVAL_S,
            base_position: base,
            link,
            sentence_type: SentenceType::Gga,
            antenna_aim: AntennaAim::TowardsBase,
            gps_dropouts: Vec::new(),
            seed: 0,
            start_time: default_start_time(),
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.path.is_empty() {
            return Err(BenchError::InvalidScenario("path is empty".into()));
        }
        if !(self.fix_interval_s > 0.0) {
            return Err(BenchError::InvalidScenario("fix_interval_s must be positive".into()));
        }
        if self.path.len() > 1 && !(self.walk_speed_m_s > 0.0) {
            return Err(BenchError::InvalidScenario("walk_speed_m_s must be positive".into()));
        }
        self.link
            .validate()
            .map_err(|e| BenchError::InvalidScenario(e.to_string()))
    }

    /// True position and elapsed time of every fix instant. The walk's end
    /// point is always sampled.
    pub fn fix_positions(&self) -> Vec<(f64, GeoPoint)> {
        let legs: Vec<f64> = self
            .path
            .windows(2)
            .map(|w| haversine_distance(&w[0], &w[1]))
            .collect();
        let total: f64 = legs.iter().sum();
        if total <= 0.0 {
            return vec![(0.0, self.path[0])];
        }
        let step = self.walk_speed_m_s * self.fix_interval_s;
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let s = k as f64 * step;
            if s > total + 1e-9 {
                break;
            }
            out.push((k as f64 * self.fix_interval_s, self.point_at(&legs, s)));
            k += 1;
        }
        let last_s = (k - 1) as f64 * step;
        if total - last_s > 1e-6 {
            out.push((total / self.walk_speed_m_s, *self.path.last().unwrap()));
        }
        out
    }

    fn point_at(&self, legs: &[f64], s: f64) -> GeoPoint {
        let mut remaining = s;
        for (i, &len) in legs.iter().enumerate() {
            if remaining <= len || i == legs.len() - 1 {
                if len <= 0.0 {
                    return self.path[i + 1];
                }
                let f = (remaining / len).clamp(0.0, 1.0);
                return if f >= 1.0 {
                    self.path[i + 1]
                } else {
                    geo::intermediate(&self.path[i], &self.path[i + 1], f)
                };
            }
            remaining -= len;
        }
        *self.path.last().unwrap()
    }

    /// Off-boresight angle of the portable's antenna at `pos`.
    pub fn tx_angle_at(&self, pos: &GeoPoint) -> f64 {
        match self.antenna_aim {
            AntennaAim::TowardsBase => 0.0,
            AntennaAim::Fixed { azimuth_deg } => geo::initial_bearing(pos, &self.base_position)
                .map(|b| shortest_delta(azimuth_deg, b).abs())
                .unwrap_or(0.0),
        }
    }
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for chunk `chunk` of fix `fix_index` in a run seeded with `seed`.
pub fn packet_seed(seed: u64, fix_index: usize, chunk: usize) -> u64 {
    mix(mix(seed) ^ mix(((fix_index as u64) << 20) | chunk as u64))
}

/// Number of radio packets a line of `n_bytes` occupies.
pub fn packet_count(link: &LinkConfig, n_bytes: usize) -> usize {
    match link.mode.max_packet_bytes {
        Some(max) if max > 0 => n_bytes.div_ceil(max).max(1),
        _ => 1,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RangeLogs {
    /// The portable's SD-card log.
    pub sent_log: Vec<String>,
    /// The base's log.
    pub received_log: Vec<String>,
}

/// Walks the scenario. At each fix instant the portable forms a sentence,
/// validates it, logs it, and transmits it in packet-sized chunks; the base
/// logs it only if every chunk arrives.
pub fn run_range_scenario(s: &RangeScenario) -> Result<RangeLogs, BenchError> {
    s.validate()?;
    let mut logs = RangeLogs::default();
    for (k, (t, pos)) in s.fix_positions().into_iter().enumerate() {
        let time = s.start_time + Duration::nanoseconds((t * 1e9).round() as i64);
        let has_fix = !s.gps_dropouts.contains(&k);
        let sentence = match s.sentence_type {
            SentenceType::Gga => format_gga(&pos, &time, has_fix as u8),
            SentenceType::Rmc => format_rmc(&pos, &time, has_fix),
        };
        let raw = sentence.raw().to_string();
        let valid = parse_nmea(&raw).ok().and_then(|p| validate_fix(&p).ok()).is_some();
        if !valid {
            log::debug!("{}: fix {k} invalid, not logged", s.name);
            continue;
        }
        logs.sent_log.push(raw.clone());

        let frame_len = sentence.to_line().len();
        let distance_m = haversine_distance(&pos, &s.base_position);
        let tx_angle = s.tx_angle_at(&pos);
        let chunk_len = s.link.mode.max_packet_bytes.unwrap_or(frame_len).min(frame_len);
        let delivered = (0..packet_count(&s.link, frame_len)).all(|c| {
            let ch = ChannelState {
                distance_m,
                tx_off_boresight_deg: tx_angle,
                rx_off_boresight_deg: 0.0,
                rng_seed: packet_seed(s.seed, k, c),
            };
            packet_outcome(&s.link, &ch, chunk_len).is_delivered()
        });
        if delivered {
            logs.received_log.push(raw);
        }
    }
    Ok(logs)
}
