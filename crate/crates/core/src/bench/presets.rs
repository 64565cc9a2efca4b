//! Declarative bench suites. The reference suite ships embedded; the CLI
//! also accepts user files of the same shape.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::range::{AntennaAim, RangeScenario, DEFAULT_FIX_INTERVAL_S, DEFAULT_WALK_SPEED_M_S};
use super::transport::RadioLink;
use super::BenchError;
use crate::geo::{self, normalize_deg, GeoPoint, SentenceType};
use crate::linkmodel::{Calibration, LinkConfig, LinkSpec, ModeName, Pacing};

const REFERENCE: &str = include_str!("../../data/reference_configs.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkSpec {
    pub base_lat: f64,
    pub base_lon: f64,
    pub bearing_deg: f64,
    pub speed_m_s: f64,
    pub fix_interval_s: f64,
}

impl Default for WalkSpec {
    fn default() -> Self {
        WalkSpec {
            base_lat: 52.9115,
            base_lon: -1.1847,
            bearing_deg: 58.0,
            speed_m_s: DEFAULT_WALK_SPEED_M_S,
            fix_interval_s: DEFAULT_FIX_INTERVAL_S,
        }
    }
}

impl WalkSpec {
    pub fn base(&self) -> Result<GeoPoint, BenchError> {
        GeoPoint::new(self.base_lat, self.base_lon)
            .map_err(|e| BenchError::Config(format!("walk base: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThroughputEntry {
    pub id: String,
    pub link: LinkSpec,
    /// Send in packet-sized bursts with the mode's gap between them.
    #[serde(default)]
    pub paced: bool,
    pub reference_time_s: Option<f64>,
    pub reference_wired_s: Option<f64>,
    pub reference_min_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyEntry {
    pub id: String,
    pub link: LinkSpec,
    pub reference_avg_ms: Option<f64>,
    pub reference_wired_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeEntry {
    pub id: String,
    pub link: LinkSpec,
    pub walk_length_m: f64,
    /// Portable boresight relative to the direction of the base; absent
    /// means the antenna follows the base.
    pub aim_offset_deg: Option<f64>,
    pub bearing_deg: Option<f64>,
    pub sentence_type: Option<SentenceType>,
    #[serde(default)]
    pub gps_dropouts: Vec<usize>,
    pub reference_furthest_m: Option<f64>,
    pub reference_consistent_m: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSuite {
    pub walk: WalkSpec,
    pub throughput: Vec<ThroughputEntry>,
    pub latency: Vec<LatencyEntry>,
    pub range: Vec<RangeEntry>,
}

impl BenchSuite {
    /// The configurations of the recorded hardware trials.
    pub fn reference() -> Self {
        Self::parse(REFERENCE).expect("embedded reference suite is valid")
    }

    pub fn parse(text: &str) -> Result<Self, BenchError> {
        toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn only_mode(mut self, mode: ModeName) -> Self {
        self.throughput.retain(|e| e.link.mode == mode);
        self.latency.retain(|e| e.link.mode == mode);
        self.range.retain(|e| e.link.mode == mode);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.throughput.is_empty() && self.latency.is_empty() && self.range.is_empty()
    }
}

fn resolve(cal: &Calibration, spec: &LinkSpec) -> Result<LinkConfig, BenchError> {
    cal.link_config(spec)
        .map_err(|e| BenchError::Config(format!("{}@{}: {e}", spec.mode, spec.baud)))
}

pub fn throughput_link(cal: &Calibration, e: &ThroughputEntry) -> Result<RadioLink, BenchError> {
    let cfg = resolve(cal, &e.link)?;
    let pacing = match (e.paced, cfg.mode.max_packet_bytes) {
        (true, Some(burst)) => Pacing::Paced {
            burst_bytes: burst,
            gap_s: cfg.mode.min_packet_gap_s,
        },
        _ => Pacing::Continuous,
    };
    Ok(RadioLink::new(cfg).paced(pacing))
}

pub fn latency_link(cal: &Calibration, e: &LatencyEntry) -> Result<RadioLink, BenchError> {
    Ok(RadioLink::new(resolve(cal, &e.link)?))
}

pub fn range_scenario(
    cal: &Calibration,
    walk: &WalkSpec,
    e: &RangeEntry,
    seed: u64,
) -> Result<RangeScenario, BenchError> {
    let base = walk.base()?;
    let bearing = e.bearing_deg.unwrap_or(walk.bearing_deg);
    let mut s = RangeScenario::straight_walk(
        &format!("range-{}", e.id),
        base,
        bearing,
        e.walk_length_m,
        resolve(cal, &e.link)?,
    );
    s.walk_speed_m_s = walk.speed_m_s;
    s.fix_interval_s = walk.fix_interval_s;
    s.seed = seed;
    s.gps_dropouts = e.gps_dropouts.clone();
    if let Some(t) = e.sentence_type {
        s.sentence_type = t;
    }
    if let Some(offset) = e.aim_offset_deg {
        // The base lies behind the walker; its direction is the reverse of
        // the walk bearing.
        let towards_base = geo::initial_bearing(&s.path[1], &base).unwrap_or(bearing + 180.0);
        s.antenna_aim = AntennaAim::Fixed {
            azimuth_deg: normalize_deg(towards_base + offset),
        };
    }
    s.validate()?;
    Ok(s)
}
