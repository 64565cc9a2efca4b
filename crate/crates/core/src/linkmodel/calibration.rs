//! Calibration data: per-mode air rates, per-row overheads and range bases,
//! and antenna gains. The shipped table is embedded; setting
//! `TRACKSTATION_DATA` to a directory loads `calibration.toml` from there
//! instead.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    AirRateRule, AntennaKind, AntennaPattern, LinkConfig, LinkError, ModeName, OutcomeModel,
    RadioMode, SUPPORTED_BAUDS,
};

pub const DATA_DIR_ENV: &str = "TRACKSTATION_DATA";

const EMBEDDED: &str = include_str!("../../data/calibration.toml");
const SUPPORTED_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing calibration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid calibration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct ModeEntry {
    pub name: ModeName,
    pub air_rate: AirRateRule,
    #[serde(default)]
    pub max_packet_bytes: Option<usize>,
    #[serde(default)]
    pub min_packet_gap_s: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct RowEntry {
    pub mode: ModeName,
    pub baud: u32,
    pub transfer_overhead_s: f64,
    pub direction_overhead_s: f64,
    #[serde(default)]
    pub range_base_m: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct GainEntry {
    pub boresight_gain_dbi: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct YagiEntry {
    pub boresight_gain_dbi: f64,
    pub perpendicular_deficit_db: f64,
    pub pattern_exponent: f64,
    pub lower_bound_m: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct AntennaTable {
    pub stub: GainEntry,
    pub omni_unity: GainEntry,
    pub yagi: YagiEntry,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct Calibration {
    pub version: u32,
    pub buffer_capacity_bytes: usize,
    pub path_loss_exponent: f64,
    pub stochastic_steepness_m: f64,
    #[serde(rename = "mode")]
    pub modes: Vec<ModeEntry>,
    #[serde(rename = "row")]
    pub rows: Vec<RowEntry>,
    pub antenna: AntennaTable,
}

/// How packet delivery is decided.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeSpec {
    #[default]
    Deterministic,
    Stochastic {
        #[serde(default)]
        steepness_m: Option<f64>,
    },
}

/// Declarative link description, resolved against a [`Calibration`].
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub mode: ModeName,
    pub baud: u32,
    #[serde(default = "stub")]
    pub tx_antenna: AntennaKind,
    #[serde(default = "stub")]
    pub rx_antenna: AntennaKind,
    #[serde(default)]
    pub buffer_capacity_bytes: Option<usize>,
    #[serde(default)]
    pub path_loss_exponent: Option<f64>,
    #[serde(default)]
    pub outcome: OutcomeSpec,
    #[serde(default)]
    pub per_direction_overhead_s: Option<f64>,
    #[serde(default)]
    pub transfer_overhead_s: Option<f64>,
}

fn stub() -> AntennaKind {
    AntennaKind::Stub
}

impl LinkSpec {
    pub fn new(mode: ModeName, baud: u32) -> Self {
        LinkSpec {
            mode,
            baud,
            tx_antenna: AntennaKind::Stub,
            rx_antenna: AntennaKind::Stub,
            buffer_capacity_bytes: None,
            path_loss_exponent: None,
            outcome: OutcomeSpec::Deterministic,
            per_direction_overhead_s: None,
            transfer_overhead_s: None,
        }
    }

    pub fn with_antennas(mut self, tx: AntennaKind, rx: AntennaKind) -> Self {
        self.tx_antenna = tx;
        self.rx_antenna = rx;
        self
    }
}

impl Calibration {
    /// The table compiled into the binary.
    pub fn embedded() -> Self {
        Self::parse(EMBEDDED).expect("embedded calibration is valid")
    }

    /// Loads from `$TRACKSTATION_DATA/calibration.toml` when the variable is
    /// set, otherwise returns the embedded table.
    pub fn load() -> Result<Self, CalibrationError> {
        match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) => Self::from_dir(Path::new(&dir)),
            None => Ok(Self::embedded()),
        }
    }

    pub fn from_dir(dir: &Path) -> Result<Self, CalibrationError> {
        let path = dir.join("calibration.toml");
        let text = std::fs::read_to_string(&path).map_err(|source| CalibrationError::Io {
            path: path.clone(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CalibrationError> {
        let cal: Calibration = toml::from_str(text)?;
        cal.check()?;
        Ok(cal)
    }

    fn check(&self) -> Result<(), CalibrationError> {
        let invalid = |m: String| Err(CalibrationError::Invalid(m));
        if self.version != SUPPORTED_VERSION {
            return invalid(format!("unsupported version {}", self.version));
        }
        for name in ModeName::ALL {
            if !self.modes.iter().any(|m| m.name == name) {
                return invalid(format!("mode {name} missing"));
            }
        }
        for row in &self.rows {
            if row.transfer_overhead_s < 0.0 || row.direction_overhead_s < 0.0 {
                return invalid(format!("negative overhead for {} @ {}", row.mode, row.baud));
            }
            if row.range_base_m.is_some_and(|r| r <= 0.0) {
                return invalid(format!("non-positive range for {} @ {}", row.mode, row.baud));
            }
        }
        if !self.rows.iter().any(|r| r.range_base_m.is_some()) {
            return invalid("no range rows".into());
        }
        Ok(())
    }

    pub fn mode(&self, name: ModeName) -> RadioMode {
        let entry = self
            .modes
            .iter()
            .find(|m| m.name == name)
            .expect("checked on load");
        RadioMode {
            name,
            max_packet_bytes: entry.max_packet_bytes,
            min_packet_gap_s: entry.min_packet_gap_s,
            air_rate: entry.air_rate,
        }
    }

    pub fn antenna(&self, kind: AntennaKind) -> AntennaPattern {
        match kind {
            AntennaKind::Stub => {
                AntennaPattern::omnidirectional(kind, self.antenna.stub.boresight_gain_dbi)
            }
            AntennaKind::OmniUnity => {
                AntennaPattern::omnidirectional(kind, self.antenna.omni_unity.boresight_gain_dbi)
            }
            AntennaKind::Yagi => AntennaPattern::yagi(
                self.antenna.yagi.boresight_gain_dbi,
                self.antenna.yagi.perpendicular_deficit_db,
                self.antenna.yagi.pattern_exponent,
            ),
        }
    }

    /// Deepest tested distance at which the yagi still delivered everything.
    pub fn yagi_lower_bound_m(&self) -> f64 {
        self.antenna.yagi.lower_bound_m
    }

    /// Gain sum of the stub-to-stub pair the range bases were measured with.
    pub fn reference_gain_dbi(&self) -> f64 {
        2.0 * self.antenna.stub.boresight_gain_dbi
    }

    fn rows_for(&self, mode: ModeName) -> impl Iterator<Item = &RowEntry> {
        self.rows.iter().filter(move |r| r.mode == mode)
    }

    fn exact_row(&self, mode: ModeName, baud: u32) -> Option<&RowEntry> {
        self.rows_for(mode).find(|r| r.baud == baud)
    }

    /// Calibrated overheads for a row, falling back to the mode's mean when
    /// the exact (mode, baud) pair was never measured.
    pub fn overheads(&self, mode: ModeName, baud: u32) -> (f64, f64) {
        if let Some(r) = self.exact_row(mode, baud) {
            return (r.transfer_overhead_s, r.direction_overhead_s);
        }
        let rows: Vec<_> = self.rows_for(mode).collect();
        if rows.is_empty() {
            return (0.0, 0.0);
        }
        let n = rows.len() as f64;
        (
            rows.iter().map(|r| r.transfer_overhead_s).sum::<f64>() / n,
            rows.iter().map(|r| r.direction_overhead_s).sum::<f64>() / n,
        )
    }

    /// Stub-to-stub range for a configuration.
    ///
    /// Measured pairs are returned as-is. Otherwise the mode's measurements
    /// are interpolated (and extrapolated from the end segments) as a power
    /// law in baud; a single measurement applies at every baud.
    pub fn range_base_m(&self, mode: ModeName, baud: u32) -> f64 {
        if let Some(m) = self.exact_row(mode, baud).and_then(|r| r.range_base_m) {
            return m;
        }
        let mut pts: Vec<(f64, f64)> = self
            .rows_for(mode)
            .filter_map(|r| r.range_base_m.map(|m| ((r.baud as f64).ln(), m.ln())))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let x = (baud as f64).ln();
        match pts.len() {
            0 => {
                // Unmeasured mode: borrow the shortest measured range.
                self.rows
                    .iter()
                    .filter_map(|r| r.range_base_m)
                    .fold(f64::INFINITY, f64::min)
            }
            1 => self.rows_for(mode).find_map(|r| r.range_base_m).unwrap_or(pts[0].1.exp()),
            _ => {
                let seg = pts
                    .windows(2)
                    .position(|w| x <= w[1].0)
                    .unwrap_or(pts.len() - 2);
                let (x0, y0) = pts[seg];
                let (x1, y1) = pts[seg + 1];
                (y0 + (y1 - y0) * (x - x0) / (x1 - x0)).exp()
            }
        }
    }

    pub fn link_config(&self, spec: &LinkSpec) -> Result<LinkConfig, LinkError> {
        if !SUPPORTED_BAUDS.contains(&spec.baud) {
            return Err(LinkError::UnsupportedBaud(spec.baud));
        }
        let (transfer, direction) = self.overheads(spec.mode, spec.baud);
        let outcome = match spec.outcome {
            OutcomeSpec::Deterministic => OutcomeModel::Deterministic,
            OutcomeSpec::Stochastic { steepness_m } => OutcomeModel::Stochastic {
                steepness_m: steepness_m.unwrap_or(self.stochastic_steepness_m),
            },
        };
        let cfg = LinkConfig {
            mode: self.mode(spec.mode),
            uart_baud: spec.baud,
            tx_antenna: self.antenna(spec.tx_antenna),
            rx_antenna: self.antenna(spec.rx_antenna),
            per_direction_overhead_s: spec.per_direction_overhead_s.unwrap_or(direction),
            transfer_overhead_s: spec.transfer_overhead_s.unwrap_or(transfer),
            buffer_capacity_bytes: spec
                .buffer_capacity_bytes
                .unwrap_or(self.buffer_capacity_bytes),
            range_base_m: self.range_base_m(spec.mode, spec.baud),
            reference_gain_dbi: self.reference_gain_dbi(),
            path_loss_exponent: spec.path_loss_exponent.unwrap_or(self.path_loss_exponent),
            outcome,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_table_loads() {
        let cal = Calibration::embedded();
        assert_eq!(cal.version, 1);
        assert_eq!(cal.rows.len(), 8);
        assert_eq!(cal.mode(ModeName::Fu4).max_packet_bytes, Some(60));
        assert_eq!(cal.mode(ModeName::Fu2).max_packet_bytes, Some(20));
        assert_eq!(cal.mode(ModeName::Fu1).max_packet_bytes, None);
    }

    #[test]
    fn measured_ranges_are_exact() {
        let cal = Calibration::embedded();
        assert_eq!(cal.range_base_m(ModeName::Fu4, 1200), 60.84);
        assert_eq!(cal.range_base_m(ModeName::Fu3, 38400), 17.6);
        // Single-measurement modes are baud independent.
        assert_eq!(cal.range_base_m(ModeName::Fu4, 9600), 60.84);
    }

    #[test]
    fn fu3_range_interpolates_monotonically() {
        let cal = Calibration::embedded();
        let r = |b| cal.range_base_m(ModeName::Fu3, b);
        assert!((r(9600) - 37.55).abs() < 1e-9);
        assert!(r(4800) > r(9600));
        assert!(r(9600) > r(19200) && r(19200) > r(38400));
        assert!(r(38400) > r(57600) && r(57600) > r(115200));
    }

    #[test]
    fn unmeasured_rows_fall_back_to_mode_mean() {
        let cal = Calibration::embedded();
        let (t, d) = cal.overheads(ModeName::Fu1, 2400);
        assert!((t - (0.131112 + 0.056322) / 2.0).abs() < 1e-12);
        assert!((d - (0.015250133 + 0.015174876) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_tables() {
        let broken = EMBEDDED.replace("version = 1", "version = 7");
        assert!(matches!(
            Calibration::parse(&broken),
            Err(CalibrationError::Invalid(_))
        ));
        let negative = EMBEDDED.replace("0.218186", "-0.218186");
        assert!(Calibration::parse(&negative).is_err());
    }

    #[test]
    fn link_spec_rejects_unsupported_baud() {
        let cal = Calibration::embedded();
        assert_eq!(
            cal.link_config(&LinkSpec::new(ModeName::Fu3, 19200)).unwrap_err(),
            LinkError::UnsupportedBaud(19200)
        );
    }

    #[test]
    fn loads_from_directory() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("calibration.toml"), EMBEDDED).unwrap();
        assert_eq!(Calibration::from_dir(dir.path()).unwrap().rows.len(), 8);
        let missing = tempfile::tempdir().unwrap();
        assert!(matches!(
            Calibration::from_dir(missing.path()),
            Err(CalibrationError::Io { .. })
        ));
    }
}
