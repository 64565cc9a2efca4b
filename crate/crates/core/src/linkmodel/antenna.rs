use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AntennaKind {
    /// The short helical stub shipped with the module.
    Stub,
    /// Long unity-gain omnidirectional whip.
    OmniUnity,
    /// Directional Yagi-Uda.
    Yagi,
}

impl AntennaKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AntennaKind::Stub => "stub",
            AntennaKind::OmniUnity => "omni_unity",
            AntennaKind::Yagi => "yagi",
        }
    }
}

impl std::str::FromStr for AntennaKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stub" => Ok(AntennaKind::Stub),
            "omni" | "omni_unity" => Ok(AntennaKind::OmniUnity),
            "yagi" => Ok(AntennaKind::Yagi),
            other => Err(format!("unknown antenna kind {other:?}")),
        }
    }
}

/// Azimuthal gain pattern. Gains are in dBi relative to the calibration
/// reference; only the Yagi has a direction-dependent term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    pub kind: AntennaKind,
    pub boresight_gain_dbi: f64,
    /// Gain loss at 90 degrees off boresight (Yagi only).
    #[serde(default)]
    pub perpendicular_deficit_db: f64,
    /// Shape of the main lobe: deficit grows as `(angle / 90)^exponent`.
    #[serde(default = "default_exponent")]
    pub pattern_exponent: f64,
}

fn default_exponent() -> f64 {
    2.0
}

impl AntennaPattern {
    pub fn omnidirectional(kind: AntennaKind, gain_dbi: f64) -> Self {
        AntennaPattern {
            kind,
            boresight_gain_dbi: gain_dbi,
            perpendicular_deficit_db: 0.0,
            pattern_exponent: default_exponent(),
        }
    }

    pub fn yagi(boresight_gain_dbi: f64, perpendicular_deficit_db: f64, pattern_exponent: f64) -> Self {
        AntennaPattern {
            kind: AntennaKind::Yagi,
            boresight_gain_dbi,
            perpendicular_deficit_db,
            pattern_exponent,
        }
    }
}

/// Gain in dBi at `off_boresight_deg` from the antenna axis.
///
/// Angles are folded into `[0, 180]`. Beyond 90 degrees the Yagi holds its
/// side-lobe level, so the gain never rises again towards the back.
pub fn antenna_gain(p: &AntennaPattern, off_boresight_deg: f64) -> f64 {
    match p.kind {
        AntennaKind::Stub | AntennaKind::OmniUnity => p.boresight_gain_dbi,
        AntennaKind::Yagi => {
            let folded = off_boresight_deg.abs().rem_euclid(360.0);
            let angle = if folded > 180.0 { 360.0 - folded } else { folded };
            let x = (angle / 90.0).min(1.0);
            p.boresight_gain_dbi - p.perpendicular_deficit_db * x.powf(p.pattern_exponent)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omni_is_angle_independent() {
        let omni = AntennaPattern::omnidirectional(AntennaKind::OmniUnity, 3.8);
        for a in [0.0, 45.0, 90.0, 135.0, 180.0] {
            assert_eq!(antenna_gain(&omni, a), 3.8);
        }
    }

    #[test]
    fn yagi_boresight_and_perpendicular() {
        let deficit = 20.0 * (137.95f64 / 46.99).log10();
        assert!((deficit - 9.35).abs() < 0.01);
        let y = AntennaPattern::yagi(7.5, deficit, 2.0);
        assert_eq!(antenna_gain(&y, 0.0), 7.5);
        assert!((antenna_gain(&y, 90.0) - (7.5 - 9.35)).abs() < 0.1);
        assert_eq!(antenna_gain(&y, 170.0), antenna_gain(&y, 90.0));
        assert_eq!(antenna_gain(&y, 350.0), antenna_gain(&y, 10.0));
    }

    #[test]
    fn kind_names_parse() {
        assert_eq!("omni".parse::<AntennaKind>(), Ok(AntennaKind::OmniUnity));
        assert!("dish".parse::<AntennaKind>().is_err());
    }
}
