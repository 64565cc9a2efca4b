//! Spherical-earth geodesy and NMEA-0183 handling.
//!
//! Distances and bearings use a spherical Earth of mean radius
//! [`EARTH_RADIUS_M`]. Over the few hundred metres a ground station covers
//! the ellipsoidal correction is far below GPS noise.

mod nmea;

pub use nmea::{
    format_gga, format_rmc, nmea_checksum, parse_nmea, validate_fix, FixError, NmeaError,
    NmeaSentence, SentenceType,
};

use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius in metres.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Two points closer than this are treated as the same place.
const COINCIDENT_EPSILON_M: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("longitude {0} outside [-180, 180]")]
    LongitudeOutOfRange(f64),
    #[error("bearing undefined between coincident points")]
    CoincidentPoints,
}

/// A WGS-84 position, optionally with altitude and a UTC timestamp.
///
/// Latitude is kept in `[-90, 90]` and longitude in `[-180, 180)`; the
/// constructor rejects anything outside those ranges rather than clamping.
/// A longitude of exactly `180` is accepted and stored as `-180`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeoPoint", into = "RawGeoPoint")]
pub struct GeoPoint {
    lat_deg: f64,
    lon_deg: f64,
    alt_m: Option<f64>,
    time_utc: Option<DateTime<Utc>>,
}

#[derive(Serialize, Deserialize)]
struct RawGeoPoint {
    lat: f64,
    lon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alt_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    time: Option<DateTime<Utc>>,
}

impl TryFrom<RawGeoPoint> for GeoPoint {
    type Error = GeoError;

    fn try_from(raw: RawGeoPoint) -> Result<Self, Self::Error> {
        let mut p = GeoPoint::new(raw.lat, raw.lon)?;
        p.alt_m = raw.alt_m;
        p.time_utc = raw.time;
        Ok(p)
    }
}

impl From<GeoPoint> for RawGeoPoint {
    fn from(p: GeoPoint) -> Self {
        RawGeoPoint {
            lat: p.lat_deg,
            lon: p.lon_deg,
            alt_m: p.alt_m,
            time: p.time_utc,
        }
    }
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self, GeoError> {
        if !(-90.0..=90.0).contains(&lat_deg) {
            return Err(GeoError::LatitudeOutOfRange(lat_deg));
        }
        if !(-180.0..=180.0).contains(&lon_deg) {
            return Err(GeoError::LongitudeOutOfRange(lon_deg));
        }
        let lon_deg = if lon_deg == 180.0 { -180.0 } else { lon_deg };
        Ok(GeoPoint {
            lat_deg,
            lon_deg,
            alt_m: None,
            time_utc: None,
        })
    }

    pub fn with_alt(mut self, alt_m: f64) -> Self {
        self.alt_m = Some(alt_m);
        self
    }

    pub fn with_time(mut self, time: DateTime<Utc>) -> Self {
        self.time_utc = Some(time);
        self
    }

    pub fn lat_deg(&self) -> f64 {
        self.lat_deg
    }

    pub fn lon_deg(&self) -> f64 {
        self.lon_deg
    }

    pub fn alt_m(&self) -> Option<f64> {
        self.alt_m
    }

    pub fn time_utc(&self) -> Option<DateTime<Utc>> {
        self.time_utc
    }

    /// Same horizontal position, ignoring altitude and time.
    pub fn same_position(&self, other: &GeoPoint) -> bool {
        haversine_distance(self, other) < COINCIDENT_EPSILON_M
    }
}

impl fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6})", self.lat_deg, self.lon_deg)
    }
}

/// Great-circle distance in metres.
pub fn haversine_distance(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let phi1 = a.lat_deg.to_radians();
    let phi2 = b.lat_deg.to_radians();
    let dphi = (b.lat_deg - a.lat_deg).to_radians();
    let dlambda = (b.lon_deg - a.lon_deg).to_radians();

    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Forward azimuth at `from` towards `to`, degrees clockwise from true north
/// in `[0, 360)`.
pub fn initial_bearing(from: &GeoPoint, to: &GeoPoint) -> Result<f64, GeoError> {
    if from.same_position(to) {
        return Err(GeoError::CoincidentPoints);
    }
    let phi1 = from.lat_deg.to_radians();
    let phi2 = to.lat_deg.to_radians();
    let dlambda = (to.lon_deg - from.lon_deg).to_radians();

    let y = dlambda.sin() * phi2.cos();
    let x = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dlambda.cos();
    Ok(normalize_deg(y.atan2(x).to_degrees()))
}

/// Point reached after travelling `distance_m` along the great circle that
/// leaves `from` at `bearing_deg`.
pub fn destination(from: &GeoPoint, bearing_deg: f64, distance_m: f64) -> GeoPoint {
    let delta = distance_m / EARTH_RADIUS_M;
    let theta = bearing_deg.to_radians();
    let phi1 = from.lat_deg.to_radians();
    let lambda1 = from.lon_deg.to_radians();

    let sin_phi2 = phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * theta.cos();
    let phi2 = sin_phi2.clamp(-1.0, 1.0).asin();
    let lambda2 = lambda1
        + (theta.sin() * delta.sin() * phi1.cos()).atan2(delta.cos() - phi1.sin() * sin_phi2);

    GeoPoint {
        lat_deg: phi2.to_degrees().clamp(-90.0, 90.0),
        lon_deg: normalize_lon(lambda2.to_degrees()),
        alt_m: from.alt_m,
        time_utc: None,
    }
}

/// Point a fraction `f` of the way along the great circle from `a` to `b`.
/// Altitude is interpolated linearly when both ends carry one.
pub fn intermediate(a: &GeoPoint, b: &GeoPoint, f: f64) -> GeoPoint {
    let d = haversine_distance(a, b);
    let alt = match (a.alt_m, b.alt_m) {
        (Some(x), Some(y)) => Some(x + (y - x) * f),
        (x, _) => x,
    };
    if d < COINCIDENT_EPSILON_M {
        return GeoPoint { alt_m: alt, time_utc: None, ..*a };
    }
    // initial_bearing cannot fail here: the points are distinct.
    let bearing = initial_bearing(a, b).unwrap_or(0.0);
    let mut p = destination(a, bearing, d * f);
    p.alt_m = alt;
    p
}

/// Wraps any angle into `[0, 360)`.
pub fn normalize_deg(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

fn normalize_lon(deg: f64) -> f64 {
    let r = (deg + 180.0).rem_euclid(360.0) - 180.0;
    if r >= 180.0 {
        -180.0
    } else {
        r
    }
}
