use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::BenchError;
use crate::geo::{haversine_distance, parse_nmea, validate_fix, GeoPoint, NmeaError};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransmissionMatch {
    pub successful: Vec<(GeoPoint, String)>,
    pub lost: Vec<(GeoPoint, String)>,
    /// Received lines whose framing or checksum failed.
    pub corrupted: Vec<String>,
    /// Received lines never sent, and sent lines that are not valid fixes.
    pub anomalies: Vec<String>,
}

fn clean(line: &str) -> &str {
    line.trim_end_matches(['\r', '\n'])
}

/// Classifies every sent line as successful (also present, intact, in the
/// received log) or lost. Matching keys on the full raw line.
pub fn match_transmissions<S: AsRef<str>, R: AsRef<str>>(
    sent_log: &[S],
    received_log: &[R],
) -> TransmissionMatch {
    let mut m = TransmissionMatch::default();
    let mut intact: HashSet<&str> = HashSet::new();
    for line in received_log.iter().map(|l| clean(l.as_ref())) {
        if line.is_empty() {
            continue;
        }
        match parse_nmea(line) {
            Ok(_) => {
                intact.insert(line);
            }
            Err(NmeaError::ChecksumMismatch { .. } | NmeaError::MalformedSentence(_)) => {
                m.corrupted.push(line.to_string())
            }
        }
    }

    let mut sent_set: HashSet<&str> = HashSet::new();
    for line in sent_log.iter().map(|l| clean(l.as_ref())) {
        if line.is_empty() {
            continue;
        }
        sent_set.insert(line);
        let fix = parse_nmea(line).ok().and_then(|s| validate_fix(&s).ok());
        let Some(point) = fix else {
            m.anomalies.push(format!("sent line is not a valid fix: {line}"));
            continue;
        };
        if intact.contains(line) {
            m.successful.push((point, line.to_string()));
        } else {
            m.lost.push((point, line.to_string()));
        }
    }
    for line in received_log.iter().map(|l| clean(l.as_ref())) {
        if intact.contains(line) && !sent_set.contains(line) {
            m.anomalies.push(format!("received but never sent: {line}"));
        }
    }
    m
}

/// Largest base distance among successful fixes.
pub fn furthest_success_distance(m: &TransmissionMatch, base: &GeoPoint) -> Result<f64, BenchError> {
    m.successful
        .iter()
        .map(|(p, _)| haversine_distance(p, base))
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))))
        .ok_or(BenchError::NoSuccesses)
}

/// Share of sent fixes within `radius_m` of the base that arrived.
pub fn delivery_ratio_within(m: &TransmissionMatch, base: &GeoPoint, radius_m: f64) -> Option<f64> {
    let inside = |list: &[(GeoPoint, String)]| {
        list.iter()
            .filter(|(p, _)| haversine_distance(p, base) <= radius_m)
            .count()
    };
    let ok = inside(&m.successful);
    let total = ok + inside(&m.lost);
    (total > 0).then(|| ok as f64 / total as f64)
}

fn point_feature(p: &GeoPoint, status: &str, raw: Option<&str>) -> Value {
    let mut props = json!({ "status": status });
    if let Some(r) = raw {
        props["sentence"] = json!(r);
    }
    if let Some(t) = p.time_utc() {
        props["time"] = json!(t.to_rfc3339());
    }
    json!({
        "type": "Feature",
        "geometry": { "type": "Point", "coordinates": [p.lon_deg(), p.lat_deg()] },
        "properties": props,
    })
}

/// GeoJSON FeatureCollection of the base plus every classified fix.
pub fn export_geojson(m: &TransmissionMatch, base: &GeoPoint) -> Value {
    let mut features = vec![point_feature(base, "base", None)];
    features.extend(
        m.successful
            .iter()
            .map(|(p, raw)| point_feature(p, "successful", Some(raw))),
    );
    features.extend(m.lost.iter().map(|(p, raw)| point_feature(p, "lost", Some(raw))));
    json!({ "type": "FeatureCollection", "features": features })
}
