use std::fmt;

use chrono::{DateTime, Datelike, NaiveDate, NaiveTime, Timelike, Utc};
use thiserror::Error;

use super::{GeoError, GeoPoint};

/// Framing versus checksum failures are kept apart: a malformed line points
/// at the source, a checksum mismatch at the transport.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NmeaError {
    #[error("malformed sentence: {0}")]
    MalformedSentence(String),
    #[error("checksum mismatch: declared {declared:02X}, computed {computed:02X}")]
    ChecksumMismatch { declared: u8, computed: u8 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixError {
    #[error("sentence reports no valid fix")]
    NoFix,
    #[error("sentence type {0} carries no fix")]
    UnsupportedType(String),
    #[error("field {index} invalid: {reason}")]
    InvalidField { index: usize, reason: String },
    #[error(transparent)]
    Coordinate(#[from] GeoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SentenceType {
    Gga,
    Rmc,
}

impl SentenceType {
    pub fn code(self) -> &'static str {
        match self {
            SentenceType::Gga => "GGA",
            SentenceType::Rmc => "RMC",
        }
    }
}

/// One checksum-verified NMEA-0183 sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NmeaSentence {
    raw: String,
    talker: String,
    sentence_type: String,
    fields: Vec<String>,
    checksum: u8,
}

impl NmeaSentence {
    /// The line as received, without its terminator.
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn talker(&self) -> &str {
        &self.talker
    }

    pub fn sentence_type(&self) -> &str {
        &self.sentence_type
    }

    /// Data fields after the address field.
    pub fn fields(&self) -> &[String] {
        &self.fields
    }

    pub fn checksum(&self) -> u8 {
        self.checksum
    }

    /// Builds a sentence from parts, emitting an uppercase checksum.
    pub fn build(talker: &str, sentence_type: &str, fields: &[String]) -> Result<Self, NmeaError> {
        let mut body = format!("{talker}{sentence_type}");
        for f in fields {
            body.push(',');
            body.push_str(f);
        }
        let line = format!("${body}*{:02X}", nmea_checksum(&body));
        parse_nmea(&line)
    }

    /// Line with CRLF terminator.
    pub fn to_line(&self) -> String {
        format!("{}\r\n", self.raw)
    }
}

impl fmt::Display for NmeaSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

/// XOR of every byte in `body`.
pub fn nmea_checksum(body: &str) -> u8 {
    body.bytes().fold(0, |acc, b| acc ^ b)
}

pub fn parse_nmea(line: &str) -> Result<NmeaSentence, NmeaError> {
    let malformed = |why: &str| NmeaError::MalformedSentence(why.to_string());

    let raw = line
        .strip_suffix("\r\n")
        .or_else(|| line.strip_suffix('\n'))
        .unwrap_or(line);
    if !raw.is_ascii() {
        return Err(malformed("non-ASCII content"));
    }
    let rest = raw.strip_prefix('$').ok_or_else(|| malformed("missing '$'"))?;
    if rest.contains('$') {
        return Err(malformed("embedded '$'"));
    }
    let (body, declared) = match rest.split_once('*') {
        Some(parts) => parts,
        None => return Err(malformed("missing '*'")),
    };
    if declared.contains('*') {
        return Err(malformed("more than one '*'"));
    }
    if declared.len() != 2 || !declared.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(malformed("checksum is not two hex digits"));
    }
    if body.bytes().any(|b| b.is_ascii_control()) {
        return Err(malformed("control character in body"));
    }
    let mut parts = body.split(',');
    let address = parts.next().unwrap_or_default();
    if address.len() != 5 || !address.bytes().all(|b| b.is_ascii_alphanumeric()) {
        return Err(malformed("address field must be 5 alphanumerics"));
    }
    // Hex digits compare case-insensitively by value.
    let declared = u8::from_str_radix(declared, 16).map_err(|_| malformed("bad checksum"))?;
    let computed = nmea_checksum(body);
    if declared != computed {
        return Err(NmeaError::ChecksumMismatch { declared, computed });
    }
    Ok(NmeaSentence {
        raw: raw.to_string(),
        talker: address[..2].to_string(),
        sentence_type: address[2..].to_string(),
        fields: parts.map(str::to_string).collect(),
        checksum: computed,
    })
}

/// Extracts a position from a GGA or RMC sentence that reports a valid fix.
///
/// RMC carries a date and yields a timestamped point; GGA only has a time of
/// day and yields an untimed point.
pub fn validate_fix(s: &NmeaSentence) -> Result<GeoPoint, FixError> {
    let f = s.fields();
    match s.sentence_type() {
        "GGA" => {
            let quality = field(f, 5)?;
            let quality: u8 = quality.parse().map_err(|_| invalid(5, "fix quality"))?;
            if quality == 0 {
                return Err(FixError::NoFix);
            }
            let lat = coordinate(f, 1, 2, 'N', 'S', 2)?;
            let lon = coordinate(f, 3, 4, 'E', 'W', 3)?;
            let mut p = GeoPoint::new(lat, lon)?;
            if let Some(alt) = f.get(8).filter(|v| !v.is_empty()) {
                p = p.with_alt(alt.parse().map_err(|_| invalid(8, "altitude"))?);
            }
            Ok(p)
        }
        "RMC" => {
            if field(f, 1)? != "A" {
                return Err(FixError::NoFix);
            }
            let lat = coordinate(f, 2, 3, 'N', 'S', 2)?;
            let lon = coordinate(f, 4, 5, 'E', 'W', 3)?;
            let mut p = GeoPoint::new(lat, lon)?;
            let time = f.first().filter(|v| !v.is_empty()).map(|v| parse_time(v));
            let date = f.get(8).filter(|v| !v.is_empty()).map(|v| parse_date(v));
            if let (Some(time), Some(date)) = (time, date) {
                p = p.with_time(date?.and_time(time?).and_utc());
            }
            Ok(p)
        }
        other => Err(FixError::UnsupportedType(other.to_string())),
    }
}

fn invalid(index: usize, reason: &str) -> FixError {
    FixError::InvalidField {
        index,
        reason: reason.to_string(),
    }
}

fn field(f: &[String], index: usize) -> Result<&str, FixError> {
    f.get(index)
        .map(String::as_str)
        .ok_or_else(|| invalid(index, "missing"))
}

/// `ddmm.mmmm` (or `dddmm.mmmm`) plus hemisphere to signed decimal degrees.
fn coordinate(
    f: &[String],
    value_idx: usize,
    hemi_idx: usize,
    positive: char,
    negative: char,
    degree_digits: usize,
) -> Result<f64, FixError> {
    let text = field(f, value_idx)?;
    let dot = text.find('.').unwrap_or(text.len());
    if dot != degree_digits + 2 || !text.bytes().all(|b| b.is_ascii_digit() || b == b'.') {
        return Err(invalid(value_idx, "coordinate format"));
    }
    let degrees: f64 = text[..degree_digits]
        .parse()
        .map_err(|_| invalid(value_idx, "degrees"))?;
    let minutes: f64 = text[degree_digits..]
        .parse()
        .map_err(|_| invalid(value_idx, "minutes"))?;
    if minutes >= 60.0 {
        return Err(invalid(value_idx, "minutes >= 60"));
    }
    let magnitude = degrees + minutes / 60.0;
    let hemi = field(f, hemi_idx)?;
    match hemi.chars().next() {
        Some(c) if c == positive && hemi.len() == 1 => Ok(magnitude),
        Some(c) if c == negative && hemi.len() == 1 => Ok(-magnitude),
        _ => Err(invalid(hemi_idx, "hemisphere")),
    }
}

fn parse_time(text: &str) -> Result<NaiveTime, FixError> {
    let bad = || invalid(0, "time");
    if text.len() < 6 {
        return Err(bad());
    }
    let h: u32 = text[0..2].parse().map_err(|_| bad())?;
    let m: u32 = text[2..4].parse().map_err(|_| bad())?;
    let s: f64 = text[4..].parse().map_err(|_| bad())?;
    let whole = s.trunc() as u32;
    let nanos = ((s - s.trunc()) * 1e9).round() as u32;
    NaiveTime::from_hms_nano_opt(h, m, whole, nanos).ok_or_else(bad)
}

fn parse_date(text: &str) -> Result<NaiveDate, FixError> {
    let bad = || invalid(8, "date");
    if text.len() != 6 {
        return Err(bad());
    }
    let d: u32 = text[0..2].parse().map_err(|_| bad())?;
    let m: u32 = text[2..4].parse().map_err(|_| bad())?;
    let y: i32 = text[4..6].parse().map_err(|_| bad())?;
    // Two-digit years pivot at 1980.
    let year = if y < 80 { 2000 + y } else { 1900 + y };
    NaiveDate::from_ymd_opt(year, m, d).ok_or_else(bad)
}

fn format_time(t: &DateTime<Utc>) -> String {
    let centis = t.timestamp_subsec_millis() / 10;
    format!(
        "{:02}{:02}{:02}.{:02}",
        t.hour(),
        t.minute(),
        t.second(),
        centis
    )
}

fn format_coordinate(value: f64, degree_digits: usize, positive: char, negative: char) -> (String, char) {
    let hemi = if value < 0.0 { negative } else { positive };
    let magnitude = value.abs();
    let mut degrees = magnitude.trunc();
    let mut minutes = ((magnitude - degrees) * 60.0 * 1e5).round() / 1e5;
    if minutes >= 60.0 {
        degrees += 1.0;
        minutes -= 60.0;
    }
    let text = format!(
        "{:0dw$}{:08.5}",
        degrees as u32,
        minutes,
        dw = degree_digits
    );
    (text, hemi)
}

/// GGA sentence for `p` at `time`; fix quality 0 marks an invalid fix.
pub fn format_gga(p: &GeoPoint, time: &DateTime<Utc>, fix_quality: u8) -> NmeaSentence {
    let (lat, ns) = format_coordinate(p.lat_deg(), 2, 'N', 'S');
    let (lon, ew) = format_coordinate(p.lon_deg(), 3, 'E', 'W');
    let alt = p.alt_m().map(|a| format!("{a:.1}")).unwrap_or_default();
    let sats = if fix_quality == 0 { "00" } else { "08" };
    let fields = [
        format_time(time),
        lat,
        ns.to_string(),
        lon,
        ew.to_string(),
        fix_quality.to_string(),
        sats.to_string(),
        "0.9".to_string(),
        alt,
        "M".to_string(),
        "46.9".to_string(),
        "M".to_string(),
        String::new(),
        String::new(),
    ];
    NmeaSentence::build("GP", "GGA", &fields).expect("generated GGA is well formed")
}

/// RMC sentence for `p` at `time`; `valid = false` emits status `V`.
pub fn format_rmc(p: &GeoPoint, time: &DateTime<Utc>, valid: bool) -> NmeaSentence {
    let (lat, ns) = format_coordinate(p.lat_deg(), 2, 'N', 'S');
    let (lon, ew) = format_coordinate(p.lon_deg(), 3, 'E', 'W');
    let fields = [
        format_time(time),
        if valid { "A" } else { "V" }.to_string(),
        lat,
        ns.to_string(),
        lon,
        ew.to_string(),
        "0.0".to_string(),
        "0.0".to_string(),
        format!("{:02}{:02}{:02}", time.day(), time.month(), time.year() % 100),
        String::new(),
        String::new(),
    ];
    NmeaSentence::build("GP", "RMC", &fields).expect("generated RMC is well formed")
}
