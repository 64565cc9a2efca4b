//! JSON frames exchanged with the operator UI.
//!
//! Every frame is `{"type": <topic>, "time": <ISO-8601 UTC>, "body": {...}}`.
//! The UI only ever sends `command` frames.

use chrono::{DateTime, Utc};
use serde_json::{Map, Value};
use thiserror::Error;

use super::events::{BenchKind, Command, CommandKind, LinkEvent};
use crate::linkmodel::{ModeName, SUPPORTED_BAUDS};
use crate::tracker::{ELEVATION_MAX_DEG, ELEVATION_MIN_DEG};

pub const MAX_FIX_INTERVAL_S: f64 = 3600.0;
const MAX_ID_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("schema violation at {path}: {reason}")]
    SchemaViolation { path: String, reason: String },
    #[error("unknown command kind {0:?}")]
    UnknownCommand(String),
}

fn violation(path: impl Into<String>, reason: impl Into<String>) -> GatewayError {
    GatewayError::SchemaViolation {
        path: path.into(),
        reason: reason.into(),
    }
}

/// Parameter range check shared by the gateway and the station. Returns the
/// offending field name.
pub fn validate_kind(kind: &CommandKind) -> Result<(), (&'static str, String)> {
    match *kind {
        CommandKind::SetRadioMode { baud, .. } => {
            if !SUPPORTED_BAUDS.contains(&baud) {
                return Err(("baud", format!("unsupported baud {baud}")));
            }
        }
        CommandKind::SetFixInterval { seconds } => {
            if !(seconds > 0.0 && seconds <= MAX_FIX_INTERVAL_S) {
                return Err(("seconds", format!("{seconds} outside (0, {MAX_FIX_INTERVAL_S}]")));
            }
        }
        CommandKind::ManualPoint { az, el } => {
            if !(0.0..360.0).contains(&az) {
                return Err(("az", format!("{az} outside [0, 360)")));
            }
            if !(ELEVATION_MIN_DEG..=ELEVATION_MAX_DEG).contains(&el) {
                return Err(("el", format!("{el} outside [-10, 90]")));
            }
        }
        CommandKind::StartSweep | CommandKind::ResumeTracking | CommandKind::StartBench { .. } => {}
    }
    Ok(())
}

pub fn gateway_encode(e: &LinkEvent) -> String {
    serde_json::to_string(e).expect("events always serialise")
}

/// Frame for a command the UI wants to send.
pub fn encode_command(c: &Command) -> String {
    gateway_encode(&LinkEvent::command(c))
}

/// Frame telling a client its frame was refused.
pub fn encode_error(err: &GatewayError, time: DateTime<Utc>) -> String {
    let body = match err {
        GatewayError::SchemaViolation { path, reason } => {
            serde_json::json!({ "error": "schema_violation", "path": path, "reason": reason })
        }
        GatewayError::UnknownCommand(kind) => {
            serde_json::json!({ "error": "unknown_command", "path": "body.kind", "reason": kind })
        }
    };
    serde_json::json!({ "type": "error", "time": time, "body": body }).to_string()
}

struct Body<'a> {
    map: &'a Map<String, Value>,
    used: Vec<&'static str>,
}

impl<'a> Body<'a> {
    fn get(&mut self, key: &'static str) -> Result<&'a Value, GatewayError> {
        self.used.push(key);
        self.map
            .get(key)
            .ok_or_else(|| violation(format!("body.{key}"), "missing"))
    }

    fn number(&mut self, key: &'static str) -> Result<f64, GatewayError> {
        self.get(key)?
            .as_f64()
            .ok_or_else(|| violation(format!("body.{key}"), "expected a number"))
    }

    fn string(&mut self, key: &'static str) -> Result<&'a str, GatewayError> {
        self.get(key)?
            .as_str()
            .ok_or_else(|| violation(format!("body.{key}"), "expected a string"))
    }

    fn finish(self) -> Result<(), GatewayError> {
        for k in self.map.keys() {
            if !self.used.contains(&k.as_str()) {
                return Err(violation(format!("body.{k}"), "unexpected field"));
            }
        }
        Ok(())
    }
}

/// Validates a UI frame and builds the command it carries.
pub fn gateway_decode(frame: &str) -> Result<Command, GatewayError> {
    let v: Value = serde_json::from_str(frame).map_err(|e| violation("$", e.to_string()))?;
    let obj = v.as_object().ok_or_else(|| violation("$", "expected an object"))?;
    match obj.get("type").and_then(Value::as_str) {
        Some("command") => {}
        Some(other) => return Err(violation("type", format!("expected \"command\", got {other:?}"))),
        None => return Err(violation("type", "missing")),
    }
    let issued_at = obj
        .get("time")
        .and_then(Value::as_str)
        .ok_or_else(|| violation("time", "missing"))
        .and_then(|t| {
            DateTime::parse_from_rfc3339(t)
                .map(|d| d.with_timezone(&Utc))
                .map_err(|e| violation("time", e.to_string()))
        })?;
    let map = obj
        .get("body")
        .and_then(Value::as_object)
        .ok_or_else(|| violation("body", "expected an object"))?;
    for k in obj.keys() {
        if !["type", "time", "body"].contains(&k.as_str()) {
            return Err(violation(k.clone(), "unexpected field"));
        }
    }

    let mut body = Body { map, used: Vec::new() };
    let id = body.string("id")?;
    if id.is_empty() || id.len() > MAX_ID_LEN {
        return Err(violation("body.id", format!("length must be 1..={MAX_ID_LEN}")));
    }
    let id = id.to_string();
    let kind_name = body.string("kind")?;
    let kind = match kind_name {
        "set_radio_mode" => {
            let mode = body
                .string("mode")?
                .parse::<ModeName>()
                .map_err(|e| violation("body.mode", e.to_string()))?;
            let baud = body
                .get("baud")?
                .as_u64()
                .and_then(|b| u32::try_from(b).ok())
                .ok_or_else(|| violation("body.baud", "expected an integer"))?;
            CommandKind::SetRadioMode { mode, baud }
        }
        "set_fix_interval" => CommandKind::SetFixInterval {
            seconds: body.number("seconds")?,
        },
        "manual_point" => CommandKind::ManualPoint {
            az: body.number("az")?,
            el: body.number("el")?,
        },
        "start_sweep" => CommandKind::StartSweep,
        "resume_tracking" => CommandKind::ResumeTracking,
        "start_bench" => {
            let bench = match body.string("bench")? {
                "throughput" => BenchKind::Throughput,
                "latency" => BenchKind::Latency,
                "range" => BenchKind::Range,
                other => return Err(violation("body.bench", format!("unknown bench {other:?}"))),
            };
            CommandKind::StartBench { bench }
        }
        other => return Err(GatewayError::UnknownCommand(other.to_string())),
    };
    body.finish()?;
    validate_kind(&kind).map_err(|(field, reason)| violation(format!("body.{field}"), reason))?;
    Ok(Command { id, issued_at, kind })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::station::events::{EventBody, GimbalBody};
    use crate::tracker::GimbalMode;
    use chrono::TimeZone;

    fn t() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 5, 1, 10, 0, 0).unwrap()
    }

    fn frame(body: &str) -> String {
        format!(r#"{{"type":"command","time":"2024-05-01T10:00:00Z","body":{body}}}"#)
    }

    #[test]
    fn gimbal_frame_shape() {
        let e = LinkEvent::new(
            t(),
            EventBody::Gimbal(GimbalBody {
                az: 90.0,
                el: 0.0,
                mode: GimbalMode::Tracking,
                max_az_rate: 60.0,
                max_el_rate: 30.0,
                sweep_progress: 0.0,
                reference_error: 0.0,
            }),
        );
        let v: Value = serde_json::from_str(&gateway_encode(&e)).unwrap();
        assert_eq!(v["type"], "gimbal");
        assert_eq!(v["time"], "2024-05-01T10:00:00Z");
        assert_eq!(v["body"]["az"], 90.0);
        assert_eq!(v["body"]["mode"], "tracking");
    }

    #[test]
    fn out_of_range_azimuth() {
        let err = gateway_decode(&frame(r#"{"id":"a","kind":"manual_point","az":400,"el":0}"#));
        assert_eq!(
            err,
            Err(GatewayError::SchemaViolation {
                path: "body.az".into(),
                reason: "400 outside [0, 360)".into()
            })
        );
    }

    #[test]
    fn structural_violations_carry_paths() {
        let path = |f: &str| match gateway_decode(f) {
            Err(GatewayError::SchemaViolation { path, .. }) => path,
            other => panic!("{other:?}"),
        };
        assert_eq!(path("[1]"), "$");
        assert_eq!(path(r#"{"type":"gimbal","time":"x","body":{}}"#), "type");
        assert_eq!(
            path(r#"{"type":"command","time":"yesterday","body":{}}"#),
            "time"
        );
        assert_eq!(path(&frame(r#"{"kind":"start_sweep"}"#)), "body.id");
        assert_eq!(path(&frame(r#"{"id":"a","kind":"start_sweep","x":1}"#)), "body.x");
        assert_eq!(
            path(&frame(r#"{"id":"a","kind":"set_radio_mode","mode":"FU9","baud":9600}"#)),
            "body.mode"
        );
        assert_eq!(
            path(&frame(r#"{"id":"a","kind":"set_fix_interval","seconds":-1}"#)),
            "body.seconds"
        );
    }

    #[test]
    fn unknown_kind() {
        assert_eq!(
            gateway_decode(&frame(r#"{"id":"a","kind":"self_destruct"}"#)),
            Err(GatewayError::UnknownCommand("self_destruct".into()))
        );
    }

    #[test]
    fn error_frame_is_json() {
        let f = encode_error(&GatewayError::UnknownCommand("x".into()), t());
        let v: Value = serde_json::from_str(&f).unwrap();
        assert_eq!(v["type"], "error");
        assert_eq!(v["body"]["error"], "unknown_command");
    }
}
