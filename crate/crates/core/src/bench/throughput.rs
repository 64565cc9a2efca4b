use serde::{Deserialize, Serialize};

use super::transport::{SerialLink, WiredLink};
use super::BenchError;
use crate::linkmodel::uart_transfer_time;

/// Arms the receiver. Control bytes never occur in the printable payload.
pub const START_MARKER: [u8; 4] = [0x02; 4];
pub const END_MARKER: [u8; 4] = [0x03; 4];

const PAYLOAD: &[u8] = include_bytes!("../../data/payload_10k.bin");

/// The fixed 10,000-byte blob every throughput run sends.
pub fn reference_payload() -> &'static [u8] {
    PAYLOAD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputResult {
    pub config_id: String,
    pub link: String,
    /// Start detection to last byte read, in simulated seconds.
    pub duration_s: f64,
    pub passed: bool,
    pub failure: Option<String>,
    pub bytes_received: usize,
    pub wired_equivalent_s: f64,
    pub min_calculated_s: f64,
}

struct Reading {
    elapsed_s: f64,
    buffer: Vec<u8>,
    failure: Option<String>,
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// The receiving device: listen for the start condition, then read into a
/// `len + 1` buffer until the end condition or `len` bytes.
fn receive(
    link: &mut dyn SerialLink,
    payload: &[u8],
    start_marker: &[u8],
    end_marker: &[u8],
) -> Reading {
    let mut stream = Vec::with_capacity(payload.len() + start_marker.len() + end_marker.len());
    stream.extend_from_slice(start_marker);
    stream.extend_from_slice(payload);
    stream.extend_from_slice(end_marker);
    let arrivals = link.transmit(&stream);

    let mut it = arrivals.iter();
    let mut window: Vec<u8> = Vec::with_capacity(start_marker.len());
    let mut start = None;
    for a in it.by_ref() {
        window.push(a.byte);
        if window.len() > start_marker.len() {
            window.remove(0);
        }
        if window == start_marker {
            start = Some(a.at_s);
            break;
        }
    }
    let Some(start) = start else {
        return Reading {
            elapsed_s: 0.0,
            buffer: Vec::new(),
            failure: Some("start condition never detected".into()),
        };
    };

    let len = payload.len();
    let mut buffer = Vec::with_capacity(len + 1);
    let mut counter = 0usize;
    let mut stop = start;
    let mut end_seen = false;
    let mut bounded = false;
    for a in it {
        buffer.push(a.byte);
        counter += 1;
        stop = a.at_s;
        if buffer.ends_with(end_marker) {
            end_seen = true;
            break;
        }
        if counter >= len {
            bounded = true;
            break;
        }
    }
    if end_seen {
        buffer.truncate(buffer.len() - end_marker.len());
    }
    let failure = if !end_seen && !bounded {
        Some(format!("stream ended after {counter} bytes"))
    } else {
        None
    };
    Reading {
        elapsed_s: stop - start,
        buffer,
        failure,
    }
}

/// Sends `start_marker + payload + end_marker` through `link` and times the
/// receiver. A payload mismatch is a result with `passed = false`, not an
/// error.
pub fn run_throughput_test(
    link: &mut dyn SerialLink,
    config_id: &str,
    payload: &[u8],
    start_marker: &[u8],
    end_marker: &[u8],
) -> Result<ThroughputResult, BenchError> {
    if start_marker.is_empty() || end_marker.is_empty() {
        return Err(BenchError::Config("markers must be non-empty".into()));
    }
    if contains(payload, start_marker) || contains(payload, end_marker) {
        return Err(BenchError::MarkerInPayload);
    }
    let baud = link.uart_baud();
    let reading = receive(link, payload, start_marker, end_marker);
    let wired = receive(&mut WiredLink { baud }, payload, start_marker, end_marker);

    let failure = reading.failure.or_else(|| {
        (reading.buffer != payload).then(|| {
            let at = reading
                .buffer
                .iter()
                .zip(payload)
                .position(|(a, b)| a != b)
                .unwrap_or(reading.buffer.len().min(payload.len()));
            format!(
                "test failure: received {} of {} bytes, first difference at byte {at}",
                reading.buffer.len(),
                payload.len()
            )
        })
    });
    Ok(ThroughputResult {
        config_id: config_id.to_string(),
        link: link.label(),
        duration_s: reading.elapsed_s,
        passed: failure.is_none(),
        failure,
        bytes_received: reading.buffer.len(),
        wired_equivalent_s: wired.elapsed_s,
        min_calculated_s: uart_transfer_time(payload.len(), baud),
    })
}
