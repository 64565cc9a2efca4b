use serde::{Deserialize, Serialize};

use super::transport::SerialLink;
use super::BenchError;

pub const DEFAULT_ITERATIONS: usize = 10;
pub const DEFAULT_ECHO_DEADLINE_S: f64 = 5.0;

/// Behaviour of the far-end device.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Responder {
    Echo,
    /// Replies with the bitwise complement of what it received.
    WrongByte,
    Silent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyResult {
    pub config_id: String,
    pub link: String,
    /// Round trips in milliseconds, only for iterations whose echo matched.
    pub samples_ms: Vec<f64>,
    pub avg_ms: Option<f64>,
    pub iterations: usize,
    /// False when no echo matched.
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyOptions {
    pub iterations: usize,
    pub deadline_s: f64,
    pub responder: Responder,
}

impl Default for LatencyOptions {
    fn default() -> Self {
        LatencyOptions {
            iterations: DEFAULT_ITERATIONS,
            deadline_s: DEFAULT_ECHO_DEADLINE_S,
            responder: Responder::Echo,
        }
    }
}

/// Ping-pong of single bytes. Each iteration flushes, timestamps, sends one
/// byte, busy-waits for a reply, timestamps again, and keeps the difference
/// only if the reply equals what was sent.
pub fn run_latency_test(
    link: &mut dyn SerialLink,
    config_id: &str,
    opts: LatencyOptions,
) -> Result<LatencyResult, BenchError> {
    let mut clock = 0.0f64;
    let mut samples_ms = Vec::with_capacity(opts.iterations);
    for i in 0..opts.iterations {
        // Flushing leaves nothing in flight; the simulated link has no
        // residue between iterations.
        let sent = b'0' + (i % 10) as u8;
        let start = clock;
        let reply = match opts.responder {
            Responder::Silent => None,
            Responder::Echo => Some(sent),
            Responder::WrongByte => Some(!sent),
        };
        let round_trip = match (reply, link.frame_latency(1)) {
            (Some(b), Some(one_way)) => Some((b, 2.0 * one_way)),
            _ => None,
        };
        let (received, rtt) = match round_trip {
            Some((b, rtt)) if rtt <= opts.deadline_s => (b, rtt),
            _ => {
                return Err(BenchError::EchoTimeout {
                    iteration: i,
                    deadline_s: opts.deadline_s,
                })
            }
        };
        let stop = start + rtt;
        clock = stop;
        if received == sent {
            samples_ms.push((stop - start) * 1e3);
        }
    }
    let avg_ms = (!samples_ms.is_empty())
        .then(|| samples_ms.iter().sum::<f64>() / samples_ms.len() as f64);
    Ok(LatencyResult {
        config_id: config_id.to_string(),
        link: link.label(),
        valid: avg_ms.is_some(),
        samples_ms,
        avg_ms,
        iterations: opts.iterations,
    })
}
