//! Throughput, latency and range procedures run against the simulated link,
//! plus log matching and report rendering.

mod latency;
mod matching;
pub mod presets;
mod range;
mod report;
mod throughput;
pub mod transport;

pub use latency::{
    run_latency_test, LatencyOptions, LatencyResult, Responder, DEFAULT_ECHO_DEADLINE_S,
    DEFAULT_ITERATIONS,
};
pub use matching::{
    delivery_ratio_within, export_geojson, furthest_success_distance, match_transmissions,
    TransmissionMatch,
};
pub use presets::BenchSuite;
pub use range::{
    default_start_time, packet_count, packet_seed, run_range_scenario, AntennaAim, RangeLogs,
    RangeScenario, DEFAULT_FIX_INTERVAL_S, DEFAULT_WALK_SPEED_M_S,
};
pub use report::{report_tables, BenchRecord, RangeSummary};
pub use throughput::{
    reference_payload, run_throughput_test, ThroughputResult, END_MARKER, START_MARKER,
};
pub use transport::{Arrival, CorruptingLink, RadioLink, SerialLink, WiredLink};

use thiserror::Error;

use crate::linkmodel::Calibration;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("no echo within {deadline_s} s on iteration {iteration}")]
    EchoTimeout { iteration: usize, deadline_s: f64 },
    #[error("no successful transmissions")]
    NoSuccesses,
    #[error("a marker occurs inside the payload")]
    MarkerInPayload,
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("config: {0}")]
    Config(String),
}

/// A range run together with its analysis.
#[derive(Debug, Clone)]
pub struct RangeRun {
    pub scenario: RangeScenario,
    pub logs: RangeLogs,
    pub matched: TransmissionMatch,
    pub summary: RangeSummary,
}

pub fn run_throughput_suite(cal: &Calibration, suite: &BenchSuite) -> Result<Vec<BenchRecord>, BenchError> {
    suite
        .throughput
        .iter()
        .map(|e| {
            let mut link = presets::throughput_link(cal, e)?;
            let result =
                run_throughput_test(&mut link, &e.id, reference_payload(), &START_MARKER, &END_MARKER)?;
            Ok(BenchRecord::Throughput {
                link: e.link.clone(),
                result,
                reference_time_s: e.reference_time_s,
                reference_wired_s: e.reference_wired_s,
            })
        })
        .collect()
}

pub fn run_latency_suite(
    cal: &Calibration,
    suite: &BenchSuite,
    opts: LatencyOptions,
) -> Result<Vec<BenchRecord>, BenchError> {
    suite
        .latency
        .iter()
        .map(|e| {
            let mut link = presets::latency_link(cal, e)?;
            let result = run_latency_test(&mut link, &e.id, opts)?;
            Ok(BenchRecord::Latency {
                link: e.link.clone(),
                result,
                reference_avg_ms: e.reference_avg_ms,
                reference_wired_ms: e.reference_wired_ms,
            })
        })
        .collect()
}

pub fn run_range_entry(
    cal: &Calibration,
    suite: &BenchSuite,
    entry: &presets::RangeEntry,
    seed: u64,
) -> Result<RangeRun, BenchError> {
    let scenario = presets::range_scenario(cal, &suite.walk, entry, seed)?;
    let logs = run_range_scenario(&scenario)?;
    let matched = match_transmissions(&logs.sent_log, &logs.received_log);
    let base = scenario.base_position;
    let summary = RangeSummary {
        config_id: entry.id.clone(),
        link: entry.link.clone(),
        sent: logs.sent_log.len(),
        successful: matched.successful.len(),
        lost: matched.lost.len(),
        corrupted: matched.corrupted.len(),
        anomalies: matched.anomalies.len(),
        furthest_m: furthest_success_distance(&matched, &base).ok(),
        consistent_ratio: entry
            .reference_consistent_m
            .and_then(|r| delivery_ratio_within(&matched, &base, r)),
        reference_furthest_m: entry.reference_furthest_m,
        reference_consistent_m: entry.reference_consistent_m,
    };
    Ok(RangeRun {
        scenario,
        logs,
        matched,
        summary,
    })
}

pub fn run_range_suite(cal: &Calibration, suite: &BenchSuite, seed: u64) -> Result<Vec<RangeRun>, BenchError> {
    suite
        .range
        .iter()
        .map(|e| run_range_entry(cal, suite, e, seed))
        .collect()
}
