use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::latency::LatencyResult;
use super::throughput::ThroughputResult;
use crate::linkmodel::{wired_round_trip, LinkSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeSummary {
    pub config_id: String,
    pub link: LinkSpec,
    pub sent: usize,
    pub successful: usize,
    pub lost: usize,
    pub corrupted: usize,
    pub anomalies: usize,
    pub furthest_m: Option<f64>,
    /// Delivery ratio within `reference_consistent_m`, when that is set.
    pub consistent_ratio: Option<f64>,
    pub reference_furthest_m: Option<f64>,
    pub reference_consistent_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BenchRecord {
    Throughput {
        link: LinkSpec,
        result: ThroughputResult,
        reference_time_s: Option<f64>,
        reference_wired_s: Option<f64>,
    },
    Latency {
        link: LinkSpec,
        result: LatencyResult,
        reference_avg_ms: Option<f64>,
        reference_wired_ms: Option<f64>,
    },
    Range(RangeSummary),
}

#[derive(Clone, Copy)]
enum Align {
    Left,
    Right,
}

struct Table {
    title: &'static str,
    columns: Vec<(&'static str, Align)>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn render(&self, out: &mut String) {
        let widths: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, (h, _))| {
                self.rows
                    .iter()
                    .map(|r| r[i].len())
                    .chain([h.len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: Vec<&str>, out: &mut String| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&self.columns)
                .zip(&widths)
                .map(|((c, (_, a)), &w)| match a {
                    Align::Left => format!("{c:<w$}"),
                    Align::Right => format!("{c:>w$}"),
                })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        let _ = writeln!(out, "{}", self.title);
        line(self.columns.iter().map(|(h, _)| *h).collect(), out);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        let _ = writeln!(out, "{}", rule.join("  "));
        for r in &self.rows {
            line(r.iter().map(String::as_str).collect(), out);
        }
    }
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

fn deviation(value: Option<f64>, reference: Option<f64>) -> String {
    match (value, reference) {
        (Some(v), Some(r)) if r != 0.0 => format!("{:+.2}%", (v - r) / r * 100.0),
        _ => "-".to_string(),
    }
}

fn antennas(l: &LinkSpec) -> String {
    format!("{}/{}", l.tx_antenna.as_str(), l.rx_antenna.as_str())
}

fn throughput_table() -> Table {
    use Align::*;
    Table {
        title: "Throughput (10,000 bytes)",
        columns: vec![
            ("ID", Left),
            ("Baud", Right),
            ("Mode", Left),
            ("Time [s]", Right),
            ("Ref time [s]", Right),
            ("Dev", Right),
            ("Wired [s]", Right),
            ("Ref wired [s]", Right),
            ("Min calc [s]", Right),
            ("Result", Left),
        ],
        rows: Vec::new(),
    }
}

fn latency_table() -> Table {
    use Align::*;
    Table {
        title: "Latency (1-byte echo)",
        columns: vec![
            ("ID", Left),
            ("Baud", Right),
            ("Mode", Left),
            ("Avg [ms]", Right),
            ("Ref avg [ms]", Right),
            ("Dev", Right),
            ("Wired [ms]", Right),
            ("Ref wired [ms]", Right),
            ("Samples", Right),
        ],
        rows: Vec::new(),
    }
}

fn range_table() -> Table {
    use Align::*;
    Table {
        title: "Range",
        columns: vec![
            ("ID", Left),
            ("Baud", Right),
            ("Mode", Left),
            ("Antennas", Left),
            ("Sent", Right),
            ("Received", Right),
            ("Lost", Right),
            ("Furthest [m]", Right),
            ("Ref [m]", Right),
            ("Dev", Right),
            ("Consistent", Right),
        ],
        rows: Vec::new(),
    }
}

/// Renders records as aligned text, one table per record kind, rows in
/// input order. With no records every table is emitted header-only.
pub fn report_tables(records: &[BenchRecord]) -> String {
    let mut tp = throughput_table();
    let mut lat = latency_table();
    let mut rng = range_table();
    for r in records {
        match r {
            BenchRecord::Throughput {
                link,
                result,
                reference_time_s,
                reference_wired_s,
            } => tp.rows.push(vec![
                result.config_id.clone(),
                link.baud.to_string(),
                link.mode.to_string(),
                format!("{:.6}", result.duration_s),
                opt(*reference_time_s, 6),
                deviation(Some(result.duration_s), *reference_time_s),
                format!("{:.6}", result.wired_equivalent_s),
                opt(*reference_wired_s, 6),
                format!("{:.6}", result.min_calculated_s),
                if result.passed { "passed" } else { "FAILED" }.to_string(),
            ]),
            BenchRecord::Latency {
                link,
                result,
                reference_avg_ms,
                reference_wired_ms,
            } => lat.rows.push(vec![
                result.config_id.clone(),
                link.baud.to_string(),
                link.mode.to_string(),
                opt(result.avg_ms, 4),
                opt(*reference_avg_ms, 4),
                deviation(result.avg_ms, *reference_avg_ms),
                format!("{:.4}", wired_round_trip(link.baud) * 1e3),
                opt(*reference_wired_ms, 4),
                format!("{}/{}", result.samples_ms.len(), result.iterations),
            ]),
            BenchRecord::Range(s) => rng.rows.push(vec![
                s.config_id.clone(),
                s.link.baud.to_string(),
                s.link.mode.to_string(),
                antennas(&s.link),
                s.sent.to_string(),
                s.successful.to_string(),
                s.lost.to_string(),
                opt(s.furthest_m, 2),
                opt(s.reference_furthest_m, 2),
                deviation(s.furthest_m, s.reference_furthest_m),
                match (s.consistent_ratio, s.reference_consistent_m) {
                    (Some(r), Some(m)) => format!("{:.1}% <= {m} m", r * 100.0),
                    _ => "-".to_string(),
                },
            ]),
        }
    }
    let tables: Vec<&Table> = if records.is_empty() {
        vec![&tp, &lat, &rng]
    } else {
        [&tp, &lat, &rng]
            .into_iter()
            .filter(|t| !t.rows.is_empty())
            .collect()
    };
    let mut out = String::new();
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        t.render(&mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkmodel::ModeName;

    fn tp(id: &str) -> BenchRecord {
        BenchRecord::Throughput {
            link: LinkSpec::new(ModeName::Fu3, 9600),
            result: ThroughputResult {
                config_id: id.into(),
                link: "FU3@9600".into(),
                duration_s: 10.56,
                passed: true,
                failure: None,
                bytes_received: 10_000,
                wired_equivalent_s: 10.4167,
                min_calculated_s: 10.4167,
            },
            reference_time_s: Some(10.560724),
            reference_wired_s: None,
        }
    }

    #[test]
    fn empty_input_gives_headers_only() {
        let out = report_tables(&[]);
        assert!(out.contains("Time [s]") && out.contains("Avg [ms]") && out.contains("Furthest [m]"));
        assert_eq!(out.lines().count(), 3 * 3 + 2);
    }

    #[test]
    fn rows_keep_order_and_output_is_stable() {
        let recs = vec![tp("2"), tp("1")];
        let a = report_tables(&recs);
        assert_eq!(a, report_tables(&recs));
        let ids: Vec<_> = a.lines().skip(3).map(|l| l.split_whitespace().next().unwrap()).collect();
        assert_eq!(ids, ["2", "1"]);
        assert!(!a.contains("Latency"));
    }

    #[test]
    fn kinds_are_grouped() {
        let lat = BenchRecord::Latency {
            link: LinkSpec::new(ModeName::Fu1, 9600),
            result: LatencyResult {
                config_id: "4".into(),
                link: "FU1@9600".into(),
                samples_ms: vec![32.0; 10],
                avg_ms: Some(32.0),
                iterations: 10,
                valid: true,
            },
            reference_avg_ms: Some(32.6835997),
            reference_wired_ms: Some(1.9512919),
        };
        let out = report_tables(&[tp("1"), lat, tp("2")]);
        let tp_at = out.find("Throughput").unwrap();
        let lat_at = out.find("Latency").unwrap();
        assert!(tp_at < lat_at);
        let section = &out[tp_at..lat_at];
        assert_eq!(section.lines().filter(|l| l.contains("passed")).count(), 2);
    }
}
