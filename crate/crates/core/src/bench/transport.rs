use crate::linkmodel::{self, LinkConfig, Pacing};

/// A byte that made it to the far end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub byte: u8,
    pub at_s: f64,
}

/// The serial path between the two bench devices.
///
/// Time is simulated: a stream written at t = 0 yields arrival times at the
/// far end, and single-byte frames yield a one-way latency.
pub trait SerialLink {
    fn label(&self) -> String;

    /// Delivers `bytes` written back-to-back starting at t = 0.
    fn transmit(&mut self, bytes: &[u8]) -> Vec<Arrival>;

    /// One-way latency of an `n_bytes` frame, `None` if it never arrives.
    fn frame_latency(&self, n_bytes: usize) -> Option<f64>;

    /// The UART rate the host side is clocked at.
    fn uart_baud(&self) -> u32;
}

/// Two UARTs joined by a wire.
#[derive(Debug, Clone, Copy)]
pub struct WiredLink {
    pub baud: u32,
}

impl SerialLink for WiredLink {
    fn label(&self) -> String {
        format!("wired@{}", self.baud)
    }

    fn transmit(&mut self, bytes: &[u8]) -> Vec<Arrival> {
        let byte_time = linkmodel::uart_transfer_time(1, self.baud);
        bytes
            .iter()
            .enumerate()
            .map(|(k, &byte)| Arrival {
                byte,
                at_s: (k + 1) as f64 * byte_time,
            })
            .collect()
    }

    fn frame_latency(&self, n_bytes: usize) -> Option<f64> {
        Some(linkmodel::uart_transfer_time(n_bytes, self.baud))
    }

    fn uart_baud(&self) -> u32 {
        self.baud
    }
}

/// A pair of simulated radio modules at short range.
#[derive(Debug, Clone)]
pub struct RadioLink {
    pub config: LinkConfig,
    pub pacing: Pacing,
}

impl RadioLink {
    pub fn new(config: LinkConfig) -> Self {
        RadioLink {
            config,
            pacing: Pacing::Continuous,
        }
    }

    pub fn paced(mut self, pacing: Pacing) -> Self {
        self.pacing = pacing;
        self
    }
}

impl SerialLink for RadioLink {
    fn label(&self) -> String {
        self.config.label()
    }

    fn transmit(&mut self, bytes: &[u8]) -> Vec<Arrival> {
        if bytes.is_empty() {
            return Vec::new();
        }
        let schedule = linkmodel::schedule_transfer(&self.config, bytes.len(), self.pacing);
        // The module overhead stretches the whole stream, so that the final
        // byte lands at exactly the modeled transfer duration.
        let last = schedule.last_departure_s;
        let scale = if last > 0.0 {
            1.0 + self.config.transfer_overhead_s / last
        } else {
            1.0
        };
        bytes
            .iter()
            .zip(&schedule.departures)
            .filter_map(|(&byte, dep)| dep.map(|d| Arrival { byte, at_s: d * scale }))
            .collect()
    }

    fn frame_latency(&self, n_bytes: usize) -> Option<f64> {
        Some(linkmodel::one_way_latency(&self.config, n_bytes))
    }

    fn uart_baud(&self) -> u32 {
        self.config.uart_baud
    }
}

/// Wraps a link and flips bits of one byte position in every stream.
#[derive(Debug, Clone)]
pub struct CorruptingLink<L> {
    pub inner: L,
    pub index: usize,
    pub mask: u8,
}

impl<L: SerialLink> SerialLink for CorruptingLink<L> {
    fn label(&self) -> String {
        format!("{}+corrupt[{}]", self.inner.label(), self.index)
    }

    fn transmit(&mut self, bytes: &[u8]) -> Vec<Arrival> {
        let mut out = self.inner.transmit(bytes);
        if let Some(a) = out.get_mut(self.index) {
            a.byte ^= self.mask.max(1);
        }
        out
    }

    fn frame_latency(&self, n_bytes: usize) -> Option<f64> {
        self.inner.frame_latency(n_bytes)
    }

    fn uart_baud(&self) -> u32 {
        self.inner.uart_baud()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkmodel::{Calibration, LinkSpec, ModeName};

    #[test]
    fn wired_arrivals_are_uart_paced() {
        let mut w = WiredLink { baud: 9600 };
        let a = w.transmit(&[1, 2, 3]);
        assert_eq!(a.len(), 3);
        assert!((a[2].at_s - 30.0 / 9600.0).abs() < 1e-15);
    }

    #[test]
    fn radio_final_arrival_matches_transfer_model() {
        let cfg = Calibration::embedded()
            .link_config(&LinkSpec::new(ModeName::Fu1, 9600))
            .unwrap();
        let expected = linkmodel::simulate_transfer(&cfg, 500, Pacing::Continuous).duration_s;
        let mut r = RadioLink::new(cfg);
        let a = r.transmit(&[0u8; 500]);
        assert!((a.last().unwrap().at_s - expected).abs() < 1e-9);
        assert!(a.windows(2).all(|w| w[0].at_s < w[1].at_s));
    }

    #[test]
    fn corruption_hits_one_byte() {
        let mut c = CorruptingLink {
            inner: WiredLink { baud: 9600 },
            index: 1,
            mask: 0x01,
        };
        let a = c.transmit(b"abc");
        assert_eq!(a.iter().map(|x| x.byte).collect::<Vec<_>>(), b"acc");
    }
}
