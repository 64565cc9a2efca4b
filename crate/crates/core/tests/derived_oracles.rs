//! Values the link model must agree with, each recomputed here from first
//! principles or from the recorded measurements it is derived from.

use trackstation::linkmodel::{
    air_payload_rate, antenna_gain, effective_max_range, one_way_latency, packet_outcome,
    round_trip_latency, uart_transfer_time, wired_round_trip, AntennaKind, Calibration, ChannelState,
    LinkSpec, LossCause, ModeName, PacketOutcome,
};

fn cal() -> Calibration {
    Calibration::embedded()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn uart_floor_is_ten_bits_per_byte() {
    for baud in [1200u32, 2400, 4800, 9600, 19_200, 38_400, 57_600, 115_200] {
        let oracle = 10_000.0 * 10.0 / baud as f64;
        assert!((uart_transfer_time(10_000, baud) - oracle).abs() < 1e-9);
    }
    assert!((uart_transfer_time(10_000, 1200) - 83.333_333_33).abs() < 1e-6);
    assert!((uart_transfer_time(10_000, 9600) - 10.416_666_67).abs() < 1e-6);
}

#[test]
fn calibrated_air_rates_come_from_recorded_durations() {
    let c = cal();
    let fu4 = air_payload_rate(&c.mode(ModeName::Fu4), 1200);
    let fu2 = air_payload_rate(&c.mode(ModeName::Fu2), 4800);
    assert!(rel(fu4, 10_000.0 / 194.436_825) < 1e-9, "{fu4}");
    assert!(rel(fu2, 10_000.0 / 50.904_906) < 1e-9, "{fu2}");
    let fu1_lo = air_payload_rate(&c.mode(ModeName::Fu1), 9600);
    let fu1_hi = air_payload_rate(&c.mode(ModeName::Fu1), 115_200);
    assert_eq!(fu1_lo, fu1_hi);
    assert!((fu1_lo * 10.0 - 250_000.0).abs() < 1e-6);
}

#[test]
fn wired_round_trip_is_two_frames() {
    assert!((wired_round_trip(9600) - 2.0 * 10.0 / 9600.0).abs() < 1e-12);
    assert!((wired_round_trip(9600) * 1e3 - 2.083).abs() < 1e-3);
}

#[test]
fn latency_accounting_identity() {
    let c = cal();
    for (mode, baud) in [(ModeName::Fu3, 9600), (ModeName::Fu4, 1200), (ModeName::Fu1, 115_200)] {
        let link = c.link_config(&LinkSpec::new(mode, baud)).unwrap();
        for n in [1usize, 20, 75] {
            let air = air_payload_rate(&link.mode, baud);
            let oracle = n as f64 * 10.0 / baud as f64 + n as f64 * 10.0 / (8.0 * air) + link.per_direction_overhead_s;
            assert!((one_way_latency(&link, n) - oracle).abs() < 1e-12, "{mode}@{baud} n={n}");
        }
        assert!((round_trip_latency(&link) - 2.0 * one_way_latency(&link, 1)).abs() < 1e-12);
    }
}

#[test]
fn yagi_perpendicular_deficit_from_recorded_ranges() {
    let c = cal();
    let yagi = c.link_config(&LinkSpec::new(ModeName::Fu3, 9600).with_antennas(AntennaKind::Yagi, AntennaKind::OmniUnity)).unwrap();
    let oracle_db = 20.0 * (137.95f64 / 46.99).log10();
    let deficit = antenna_gain(&yagi.tx_antenna, 0.0) - antenna_gain(&yagi.tx_antenna, 90.0);
    assert!((deficit - oracle_db).abs() < 0.01, "{deficit} vs {oracle_db}");
    assert!((deficit - 9.35).abs() < 0.01);
    let r0 = effective_max_range(&yagi, 0.0, 0.0);
    let r90 = effective_max_range(&yagi, 90.0, 0.0);
    assert!(r0 >= 137.95 - 1e-6, "{r0}");
    assert!(rel(r0 / r90, 137.95 / 46.99) < 1e-6);
}

#[test]
fn stub_ranges_match_recorded_walks() {
    let c = cal();
    for (mode, baud, want) in [
        (ModeName::Fu4, 1200, 60.84),
        (ModeName::Fu2, 4800, 9.15),
        (ModeName::Fu1, 9600, 12.14),
        (ModeName::Fu3, 9600, 37.55),
        (ModeName::Fu3, 38_400, 17.6),
        (ModeName::Fu3, 115_200, 13.85),
    ] {
        let link = c.link_config(&LinkSpec::new(mode, baud)).unwrap();
        let r = effective_max_range(&link, 0.0, 0.0);
        assert!((r - want).abs() < 1e-6, "{mode}@{baud}: {r}");
    }
}

#[test]
fn hard_limits() {
    let c = cal();
    let fu4 = c.link_config(&LinkSpec::new(ModeName::Fu4, 1200)).unwrap();
    assert_eq!(
        packet_outcome(&fu4, &ChannelState::at_distance(100.0), 10),
        PacketOutcome::Lost(LossCause::OutOfRange)
    );
    let fu2 = c.link_config(&LinkSpec::new(ModeName::Fu2, 4800)).unwrap();
    assert_eq!(
        packet_outcome(&fu2, &ChannelState::at_distance(1.0), 21),
        PacketOutcome::Lost(LossCause::OversizePacket)
    );
    assert_eq!(packet_outcome(&fu2, &ChannelState::at_distance(1.0), 20), PacketOutcome::Delivered);
}
