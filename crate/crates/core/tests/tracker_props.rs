use chrono::{Duration, TimeZone, Utc};
use proptest::prelude::*;
use trackstation::geo::{destination, GeoPoint};
use trackstation::tracker::{
    shortest_delta, slew_step, update_estimate, GimbalState, ServoCommand, Tracker, TrackerConfig,
};

const EPS: f64 = 1e-9;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn slew_is_rate_limited_and_never_overshoots(
        az0 in 0.0f64..360.0,
        el0 in -10.0f64..90.0,
        az_rate in 1.0f64..120.0,
        el_rate in 1.0f64..60.0,
        steps in prop::collection::vec((0.0f64..360.0, -10.0f64..90.0, 0.001f64..2.0, 1usize..20), 1..12),
    ) {
        let t = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        let mut s = GimbalState::new(az0, el0, az_rate, el_rate).unwrap();
        for (taz, tel, dt, ticks) in steps {
            let cmd = ServoCommand::new(taz, tel, t);
            for _ in 0..ticks {
                let before = shortest_delta(s.azimuth_deg, taz);
                let el_before = tel - s.elevation_deg;
                let next = slew_step(&s, &cmd, dt);
                let moved = shortest_delta(s.azimuth_deg, next.azimuth_deg).abs();
                prop_assert!(moved <= az_rate * dt + EPS, "moved {moved} > {}", az_rate * dt);
                prop_assert!((next.elevation_deg - s.elevation_deg).abs() <= el_rate * dt + EPS);
                let after = shortest_delta(next.azimuth_deg, taz);
                prop_assert!(after.abs() <= before.abs() + EPS);
                prop_assert!(after == 0.0 || after.signum() == before.signum() || after.abs() < EPS,
                    "overshot: before {before} after {after}");
                let el_after = tel - next.elevation_deg;
                prop_assert!(el_after.abs() <= el_before.abs() + EPS);
                prop_assert!(el_after == 0.0 || el_after.signum() == el_before.signum());
                prop_assert!((0.0..360.0).contains(&next.azimuth_deg));
                s = next;
            }
        }
    }

    #[test]
    fn tracker_ticks_respect_rate_in_every_mode(
        rate in 5.0f64..90.0,
        fixes in prop::collection::vec(prop::option::of((0.0f64..360.0, 5.0f64..200.0)), 1..40),
        dt in 0.05f64..1.0,
    ) {
        let base = GeoPoint::new(52.9, -1.18).unwrap();
        let t0 = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        let mut tr = Tracker::new(TrackerConfig { max_az_rate_deg_s: rate, ..TrackerConfig::default() }).unwrap();
        let mut est = None;
        for (i, f) in fixes.into_iter().enumerate() {
            let now = t0 + Duration::milliseconds((i as f64 * dt * 1e3) as i64);
            if let Some((b, d)) = f {
                est = update_estimate(&base, &destination(&base, b, d), now).ok();
            }
            let before = tr.state().azimuth_deg;
            let out = tr.tick(est.as_ref(), now, dt, 5.0);
            let moved = shortest_delta(before, out.state.azimuth_deg).abs();
            prop_assert!(moved <= rate * dt + EPS, "{:?} moved {moved}", out.state.mode);
        }
    }
}
