//! Distance and bearing against an independent vector-algebra oracle.

use proptest::prelude::*;
use trackstation::geo::{destination, haversine_distance, initial_bearing, GeoPoint, EARTH_RADIUS_M};

type V3 = [f64; 3];

fn unit(lat: f64, lon: f64) -> V3 {
    let (φ, λ) = (lat.to_radians(), lon.to_radians());
    [φ.cos() * λ.cos(), φ.cos() * λ.sin(), φ.sin()]
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

/// Central angle from the cross and dot products, times the radius.
fn oracle_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (u, v) = (unit(a.0, a.1), unit(b.0, b.1));
    EARTH_RADIUS_M * norm(cross(u, v)).atan2(dot(u, v))
}

/// Bearing as the angle of the great-circle tangent in the local
/// east/north frame.
fn oracle_bearing(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (u, v) = (unit(a.0, a.1), unit(b.0, b.1));
    let z = [0.0, 0.0, 1.0];
    let east = cross(z, u);
    let east_n = norm(east);
    let east = [east[0] / east_n, east[1] / east_n, east[2] / east_n];
    let north = cross(u, east);
    // Tangent at u towards v: component of v orthogonal to u.
    let d = dot(u, v);
    let t = [v[0] - d * u[0], v[1] - d * u[1], v[2] - d * u[2]];
    let deg = dot(t, east).atan2(dot(t, north)).to_degrees();
    (deg + 360.0) % 360.0
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

fn p(lat: f64, lon: f64) -> GeoPoint {
    GeoPoint::new(lat, lon).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn distance_matches_vector_oracle(
        lat1 in -89.0f64..89.0, lon1 in -180.0f64..180.0,
        lat2 in -89.0f64..89.0, lon2 in -180.0f64..180.0,
    ) {
        let want = oracle_distance((lat1, lon1), (lat2, lon2));
        let got = haversine_distance(&p(lat1, lon1), &p(lat2, lon2));
        prop_assume!(want > 1.0);
        prop_assert!(((got - want) / want).abs() < 1e-3, "got {got} want {want}");
    }

    #[test]
    fn bearing_matches_vector_oracle(
        lat1 in -89.0f64..89.0, lon1 in -180.0f64..180.0,
        lat2 in -89.0f64..89.0, lon2 in -180.0f64..180.0,
    ) {
        let d = oracle_distance((lat1, lon1), (lat2, lon2));
        prop_assume!(d > 1.0 && d < 0.999 * std::f64::consts::PI * EARTH_RADIUS_M);
        let want = oracle_bearing((lat1, lon1), (lat2, lon2));
        let got = initial_bearing(&p(lat1, lon1), &p(lat2, lon2)).unwrap();
        prop_assert!(angle_diff(got, want) < 0.36, "got {got} want {want}");
    }

    #[test]
    fn destination_inverts_distance_and_bearing(
        lat in -80.0f64..80.0, lon in -180.0f64..180.0,
        bearing in 0.0f64..360.0, dist in 1.0f64..500_000.0,
    ) {
        let a = p(lat, lon);
        let b = destination(&a, bearing, dist);
        let back = oracle_distance((lat, lon), (b.lat_deg(), b.lon_deg()));
        prop_assert!((back - dist).abs() / dist < 1e-6);
        prop_assert!(angle_diff(oracle_bearing((lat, lon), (b.lat_deg(), b.lon_deg())), bearing) < 1e-4);
    }
}

#[test]
fn fixed_points() {
    let z = p(0.0, 0.0);
    assert!((haversine_distance(&z, &p(0.0, 1.0)) - 111_195.0).abs() < 1.0);
    assert!((haversine_distance(&z, &p(0.0, 180.0)) - std::f64::consts::PI * EARTH_RADIUS_M).abs() < 10.0);
    assert!((oracle_distance((0.0, 0.0), (0.0, 1.0)) - EARTH_RADIUS_M * 1f64.to_radians()).abs() < 1e-6);
}

#[test]
fn london_to_paris_bearing_is_the_oracle_value() {
    let (london, paris) = ((51.5074, -0.1278), (48.8566, 2.3522));
    let oracle = oracle_bearing(london, paris);
    let got = initial_bearing(&p(london.0, london.1), &p(paris.0, paris.1)).unwrap();
    assert!((oracle - 148.1156).abs() < 1e-3, "oracle {oracle}");
    assert!(angle_diff(got, oracle) < 1e-6, "got {got}");
    let d = haversine_distance(&p(london.0, london.1), &p(paris.0, paris.1));
    assert!((d - oracle_distance(london, paris)).abs() < 1e-3);
}

#[test]
fn fix_at_table_distance() {
    let base = p(52.9115, -1.1847);
    let fix = destination(&base, 58.0, 60.84);
    assert!((haversine_distance(&base, &fix) - 60.84).abs() < 0.01);
}
