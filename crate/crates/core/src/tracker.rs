//! Antenna-orientation controller.
//!
//! A pure state machine over [`GimbalState`]: fresh GPS estimates drive a
//! slew-rate-limited pointing command, stale telemetry falls back to a 360°
//! acquisition sweep, and manual mode ignores telemetry entirely. The
//! [`Tracker`] wrapper owns the state and advances it once per clock tick.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{haversine_distance, initial_bearing, normalize_deg, GeoError, GeoPoint};

/// Mechanical elevation limits in degrees.
pub const ELEVATION_MIN_DEG: f64 = -10.0;
pub const ELEVATION_MAX_DEG: f64 = 90.0;

const ANGLE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackerError {
    #[error("azimuth {0} outside [0, 360)")]
    Azimuth(f64),
    #[error("elevation {0} outside [-10, 90]")]
    Elevation(f64),
    #[error("slew rates must be positive")]
    Rate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GimbalMode {
    Tracking,
    Sweeping,
    Manual,
    Idle,
}

impl GimbalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GimbalMode::Tracking => "tracking",
            GimbalMode::Sweeping => "sweeping",
            GimbalMode::Manual => "manual",
            GimbalMode::Idle => "idle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepDirection {
    Cw,
    Ccw,
}

impl SweepDirection {
    pub fn reversed(self) -> Self {
        match self {
            SweepDirection::Cw => SweepDirection::Ccw,
            SweepDirection::Ccw => SweepDirection::Cw,
        }
    }

    fn sign(self) -> f64 {
        match self {
            SweepDirection::Cw => 1.0,
            SweepDirection::Ccw => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GimbalState {
    /// Commanded azimuth, `[0, 360)` clockwise from true north.
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub max_az_rate_deg_s: f64,
    pub max_el_rate_deg_s: f64,
    pub mode: GimbalMode,
    /// Rotation accumulated in the current sweep revolution.
    pub sweep_progress_deg: f64,
    /// Offset between where the gimbal thinks it points and where it does.
    pub reference_error_deg: f64,
}

impl GimbalState {
    pub fn new(
        azimuth_deg: f64,
        elevation_deg: f64,
        max_az_rate_deg_s: f64,
        max_el_rate_deg_s: f64,
    ) -> Result<Self, TrackerError> {
        if !(0.0..360.0).contains(&azimuth_deg) {
            return Err(TrackerError::Azimuth(azimuth_deg));
        }
        if !(ELEVATION_MIN_DEG..=ELEVATION_MAX_DEG).contains(&elevation_deg) {
            return Err(TrackerError::Elevation(elevation_deg));
        }
        if !(max_az_rate_deg_s > 0.0 && max_el_rate_deg_s > 0.0) {
            return Err(TrackerError::Rate);
        }
        Ok(GimbalState {
            azimuth_deg,
            elevation_deg,
            max_az_rate_deg_s,
            max_el_rate_deg_s,
            mode: GimbalMode::Idle,
            sweep_progress_deg: 0.0,
            reference_error_deg: 0.0,
        })
    }

    /// Where the antenna actually points once reference drift is included.
    pub fn true_azimuth(&self) -> f64 {
        normalize_deg(self.azimuth_deg + self.reference_error_deg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimate {
    pub last_fix: GeoPoint,
    pub received_at: DateTime<Utc>,
    pub bearing_deg: f64,
    pub distance_m: f64,
    /// Look angle above the horizon; zero when either altitude is unknown.
    pub elevation_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServoCommand {
    pub target_azimuth_deg: f64,
    pub target_elevation_deg: f64,
    pub issue_time: DateTime<Utc>,
}

impl ServoCommand {
    /// Builds a command with the targets wrapped and clamped to the mount.
    pub fn new(azimuth_deg: f64, elevation_deg: f64, issue_time: DateTime<Utc>) -> Self {
        ServoCommand {
            target_azimuth_deg: normalize_deg(azimuth_deg),
            target_elevation_deg: elevation_deg.clamp(ELEVATION_MIN_DEG, ELEVATION_MAX_DEG),
            issue_time,
        }
    }
}

pub fn update_estimate(
    base: &GeoPoint,
    fix: &GeoPoint,
    now: DateTime<Utc>,
) -> Result<TargetEstimate, GeoError> {
    let bearing_deg = initial_bearing(base, fix)?;
    let distance_m = haversine_distance(base, fix);
    let elevation_deg = match (base.alt_m(), fix.alt_m()) {
        (Some(b), Some(f)) => (f - b).atan2(distance_m).to_degrees(),
        _ => 0.0,
    };
    Ok(TargetEstimate {
        last_fix: *fix,
        received_at: now,
        bearing_deg,
        distance_m,
        elevation_deg,
    })
}

/// Minimal signed rotation from `current_deg` to `target_deg`, in `(-180, 180]`.
pub fn shortest_delta(current_deg: f64, target_deg: f64) -> f64 {
    let d = (target_deg - current_deg).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

/// Unsigned pointing error in `[0, 180]`.
pub fn pointing_error(s: &GimbalState, true_bearing_deg: f64) -> f64 {
    shortest_delta(s.true_azimuth(), true_bearing_deg).abs()
}

fn approach(current: f64, delta: f64, max_step: f64) -> (f64, bool) {
    if delta.abs() <= max_step + ANGLE_EPSILON {
        (current + delta, true)
    } else {
        (current + max_step.copysign(delta), false)
    }
}

/// Moves towards `cmd` by at most one rate-limited step per axis, landing
/// exactly on the target when it is within reach.
pub fn slew_step(s: &GimbalState, cmd: &ServoCommand, dt: f64) -> GimbalState {
    let mut next = *s;
    if !(dt > 0.0) {
        return next;
    }
    let target_az = normalize_deg(cmd.target_azimuth_deg);
    let (az, reached) = approach(
        s.azimuth_deg,
        shortest_delta(s.azimuth_deg, target_az),
        s.max_az_rate_deg_s * dt,
    );
    next.azimuth_deg = if reached { target_az } else { normalize_deg(az) };

    let target_el = cmd
        .target_elevation_deg
        .clamp(ELEVATION_MIN_DEG, ELEVATION_MAX_DEG);
    let (el, reached) = approach(
        s.elevation_deg,
        target_el - s.elevation_deg,
        s.max_el_rate_deg_s * dt,
    );
    next.elevation_deg = if reached { target_el } else { el };
    next
}

/// Advances a sweep by `max_az_rate_deg_s * dt`. The flag reports that a
/// full revolution completed during this step.
pub fn sweep_step(s: &GimbalState, dt: f64, direction: SweepDirection) -> (GimbalState, bool) {
    let mut next = *s;
    if s.mode != GimbalMode::Sweeping || !(dt > 0.0) {
        return (next, false);
    }
    let step = s.max_az_rate_deg_s * dt;
    next.azimuth_deg = normalize_deg(s.azimuth_deg + direction.sign() * step);
    next.sweep_progress_deg = s.sweep_progress_deg + step;
    let completed = next.sweep_progress_deg >= 360.0 - ANGLE_EPSILON;
    if completed {
        next.sweep_progress_deg = (next.sweep_progress_deg - 360.0).max(0.0);
        if next.sweep_progress_deg < ANGLE_EPSILON {
            next.sweep_progress_deg = 0.0;
        }
    }
    (next, completed)
}

fn is_fresh(est: &TargetEstimate, now: DateTime<Utc>, staleness_limit_s: f64) -> bool {
    let age = (now - est.received_at).num_nanoseconds().unwrap_or(i64::MAX) as f64 / 1e9;
    age <= staleness_limit_s
}

/// One controller decision. Pure in its arguments.
///
/// * manual: no command, estimates ignored
/// * fresh estimate: track it (from any other mode)
/// * stale or missing estimate: sweep to reacquire
pub fn tracking_tick(
    s: &GimbalState,
    est: Option<&TargetEstimate>,
    now: DateTime<Utc>,
    staleness_limit_s: f64,
) -> (GimbalState, Option<ServoCommand>) {
    let mut next = *s;
    if s.mode == GimbalMode::Manual {
        return (next, None);
    }
    match est {
        Some(e) if is_fresh(e, now, staleness_limit_s) => {
            next.mode = GimbalMode::Tracking;
            next.sweep_progress_deg = 0.0;
            let cmd = ServoCommand::new(e.bearing_deg, e.elevation_deg, now);
            (next, Some(cmd))
        }
        _ => {
            if next.mode != GimbalMode::Sweeping {
                next.mode = GimbalMode::Sweeping;
                next.sweep_progress_deg = 0.0;
            }
            (next, None)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub max_az_rate_deg_s: f64,
    pub max_el_rate_deg_s: f64,
    /// `None` means three fix intervals.
    pub staleness_limit_s: Option<f64>,
    pub elevation_enabled: bool,
    /// Sweep rate, capped at the azimuth slew rate.
    pub sweep_rate_deg_s: Option<f64>,
    /// Reference drift accumulated per sweep revolution.
    pub drift_deg_per_rev: f64,
    pub alternate_sweep: bool,
    pub initial_azimuth_deg: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            max_az_rate_deg_s: 60.0,
            max_el_rate_deg_s: 30.0,
            staleness_limit_s: None,
            elevation_enabled: false,
            sweep_rate_deg_s: None,
            drift_deg_per_rev: 0.0,
            alternate_sweep: true,
            initial_azimuth_deg: 0.0,
        }
    }
}

impl TrackerConfig {
    pub fn staleness_limit(&self, fix_interval_s: f64) -> f64 {
        self.staleness_limit_s.unwrap_or(3.0 * fix_interval_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickOutput {
    pub state: GimbalState,
    pub command: Option<ServoCommand>,
    pub sweep_completed: Option<SweepDirection>,
}

/// Owns a [`GimbalState`] and advances it once per tick.
#[derive(Debug, Clone)]
pub struct Tracker {
    state: GimbalState,
    active: Option<ServoCommand>,
    direction: SweepDirection,
    config: TrackerConfig,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self, TrackerError> {
        let state = GimbalState::new(
            normalize_deg(config.initial_azimuth_deg),
            0.0,
            config.max_az_rate_deg_s,
            config.max_el_rate_deg_s,
        )?;
        Ok(Tracker {
            state,
            active: None,
            direction: SweepDirection::Cw,
            config,
        })
    }

    pub fn state(&self) -> &GimbalState {
        &self.state
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn active_command(&self) -> Option<&ServoCommand> {
        self.active.as_ref()
    }

    pub fn sweep_direction(&self) -> SweepDirection {
        self.direction
    }

    /// Holds `cmd` until tracking is resumed.
    pub fn set_manual(&mut self, cmd: ServoCommand) {
        self.state.mode = GimbalMode::Manual;
        self.active = Some(cmd);
    }

    pub fn start_sweep(&mut self) {
        self.state.mode = GimbalMode::Sweeping;
        self.state.sweep_progress_deg = 0.0;
        self.active = None;
    }

    /// Leaves manual or sweep mode; the next tick picks tracking or
    /// sweeping from estimate freshness.
    pub fn resume_tracking(&mut self) {
        self.state.mode = GimbalMode::Tracking;
        self.active = None;
    }

    /// Freezes the gimbal at its present pointing.
    pub fn hold(&mut self, now: DateTime<Utc>) {
        let s = self.state;
        self.set_manual(ServoCommand::new(s.azimuth_deg, s.elevation_deg, now));
    }

    pub fn tick(
        &mut self,
        estimate: Option<&TargetEstimate>,
        now: DateTime<Utc>,
        dt: f64,
        fix_interval_s: f64,
    ) -> TickOutput {
        let limit = self.config.staleness_limit(fix_interval_s);
        let (mut state, mut command) = tracking_tick(&self.state, estimate, now, limit);
        if !self.config.elevation_enabled {
            if let Some(c) = command.as_mut() {
                c.target_elevation_deg = 0.0;
            }
        }
        if command.is_some() {
            self.active = command;
        }

        let mut completed = None;
        match state.mode {
            GimbalMode::Sweeping => {
                let rate = self
                    .config
                    .sweep_rate_deg_s
                    .map_or(state.max_az_rate_deg_s, |r| r.min(state.max_az_rate_deg_s));
                let stepped = sweep_step(&state, dt * rate / state.max_az_rate_deg_s, self.direction);
                state = stepped.0;
                if stepped.1 {
                    completed = Some(self.direction);
                    state.reference_error_deg += self.direction.sign() * self.config.drift_deg_per_rev;
                    if self.config.alternate_sweep {
                        self.direction = self.direction.reversed();
                    }
                }
            }
            GimbalMode::Tracking | GimbalMode::Manual => {
                if let Some(cmd) = &self.active {
                    state = slew_step(&state, cmd, dt);
                }
            }
            GimbalMode::Idle => {}
        }
        self.state = state;
        TickOutput {
            state,
            command,
            sweep_completed: completed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo;
    use chrono::{Duration, TimeZone};

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 5, 15, 12, 0, 0).unwrap()
    }

    fn gimbal(az: f64) -> GimbalState {
        GimbalState::new(az, 0.0, 30.0, 30.0).unwrap()
    }

    fn estimate_at(bearing: f64, received_at: DateTime<Utc>) -> TargetEstimate {
        let base = GeoPoint::new(52.9, -1.18).unwrap();
        let fix = geo::destination(&base, bearing, 50.0);
        update_estimate(&base, &fix, received_at).unwrap()
    }

    #[test]
    fn estimate_geometry() {
        let base = GeoPoint::new(0.0, 0.0).unwrap();
        let east = GeoPoint::new(0.0, 0.001).unwrap();
        let e = update_estimate(&base, &east, t0()).unwrap();
        assert!((e.bearing_deg - 90.0).abs() < 1e-9);
        assert_eq!(e.received_at, t0());

        let far = geo::destination(&base, 10.0, 60.84);
        let e = update_estimate(&base, &far, t0()).unwrap();
        assert!((e.distance_m - 60.84).abs() < 0.01);

        let london = GeoPoint::new(51.5074, -0.1278).unwrap();
        let paris = GeoPoint::new(48.8566, 2.3522).unwrap();
        let e = update_estimate(&london, &paris, t0()).unwrap();
        assert!((e.bearing_deg - 148.1156).abs() < 0.5);

        assert_eq!(
            update_estimate(&base, &base, t0()),
            Err(GeoError::CoincidentPoints)
        );
    }

    #[test]
    fn elevation_from_altitudes() {
        let base = GeoPoint::new(0.0, 0.0).unwrap().with_alt(0.0);
        let fix = geo::destination(&base, 0.0, 100.0).with_alt(100.0);
        let e = update_estimate(&base, &fix, t0()).unwrap();
        assert!((e.elevation_deg - 45.0).abs() < 1e-6);
    }

    #[test]
    fn shortest_delta_examples() {
        assert_eq!(shortest_delta(350.0, 10.0), 20.0);
        assert_eq!(shortest_delta(10.0, 350.0), -20.0);
        assert_eq!(shortest_delta(123.0, 123.0), 0.0);
        assert_eq!(shortest_delta(0.0, 180.0), 180.0);
        assert_eq!(shortest_delta(180.0, 0.0), 180.0);
    }

    #[test]
    fn slew_examples() {
        let s = gimbal(40.0);
        let hold = ServoCommand::new(40.0, 0.0, t0());
        assert_eq!(slew_step(&s, &hold, 1.0), s);

        let cmd = ServoCommand::new(130.0, 0.0, t0());
        assert_eq!(slew_step(&s, &cmd, 1.0).azimuth_deg, 70.0);

        let near = ServoCommand::new(45.0, 0.0, t0());
        assert_eq!(slew_step(&s, &near, 1.0).azimuth_deg, 45.0);

        let wrap = ServoCommand::new(350.0, 0.0, t0());
        assert_eq!(slew_step(&gimbal(10.0), &wrap, 1.0).azimuth_deg, 350.0);
        assert_eq!(slew_step(&gimbal(20.0), &wrap, 0.5).azimuth_deg, 5.0);
    }

    #[test]
    fn slew_clamps_elevation_to_mount() {
        let cmd = ServoCommand {
            target_azimuth_deg: 0.0,
            target_elevation_deg: 120.0,
            issue_time: t0(),
        };
        let mut s = gimbal(0.0);
        for _ in 0..10 {
            s = slew_step(&s, &cmd, 1.0);
        }
        assert_eq!(s.elevation_deg, ELEVATION_MAX_DEG);
    }

    #[test]
    fn sweep_examples() {
        let mut s = gimbal(17.0);
        s.mode = GimbalMode::Sweeping;
        s.max_az_rate_deg_s = 10.0;
        let mut completions = 0;
        for _ in 0..36 {
            let (next, done) = sweep_step(&s, 1.0, SweepDirection::Cw);
            completions += done as u32;
            s = next;
        }
        assert_eq!(completions, 1);
        assert!((s.azimuth_deg - 17.0).abs() < 1e-9);

        let mut s = gimbal(355.0);
        s.mode = GimbalMode::Sweeping;
        s.max_az_rate_deg_s = 10.0;
        assert!((sweep_step(&s, 1.0, SweepDirection::Cw).0.azimuth_deg - 5.0).abs() < 1e-9);
        assert_eq!(sweep_step(&s, 0.0, SweepDirection::Cw).0, s);
    }

    #[test]
    fn tick_state_machine() {
        let fresh = estimate_at(90.0, t0());
        let (s, cmd) = tracking_tick(&gimbal(0.0), Some(&fresh), t0(), 15.0);
        assert_eq!(s.mode, GimbalMode::Tracking);
        assert!((cmd.unwrap().target_azimuth_deg - 90.0).abs() < 1e-6);

        let later = t0() + Duration::seconds(16);
        let (s2, cmd) = tracking_tick(&s, Some(&fresh), later, 15.0);
        assert_eq!(s2.mode, GimbalMode::Sweeping);
        assert!(cmd.is_none());

        let (s3, cmd) = tracking_tick(&s2, Some(&estimate_at(10.0, later)), later, 15.0);
        assert_eq!(s3.mode, GimbalMode::Tracking);
        assert!(cmd.is_some());

        let mut manual = gimbal(0.0);
        manual.mode = GimbalMode::Manual;
        let (s4, cmd) = tracking_tick(&manual, Some(&fresh), t0(), 15.0);
        assert_eq!(s4.mode, GimbalMode::Manual);
        assert!(cmd.is_none());

        let (acquire, cmd) = tracking_tick(&gimbal(0.0), None, t0(), 15.0);
        assert_eq!(acquire.mode, GimbalMode::Sweeping);
        assert!(cmd.is_none());
        let (lost, _) = tracking_tick(&s, None, t0(), 15.0);
        assert_eq!(lost.mode, GimbalMode::Sweeping);
    }

    #[test]
    fn pointing_error_examples() {
        assert_eq!(pointing_error(&gimbal(42.0), 42.0), 0.0);
        assert_eq!(pointing_error(&gimbal(0.0), 180.0), 180.0);
        assert_eq!(pointing_error(&gimbal(350.0), 10.0), 20.0);
    }

    #[test]
    fn tracker_converges_in_ceil_ticks() {
        let mut tr = Tracker::new(TrackerConfig {
            max_az_rate_deg_s: 30.0,
            ..TrackerConfig::default()
        })
        .unwrap();
        let est = estimate_at(100.0, t0());
        let expected = (est.bearing_deg / (30.0 * 0.5)).ceil() as usize;
        let mut ticks = 0;
        while pointing_error(tr.state(), est.bearing_deg) > 0.0 {
            tr.tick(Some(&est), t0(), 0.5, 5.0);
            ticks += 1;
            assert!(ticks <= expected);
        }
        assert_eq!(ticks, expected);
    }

    #[test]
    fn sweep_alternates_and_drifts() {
        let mut tr = Tracker::new(TrackerConfig {
            max_az_rate_deg_s: 90.0,
            drift_deg_per_rev: 2.0,
            ..TrackerConfig::default()
        })
        .unwrap();
        tr.start_sweep();
        let mut dirs = Vec::new();
        for _ in 0..8 {
            if let Some(d) = tr.tick(None, t0(), 1.0, 5.0).sweep_completed {
                dirs.push(d);
            }
        }
        assert_eq!(dirs, vec![SweepDirection::Cw, SweepDirection::Ccw]);
        // +2 then -2: alternating sweeps cancel the drift.
        assert_eq!(tr.state().reference_error_deg, 0.0);
    }

    #[test]
    fn manual_hold_ignores_estimates() {
        let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
        tr.set_manual(ServoCommand::new(270.0, 0.0, t0()));
        let est = estimate_at(90.0, t0());
        for _ in 0..10 {
            let out = tr.tick(Some(&est), t0(), 1.0, 5.0);
            assert!(out.command.is_none());
        }
        assert_eq!(tr.state().azimuth_deg, 270.0);
        tr.resume_tracking();
        let out = tr.tick(Some(&est), t0(), 1.0, 5.0);
        assert!(out.command.is_some());
    }
}
