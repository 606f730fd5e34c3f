mod common;

use ethiplan::control::{
    advance_vehicle, pid_acceleration, stanley_steer, step_vehicle, track_plan, PidGains, PidState, StanleyParams,
    Tracker, VehicleModel,
};
use ethiplan::geometry::{Pose, ReferencePath, Vec2};
use ethiplan::planner::{sample_plan, DEFAULT_STEP, V_MAX};
use proptest::prelude::*;
use std::f64::consts::PI;

fn gains(kp: f64, ki: f64, kd: f64) -> PidGains {
    PidGains { kp, ki, kd, ..PidGains::default() }
}

#[test]
fn pid_examples() {
    let (a, _) = pid_acceleration(&gains(1.5, 0.0, 0.0), 2.0, PidState::default(), 0.1);
    assert_eq!(a, 3.0);
    let mut s = PidState::default();
    for _ in 0..50 {
        let (a, next) = pid_acceleration(&PidGains::default(), 0.0, s, 0.1);
        assert_eq!(a, 0.0);
        s = next;
    }
    let g = gains(1.0, 0.5, 0.0);
    let mut s = PidState::default();
    let mut a = 0.0;
    for _ in 0..3 {
        (a, s) = pid_acceleration(&g, 1.0, s, 0.1);
    }
    assert!((a - 1.15).abs() < 1e-12);
}

#[test]
fn stanley_examples() {
    let p = StanleyParams { k_v: 1.0, ..StanleyParams::default() };
    assert_eq!(stanley_steer(&p, 0.0, 0.0, 10.0), 0.0);
    assert!((stanley_steer(&p, 0.1, 1.0, 10.0) - (0.1 + 0.1f64.atan())).abs() < 1e-12);
    assert!((stanley_steer(&p, 0.1, 1.0, 10.0) - 0.1997).abs() < 1e-4);
    assert_eq!(stanley_steer(&p, 0.0, 1e6, 3.0), p.steer_limit);
    assert_eq!(stanley_steer(&p, 0.0, -1e6, 30.0), -p.steer_limit);
}

#[test]
fn bicycle_straight_and_speed_clamp() {
    let m = VehicleModel::new(Pose::new(1.0, 2.0, 0.3, 5.0));
    let n = step_vehicle(&m, 0.0, 0.0, 0.2);
    assert!((n.pose.x - (1.0 + 0.3f64.cos())).abs() < 1e-12);
    assert!((n.pose.y - (2.0 + 0.3f64.sin())).abs() < 1e-12);
    let fast = VehicleModel::new(Pose::new(0.0, 0.0, 0.0, V_MAX));
    assert_eq!(step_vehicle(&fast, 3.0, 0.0, 0.1).pose.speed, V_MAX);
}

/// Radius of the circle through a full revolution of positions: centroid,
/// then mean distance to it.
fn fitted_radius(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.1).sum::<f64>() / n;
    points.iter().map(|p| (p.0 - cx).hypot(p.1 - cy)).sum::<f64>() / n
}

#[test]
fn constant_steer_turning_radius() {
    for (delta, v) in [(0.1, 5.0), (0.3, 8.0), (-0.45, 3.0)] {
        let mut m = VehicleModel::new(Pose::new(0.0, 0.0, 0.0, v));
        let expected = m.wheelbase / f64::tan(delta).abs();
        let dt = 1e-3;
        let steps = (2.0 * PI * expected / v / dt).round() as usize;
        let mut pts = Vec::with_capacity(steps);
        for _ in 0..steps {
            pts.push((m.pose.x, m.pose.y));
            m = step_vehicle(&m, 0.0, delta, dt);
        }
        let r = fitted_radius(&pts);
        assert!((r - expected).abs() / expected < 0.01, "delta {delta}: {r} vs {expected}");
    }
}

fn straight_path() -> ReferencePath {
    ReferencePath::new(&[Vec2::new(-10.0, 0.0), Vec2::new(300.0, 0.0)]).unwrap()
}

/// 10 m/s along the path centre for `horizon` seconds.
fn cruise(horizon: f64) -> ethiplan::planner::TrajectoryPlan {
    sample_plan([10.0, 10.0, 0.0, 0.0, 0.0], [0.0; 6], horizon, DEFAULT_STEP)
}

#[test]
fn stanley_converges_from_one_metre() {
    let path = straight_path();
    let plan = cruise(8.0);
    let model = VehicleModel::new(Pose::new(10.0 - 1.4, 1.0, 0.0, 10.0));
    let (_, trace) = track_plan(&model, &plan, &path, &PidGains::default(), &StanleyParams::default(), 0.01, 1).unwrap();
    // sample at t = 6 s
    let at6 = trace.iter().find(|s| (s.t - 6.0).abs() < 1e-6).unwrap();
    assert!(at6.pose.y.abs() < 0.05, "cross-track {} at 6 s", at6.pose.y);
}

#[test]
fn on_plan_equilibrium_is_quiet() {
    let path = straight_path();
    let plan = cruise(4.0);
    let mut tracker = Tracker::new(PidGains::default(), StanleyParams::default());
    let mut m = VehicleModel::new(Pose::new(10.0 - 1.4, 0.0, 0.0, 10.0));
    for k in 0..30 {
        let (a, steer, _) = tracker.command(&m, &plan, &path, k as f64 * 0.1, 0.1).unwrap();
        assert!(a.abs() < 0.05 && steer.abs() < 0.01, "step {k}: a {a} steer {steer}");
        m = advance_vehicle(&m, a, steer, 0.1, 10);
    }
}

#[test]
fn zero_length_plan_gives_empty_trace() {
    let plan = sample_plan([0.0, 5.0, 0.0, 0.0, 0.0], [0.0; 6], 0.0, DEFAULT_STEP);
    let model = VehicleModel::new(Pose::new(0.0, 0.0, 0.0, 5.0));
    let (end, trace) =
        track_plan(&model, &plan, &straight_path(), &PidGains::default(), &StanleyParams::default(), 0.1, 10).unwrap();
    assert!(trace.is_empty());
    assert_eq!(end, model);
}

proptest! {
    #![proptest_config(common::cases(300))]

    #[test]
    fn pid_output_is_bounded(e in -100.0f64..100.0, i0 in -50.0f64..50.0) {
        let g = PidGains::default();
        let (a, s) = pid_acceleration(&g, e, PidState { integral: i0, prev_error: None }, 0.1);
        prop_assert!(a.abs() <= g.output_limit);
        prop_assert!(s.integral.abs() <= g.integral_limit);
    }

    #[test]
    fn stanley_is_odd_and_bounded(h in -1.0f64..1.0, d in -5.0f64..5.0, v in 0.0f64..25.0) {
        let p = StanleyParams::default();
        let s = stanley_steer(&p, h, d, v);
        prop_assert!(s.abs() <= p.steer_limit);
        prop_assert!((s + stanley_steer(&p, -h, -d, v)).abs() < 1e-12);
    }
}
