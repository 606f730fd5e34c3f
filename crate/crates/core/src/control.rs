//! Low-level tracking: PID on speed, Stanley on steering, and a kinematic
//! bicycle model as the plant.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{wrap_angle, Pose, ReferencePath, Vec2};
use crate::planner::{TrajectoryPlan, V_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Anti-windup bound on the error integral, m/s * s.
    pub integral_limit: f64,
    /// Acceleration command bound, m/s^2.
    pub output_limit: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 1.2,
            ki: 0.1,
            kd: 0.05,
            integral_limit: 10.0,
            output_limit: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidState {
    pub integral: f64,
    /// `None` until the first update, so the first step has no derivative kick.
    pub prev_error: Option<f64>,
}

/// One PID update with rectangular integration. Returns the clamped command
/// and the new controller state.
pub fn pid_acceleration(gains: &PidGains, error: f64, state: PidState, dt: f64) -> (f64, PidState) {
    let integral =
        (state.integral + error * dt).clamp(-gains.integral_limit, gains.integral_limit);
    let derivative = state.prev_error.map_or(0.0, |prev| (error - prev) / dt);
    let a = gains.kp * error + gains.ki * integral + gains.kd * derivative;
    (
        a.clamp(-gains.output_limit, gains.output_limit),
        PidState {
            integral,
            prev_error: Some(error),
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StanleyParams {
    /// Cross-track gain, 1/s.
    pub k_v: f64,
    pub steer_limit: f64,
    /// Lower bound on the speed in the cross-track term, m/s.
    pub speed_floor: f64,
}

impl Default for StanleyParams {
    fn default() -> Self {
        Self {
            k_v: 2.0,
            steer_limit: 0.6,
            speed_floor: 0.5,
        }
    }
}

/// `theta_p + atan(k_v d_f / v)`, clamped to the steering limit. Positive
/// `cross_track` means the reference lies to the left of the front axle.
pub fn stanley_steer(params: &StanleyParams, heading_error: f64, cross_track: f64, speed: f64) -> f64 {
    let v = speed.max(params.speed_floor);
    let delta = heading_error + (params.k_v * cross_track / v).atan();
    delta.clamp(-params.steer_limit, params.steer_limit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleModel {
    pub wheelbase: f64,
    pub pose: Pose,
    pub yaw_rate: f64,
    pub max_speed: f64,
}

impl VehicleModel {
    pub fn new(pose: Pose) -> Self {
        Self {
            wheelbase: 2.8,
            pose,
            yaw_rate: 0.0,
            max_speed: V_MAX,
        }
    }

    pub fn front_axle(&self) -> Vec2 {
        self.pose.position() + Vec2::from_heading(self.pose.heading) * (0.5 * self.wheelbase)
    }
}

/// One forward-Euler step of the kinematic bicycle model.
pub fn step_vehicle(model: &VehicleModel, accel: f64, steer: f64, dt: f64) -> VehicleModel {
    let p = model.pose;
    let yaw_rate = p.speed * steer.tan() / model.wheelbase;
    VehicleModel {
        pose: Pose {
            x: p.x + p.speed * p.heading.cos() * dt,
            y: p.y + p.speed * p.heading.sin() * dt,
            heading: wrap_angle(p.heading + yaw_rate * dt),
            speed: (p.speed + accel * dt).clamp(0.0, model.max_speed),
        },
        yaw_rate,
        ..*model
    }
}

/// `substeps` Euler steps covering `dt` with a held command.
pub fn advance_vehicle(model: &VehicleModel, accel: f64, steer: f64, dt: f64, substeps: usize) -> VehicleModel {
    let h = dt / substeps.max(1) as f64;
    (0..substeps.max(1)).fold(*model, |m, _| step_vehicle(&m, accel, steer, h))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlSample {
    pub t: f64,
    pub pose: Pose,
    pub accel: f64,
    pub steer: f64,
    pub cross_track: f64,
}

/// Lateral target and desired heading offset at arclength `l` along the plan.
fn plan_lateral_at(plan: &TrajectoryPlan, l: f64) -> (f64, f64) {
    let n = plan.len();
    let heading_of = |k: usize| {
        if plan.l_dot[k] > 0.1 {
            plan.d_dot[k].atan2(plan.l_dot[k])
        } else {
            0.0
        }
    };
    if n == 1 || l <= plan.l[0] {
        return (plan.d[0], heading_of(0));
    }
    for k in 1..n {
        if l <= plan.l[k] {
            let span = plan.l[k] - plan.l[k - 1];
            if span <= 1e-9 {
                return (plan.d[k], heading_of(k));
            }
            let t = (l - plan.l[k - 1]) / span;
            let d = plan.d[k - 1] + t * (plan.d[k] - plan.d[k - 1]);
            let h = heading_of(k - 1) + t * (heading_of(k) - heading_of(k - 1));
            return (d, h);
        }
    }
    (plan.d[n - 1], heading_of(n - 1))
}

/// Stateful combination of both controllers.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracker {
    pub gains: PidGains,
    pub stanley: StanleyParams,
    pub pid: PidState,
    /// Adds the planned longitudinal acceleration to the PID output.
    pub feedforward: bool,
    hint: usize,
}

impl Tracker {
    pub fn new(gains: PidGains, stanley: StanleyParams) -> Self {
        Self {
            gains,
            stanley,
            pid: PidState::default(),
            feedforward: true,
            hint: 0,
        }
    }

    /// Command for the interval starting `t` seconds into the plan. Returns
    /// `(accel, steer, cross_track)`.
    pub fn command(
        &mut self,
        model: &VehicleModel,
        plan: &TrajectoryPlan,
        path: &ReferencePath,
        t: f64,
        dt: f64,
    ) -> Result<(f64, f64, f64)> {
        let target_speed = plan.state_at(t + dt).l_dot.max(0.0);
        let (feedback, pid) =
            pid_acceleration(&self.gains, target_speed - model.pose.speed, self.pid, dt);
        self.pid = pid;
        // planned acceleration as feedforward, so a replanned trajectory is
        // followed without waiting for a speed error to build up
        let ff = if self.feedforward { plan.state_at(t).l_ddot } else { 0.0 };
        let limit = self.gains.output_limit;
        let accel = (feedback + ff).clamp(-limit, limit);

        let front = model.front_axle();
        let front_pose = Pose::new(front.x, front.y, model.pose.heading, model.pose.speed);
        let fs = path.project_near(&front_pose, &mut self.hint)?;
        let (d_target, rel_heading) = plan_lateral_at(plan, fs.l);
        let (chi, _) = path.heading_curvature(fs.l.clamp(0.0, path.length()))?;
        let heading_error = wrap_angle(chi + rel_heading - model.pose.heading);
        let cross_track = d_target - fs.d;
        let steer = stanley_steer(&self.stanley, heading_error, cross_track, model.pose.speed);
        Ok((accel, steer, cross_track))
    }
}

/// Tracks `plan` for its full horizon in control steps of `dt`, integrating
/// the vehicle with `substeps` Euler steps per control step.
#[allow(clippy::too_many_arguments)]
pub fn track_plan(
    model: &VehicleModel,
    plan: &TrajectoryPlan,
    path: &ReferencePath,
    gains: &PidGains,
    params: &StanleyParams,
    dt: f64,
    substeps: usize,
) -> Result<(VehicleModel, Vec<ControlSample>)> {
    let mut tracker = Tracker::new(*gains, *params);
    let mut m = *model;
    let mut trace = Vec::new();
    if plan.is_empty() {
        return Ok((m, trace));
    }
    let steps = (plan.horizon / dt - 1e-9).ceil().max(0.0) as usize;
    for k in 0..steps {
        let t = k as f64 * dt;
        let (accel, steer, cross_track) = tracker.command(&m, plan, path, t, dt)?;
        m = advance_vehicle(&m, accel, steer, dt, substeps);
        trace.push(ControlSample {
            t: t + dt,
            pose: m.pose,
            accel,
            steer,
            cross_track,
        });
    }
    Ok((m, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{sample_plan, solve_lateral, solve_longitudinal, DEFAULT_STEP};
    use std::f64::consts::PI;

    #[test]
    fn pure_proportional() {
        let g = PidGains {
            kp: 1.5,
            ki: 0.0,
            kd: 0.0,
            ..PidGains::default()
        };
        let (a, _) = pid_acceleration(&g, 2.0, PidState::default(), 0.1);
        assert_eq!(a, 3.0);
    }

    #[test]
    fn zero_error_stays_zero() {
        let g = PidGains::default();
        let mut s = PidState::default();
        for _ in 0..50 {
            let (a, next) = pid_acceleration(&g, 0.0, s, 0.1);
            assert_eq!(a, 0.0);
            s = next;
        }
    }

    #[test]
    fn rectangular_integration_three_steps() {
        let g = PidGains {
            kp: 1.0,
            ki: 0.5,
            kd: 0.0,
            ..PidGains::default()
        };
        let mut s = PidState::default();
        let mut a = 0.0;
        for _ in 0..3 {
            (a, s) = pid_acceleration(&g, 1.0, s, 0.1);
        }
        assert!((a - 1.15).abs() < 1e-12);
    }

    #[test]
    fn integral_and_output_are_clamped() {
        let g = PidGains {
            kp: 0.0,
            ki: 1.0,
            kd: 0.0,
            integral_limit: 0.5,
            output_limit: 4.0,
        };
        let mut s = PidState::default();
        for _ in 0..100 {
            (_, s) = pid_acceleration(&g, 10.0, s, 0.1);
        }
        assert_eq!(s.integral, 0.5);
        let (a, _) = pid_acceleration(&PidGains::default(), 100.0, PidState::default(), 0.1);
        assert_eq!(a, 4.0);
    }

    #[test]
    fn stanley_examples() {
        let p = StanleyParams::default();
        assert_eq!(stanley_steer(&p, 0.0, 0.0, 5.0), 0.0);
        let unit = StanleyParams { k_v: 1.0, ..p };
        let d = stanley_steer(&unit, 0.1, 1.0, 10.0);
        assert!((d - (0.1 + 0.1f64.atan())).abs() < 1e-15);
        assert!((d - 0.1997).abs() < 1e-4);
        assert_eq!(stanley_steer(&p, 0.0, 1e3, 15.0), p.steer_limit);
        assert_eq!(stanley_steer(&p, 0.0, -1e3, 0.0), -p.steer_limit);
    }

    #[test]
    fn straight_advance() {
        let m = VehicleModel::new(Pose::new(1.0, 2.0, 0.0, 5.0));
        let n = step_vehicle(&m, 0.0, 0.0, 0.1);
        assert!((n.pose.x - 1.5).abs() < 1e-12);
        assert_eq!(n.pose.y, 2.0);
        assert_eq!(n.pose.speed, 5.0);
    }

    #[test]
    fn speed_clamps() {
        let m = VehicleModel::new(Pose::new(0.0, 0.0, 0.0, V_MAX));
        assert_eq!(step_vehicle(&m, 3.0, 0.0, 0.1).pose.speed, V_MAX);
        let m = VehicleModel::new(Pose::new(0.0, 0.0, 0.0, 0.1));
        assert_eq!(step_vehicle(&m, -4.0, 0.0, 0.1).pose.speed, 0.0);
    }

    #[test]
    fn constant_steer_circle() {
        let steer: f64 = 0.2;
        let mut m = VehicleModel::new(Pose::new(0.0, 0.0, 0.0, 5.0));
        let radius = m.wheelbase / steer.tan();
        let period = 2.0 * PI * radius / 5.0;
        let dt = 1e-3;
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..(period / dt).ceil() as usize {
            m = step_vehicle(&m, 0.0, steer, dt);
            xmin = xmin.min(m.pose.x);
            xmax = xmax.max(m.pose.x);
            ymin = ymin.min(m.pose.y);
            ymax = ymax.max(m.pose.y);
            assert!(m.pose.heading > -PI && m.pose.heading <= PI);
        }
        let fitted = 0.25 * ((xmax - xmin) + (ymax - ymin));
        assert!((fitted - radius).abs() / radius < 0.01, "{fitted} vs {radius}");
    }

    fn straight_path() -> ReferencePath {
        ReferencePath::new(&[Vec2::new(-10.0, 0.0), Vec2::new(400.0, 0.0)]).unwrap()
    }

    fn lane_plan(l0: f64, v: f64, horizon: f64) -> TrajectoryPlan {
        let a = solve_longitudinal((l0, v, 0.0), v, horizon, DEFAULT_STEP).unwrap();
        let b = solve_lateral((0.0, 0.0, 0.0), 0.0, horizon, DEFAULT_STEP).unwrap();
        sample_plan(a, b, horizon, DEFAULT_STEP)
    }

    #[test]
    fn equilibrium_commands_stay_small() {
        let path = straight_path();
        let plan = lane_plan(10.0, 10.0, 2.0);
        let m = VehicleModel::new(Pose::new(0.0, 0.0, 0.0, 10.0));
        let (_, trace) = track_plan(
            &m,
            &plan,
            &path,
            &PidGains::default(),
            &StanleyParams::default(),
            0.1,
            10,
        )
        .unwrap();
        assert_eq!(trace.len(), 20);
        for s in &trace {
            assert!(s.accel.abs() < 0.05, "{}", s.accel);
            assert!(s.steer.abs() < 0.01, "{}", s.steer);
        }
    }

    #[test]
    fn stanley_converges_from_one_meter() {
        let path = straight_path();
        let plan = lane_plan(10.0, 10.0, 6.0);
        let m = VehicleModel::new(Pose::new(0.0, 1.0, 0.0, 10.0));
        let (_, trace) = track_plan(
            &m,
            &plan,
            &path,
            &PidGains::default(),
            &StanleyParams::default(),
            0.1,
            10,
        )
        .unwrap();
        let last = trace.last().unwrap();
        assert!(last.t <= 6.0 + 1e-9);
        assert!(last.pose.y.abs() < 0.05, "final offset {}", last.pose.y);
        let peak = trace.iter().map(|s| s.pose.y.abs()).fold(0.0, f64::max);
        assert!(peak <= 1.5);
    }

    #[test]
    fn empty_plan_gives_empty_trace() {
        let path = straight_path();
        let plan = TrajectoryPlan {
            longitudinal: [0.0; 5],
            lateral: [0.0; 6],
            horizon: 0.0,
            step: 0.1,
            tau: vec![],
            l: vec![],
            d: vec![],
            l_dot: vec![],
            d_dot: vec![],
            l_ddot: vec![],
            d_ddot: vec![],
            l_jerk: vec![],
        };
        let m = VehicleModel::new(Pose::new(0.0, 0.0, 0.0, 3.0));
        let (after, trace) = track_plan(
            &m,
            &plan,
            &path,
            &PidGains::default(),
            &StanleyParams::default(),
            0.1,
            10,
        )
        .unwrap();
        assert!(trace.is_empty());
        assert_eq!(after, m);
    }

    #[test]
    fn integral_action_removes_steady_state_error() {
        // v' = a + w with a constant drag disturbance
        let run = |ki: f64| {
            let g = PidGains {
                kp: 1.2,
                ki,
                kd: 0.0,
                integral_limit: 100.0,
                output_limit: 4.0,
            };
            let (mut v, mut s) = (10.0, PidState::default());
            for _ in 0..3000 {
                let (a, next) = pid_acceleration(&g, 10.0 - v, s, 0.1);
                s = next;
                v += (a - 0.6) * 0.1;
            }
            (10.0 - v).abs()
        };
        assert!(run(0.0) > 0.1);
        assert!(run(0.5) < 0.01);
    }
}
