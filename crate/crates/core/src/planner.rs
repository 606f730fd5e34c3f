//! Jerk-minimal Frenet trajectories: a quartic in `l` reaching a target speed
//! with zero acceleration, and a quintic in `d` reaching a target offset at
//! rest laterally.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FrenetState;

pub const DEFAULT_STEP: f64 = 0.1;

/// Road width in meters, used for the lateral action bound and normalization.
pub const ROAD_WIDTH: f64 = 4.5;
/// Maximum allowed speed in m/s.
pub const V_MAX: f64 = 22.22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanAction {
    /// Planning horizon in seconds.
    pub horizon: f64,
    /// Target lateral offset at the horizon, meters.
    pub lateral: f64,
    /// Target longitudinal speed at the horizon, m/s.
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionBounds {
    pub max_horizon: f64,
    pub max_lateral: f64,
    pub max_speed: f64,
}

impl Default for ActionBounds {
    fn default() -> Self {
        Self {
            max_horizon: 2.0,
            max_lateral: ROAD_WIDTH / 2.0,
            max_speed: V_MAX,
        }
    }
}

impl PlanAction {
    pub fn new(horizon: f64, lateral: f64, speed: f64) -> Self {
        Self {
            horizon,
            lateral,
            speed,
        }
    }

    pub fn is_within(&self, b: &ActionBounds) -> bool {
        (0.0..=b.max_horizon).contains(&self.horizon)
            && (0.0..=b.max_lateral).contains(&self.lateral)
            && (0.0..=b.max_speed).contains(&self.speed)
    }

    pub fn clamped(&self, b: &ActionBounds) -> Self {
        let c = |v: f64, hi: f64| if v.is_nan() { 0.0 } else { v.clamp(0.0, hi) };
        Self {
            horizon: c(self.horizon, b.max_horizon),
            lateral: c(self.lateral, b.max_lateral),
            speed: c(self.speed, b.max_speed),
        }
    }

    /// Each component mapped linearly from `[0, max]` to `[-1, 1]`.
    pub fn normalized(&self, b: &ActionBounds) -> [f64; 3] {
        let n = |v: f64, hi: f64| 2.0 * v / hi - 1.0;
        [
            n(self.horizon, b.max_horizon),
            n(self.lateral, b.max_lateral),
            n(self.speed, b.max_speed),
        ]
    }

    pub fn from_normalized(a: [f64; 3], b: &ActionBounds) -> Self {
        let dn = |v: f64, hi: f64| 0.5 * (v.clamp(-1.0, 1.0) + 1.0) * hi;
        Self {
            horizon: dn(a[0], b.max_horizon),
            lateral: dn(a[1], b.max_lateral),
            speed: dn(a[2], b.max_speed),
        }
    }
}

/// Evaluates the `order`-th derivative of `sum c_i t^i` with Horner's rule.
pub fn poly_eval(coeffs: &[f64], order: usize, t: f64) -> f64 {
    let mut acc = 0.0;
    for i in (order..coeffs.len()).rev() {
        let falling: f64 = (0..order).map(|j| (i - j) as f64).product();
        acc = acc * t + coeffs[i] * falling;
    }
    acc
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn check_horizon(horizon: f64, step: f64) -> Result<()> {
    if !(horizon >= step) || !horizon.is_finite() {
        return Err(Error::DegenerateHorizon { horizon, step });
    }
    Ok(())
}

/// Quartic coefficients `a0..a4` from `(l0, l0_dot, l0_ddot)` to terminal speed
/// `v_target` with zero terminal acceleration at `horizon`. `step` is the
/// smallest admissible horizon.
pub fn solve_longitudinal(
    init: (f64, f64, f64),
    v_target: f64,
    horizon: f64,
    step: f64,
) -> Result<[f64; 5]> {
    check_horizon(horizon, step)?;
    let (l0, v0, a0) = init;
    let t = horizon;
    let (t2, t3) = (t * t, t * t * t);
    // [3T^2 4T^3; 6T 12T^2] [a3 a4]^T = [v_T - v0 - a0 T; 0 - a0]
    let b1 = v_target - v0 - a0 * t;
    let b2 = -a0;
    let det = 3.0 * t2 * 12.0 * t2 - 4.0 * t3 * 6.0 * t;
    let a3 = (b1 * 12.0 * t2 - 4.0 * t3 * b2) / det;
    let a4 = (3.0 * t2 * b2 - 6.0 * t * b1) / det;
    Ok([l0, v0, 0.5 * a0, a3, a4])
}

/// Quintic coefficients `b0..b5` from `(d0, d0_dot, d0_ddot)` to `d_target`
/// with zero terminal lateral velocity and acceleration.
pub fn solve_lateral(
    init: (f64, f64, f64),
    d_target: f64,
    horizon: f64,
    step: f64,
) -> Result<[f64; 6]> {
    check_horizon(horizon, step)?;
    let (d0, v0, a0) = init;
    let t = horizon;
    let (t2, t3, t4, t5) = (t * t, t.powi(3), t.powi(4), t.powi(5));
    let (b0, b1, b2) = (d0, v0, 0.5 * a0);
    let m = [
        [t3, t4, t5],
        [3.0 * t2, 4.0 * t3, 5.0 * t4],
        [6.0 * t, 12.0 * t2, 20.0 * t3],
    ];
    let rhs = [
        d_target - b0 - b1 * t - b2 * t2,
        -b1 - 2.0 * b2 * t,
        -2.0 * b2,
    ];
    let det = det3(&m);
    let mut out = [b0, b1, b2, 0.0, 0.0, 0.0];
    for col in 0..3 {
        let mut mc = m;
        for row in 0..3 {
            mc[row][col] = rhs[row];
        }
        out[3 + col] = det3(&mc) / det;
    }
    Ok(out)
}

/// A sampled Frenet trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPlan {
    pub longitudinal: [f64; 5],
    pub lateral: [f64; 6],
    pub horizon: f64,
    pub step: f64,
    pub tau: Vec<f64>,
    pub l: Vec<f64>,
    pub d: Vec<f64>,
    pub l_dot: Vec<f64>,
    pub d_dot: Vec<f64>,
    pub l_ddot: Vec<f64>,
    pub d_ddot: Vec<f64>,
    pub l_jerk: Vec<f64>,
}

impl TrajectoryPlan {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        self.tau.len() == 1
    }

    /// Frenet state at sample `k`.
    pub fn state(&self, k: usize) -> FrenetState {
        FrenetState {
            l: self.l[k],
            d: self.d[k],
            l_dot: self.l_dot[k],
            d_dot: self.d_dot[k],
            l_ddot: self.l_ddot[k],
            d_ddot: self.d_ddot[k],
        }
    }

    /// Frenet state at an arbitrary time, evaluated from the polynomials and
    /// held constant past the horizon.
    pub fn state_at(&self, tau: f64) -> FrenetState {
        let t = tau.clamp(0.0, self.tau.last().copied().unwrap_or(0.0));
        let (a, b) = (&self.longitudinal[..], &self.lateral[..]);
        FrenetState {
            l: poly_eval(a, 0, t),
            d: poly_eval(b, 0, t),
            l_dot: poly_eval(a, 1, t),
            d_dot: poly_eval(b, 1, t),
            l_ddot: poly_eval(a, 2, t),
            d_ddot: poly_eval(b, 2, t),
        }
    }
}

/// Sample times `0, step, 2 step, ..., horizon`; the horizon itself is always
/// the last sample.
pub fn sample_grid(horizon: f64, step: f64) -> Vec<f64> {
    if !(horizon >= step) {
        return vec![0.0];
    }
    let n = (horizon / step - 1e-9).ceil() as usize;
    let mut tau: Vec<f64> = (0..n).map(|k| k as f64 * step).collect();
    tau.push(horizon);
    tau
}

/// Dense evaluation of both polynomials on the sample grid.
pub fn sample_plan(longitudinal: [f64; 5], lateral: [f64; 6], horizon: f64, step: f64) -> TrajectoryPlan {
    let tau = sample_grid(horizon, step);
    let eval = |c: &[f64], order: usize| -> Vec<f64> {
        tau.iter().map(|&t| poly_eval(c, order, t)).collect()
    };
    TrajectoryPlan {
        l: eval(&longitudinal, 0),
        d: eval(&lateral, 0),
        l_dot: eval(&longitudinal, 1),
        d_dot: eval(&lateral, 1),
        l_ddot: eval(&longitudinal, 2),
        d_ddot: eval(&lateral, 2),
        l_jerk: eval(&longitudinal, 3),
        longitudinal,
        lateral,
        horizon: *tau.last().unwrap(),
        step,
        tau,
    }
}

/// Plans from `init` toward the action's terminal condition. Horizons shorter
/// than one step yield a single sample holding the current state.
pub fn plan_trajectory(init: &FrenetState, action: &PlanAction, step: f64) -> TrajectoryPlan {
    let long_init = (init.l, init.l_dot, init.l_ddot);
    let lat_init = (init.d, init.d_dot, init.d_ddot);
    match (
        solve_longitudinal(long_init, action.speed, action.horizon, step),
        solve_lateral(lat_init, action.lateral, action.horizon, step),
    ) {
        (Ok(a), Ok(b)) => sample_plan(a, b, action.horizon, step),
        _ => {
            let a = [init.l, init.l_dot, 0.5 * init.l_ddot, 0.0, 0.0];
            let b = [init.d, init.d_dot, 0.5 * init.d_ddot, 0.0, 0.0, 0.0];
            sample_plan(a, b, 0.0, step)
        }
    }
}

/// `n * sum |l'''(tau)|` over the `n` samples of the plan.
pub fn longitudinal_jerk_sum(plan: &TrajectoryPlan) -> f64 {
    let n = plan.len() as f64;
    n * plan.l_jerk.iter().map(|j| j.abs()).sum::<f64>()
}
