//! Three operations exposed to the demo page. Each takes plain numbers and
//! returns a JSON string, so the same functions run natively in tests.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ethiplan::collision::{collision_probability, Cov2, Frame, GaussianPrediction, OrientedBox};
use ethiplan::ethics::{bayes_cost, equality_cost, ethical_cost, maximin_cost, CostConfig, RiskSet};
use ethiplan::geometry::{FrenetState, Vec2};
use ethiplan::planner::{longitudinal_jerk_sum, plan_trajectory, ActionBounds, PlanAction, DEFAULT_STEP};
use ethiplan::risk::{effective_collision_speed, harm, ImpactZone};

#[derive(Serialize)]
struct PlanOut {
    tau: Vec<f64>,
    l: Vec<f64>,
    d: Vec<f64>,
    l_dot: Vec<f64>,
    l_ddot: Vec<f64>,
    longitudinal: [f64; 5],
    lateral: [f64; 6],
    jerk_sum: f64,
    clamped: [f64; 3],
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Frenet plan from `(d0, v0)` at `l = 0` toward the action `(horizon,
/// lateral, speed)`, clamped to the admissible action box.
#[wasm_bindgen]
pub fn plan(d0: f64, v0: f64, horizon: f64, lateral: f64, speed: f64) -> Result<String, String> {
    let init = FrenetState { l: 0.0, d: d0, l_dot: v0, d_dot: 0.0, l_ddot: 0.0, d_ddot: 0.0 };
    if !init.is_finite() || !(v0 >= 0.0) {
        return Err(format!("bad initial state d0={d0} v0={v0}"));
    }
    let action = PlanAction::new(horizon, lateral, speed).clamped(&ActionBounds::default());
    let p = plan_trajectory(&init, &action, DEFAULT_STEP);
    to_json(&PlanOut {
        jerk_sum: longitudinal_jerk_sum(&p),
        clamped: [action.horizon, action.lateral, action.speed],
        tau: p.tau,
        l: p.l,
        d: p.d,
        l_dot: p.l_dot,
        l_ddot: p.l_ddot,
        longitudinal: p.longitudinal,
        lateral: p.lateral,
    })
}

#[derive(Serialize)]
struct FieldOut {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Row-major, `ys.len()` rows of `xs.len()` values.
    probability: Vec<f64>,
    gated: usize,
}

/// Collision probability of a 4.8 x 1.8 m ego centred at each grid point,
/// against another car at the origin heading along `other_heading`, with an
/// isotropic position uncertainty `sigma`.
#[wasm_bindgen]
pub fn probability_field(other_heading: f64, ego_heading: f64, sigma: f64, extent: f64, cells: usize) -> Result<String, String> {
    if !(cells >= 2 && cells <= 400) {
        return Err(format!("cells must be in 2..=400, got {cells}"));
    }
    if !(extent > 0.0) {
        return Err(format!("extent must be > 0, got {extent}"));
    }
    let cov = Cov2::isotropic(sigma).map_err(|e| e.to_string())?;
    let other = OrientedBox::new(Vec2::new(0.0, 0.0), other_heading, 2.4, 0.9).map_err(|e| e.to_string())?;
    let pred = GaussianPrediction { mean: other.center, covariance: cov, step: 0, frame: Frame::World };
    let axis: Vec<f64> = (0..cells).map(|i| -extent + 2.0 * extent * i as f64 / (cells - 1) as f64).collect();
    let mut probability = Vec::with_capacity(cells * cells);
    let mut gated = 0;
    for &y in &axis {
        for &x in &axis {
            let ego = OrientedBox::new(Vec2::new(x, y), ego_heading, 2.4, 0.9).map_err(|e| e.to_string())?;
            let est = collision_probability(&ego, ego.center, &pred, &other).map_err(|e| e.to_string())?;
            gated += est.sat as usize;
            probability.push(est.probability);
        }
    }
    to_json(&FieldOut { xs: axis.clone(), ys: axis, probability, gated })
}

#[derive(Serialize)]
struct CostOut {
    bayes: f64,
    equality: f64,
    maximin: f64,
    total: f64,
    delta_v_ego: f64,
    delta_v_other: f64,
    harm_ego: f64,
    harm_other: f64,
    risk_ego: f64,
    risk_other: f64,
}

/// Ethical cost of one ego/other encounter: collision probability `p`,
/// speeds and masses of both parties, and the angle between velocities.
#[wasm_bindgen]
pub fn encounter_cost(p: f64, v_ego: f64, v_other: f64, m_ego: f64, m_other: f64, angle: f64) -> Result<String, String> {
    if !(0.0..=1.0).contains(&p) {
        return Err(format!("probability {p} outside [0, 1]"));
    }
    if !(m_ego > 0.0 && m_other > 0.0 && v_ego >= 0.0 && v_other >= 0.0) {
        return Err("speeds must be >= 0 and masses > 0".into());
    }
    let zone = ImpactZone::classify(angle);
    let dv_ego = effective_collision_speed(v_ego, v_other, m_ego, m_other, angle);
    let dv_other = effective_collision_speed(v_other, v_ego, m_other, m_ego, angle);
    let (h_ego, h_other) = (harm(dv_ego, zone), harm(dv_other, zone));
    let set = RiskSet::new(vec![p * h_ego, p * h_other], vec![h_ego.max(h_other)]).map_err(|e| e.to_string())?;
    let cfg = CostConfig::default();
    to_json(&CostOut {
        bayes: bayes_cost(&set).map_err(|e| e.to_string())?,
        equality: equality_cost(&set),
        maximin: maximin_cost(&set, cfg.gamma_maximin),
        total: ethical_cost(&set, &cfg).map_err(|e| e.to_string())?,
        delta_v_ego: dv_ego,
        delta_v_other: dv_other,
        harm_ego: h_ego,
        harm_other: h_other,
        risk_ego: set.risks[0],
        risk_other: set.risks[1],
    })
}
