mod common;

use common::logistic_harm;
use ethiplan::collision::{Cov2, Frame, GaussianPrediction};
use ethiplan::geometry::{Pose, Vec2};
use ethiplan::prediction::{PredictedState, Predictor};
use ethiplan::risk::{
    aggregate_risk, collision_angle, effective_collision_speed, harm, step_risks, time_to_collision,
    timestep_risk, AgentClass, AgentState, HarmModel, ImpactZone,
};
use ethiplan::Result;
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn effective_speed_examples() {
    assert_eq!(effective_collision_speed(7.0, 7.0, 1500.0, 900.0, 0.0), 0.0);
    assert!((effective_collision_speed(7.0, 7.0, 1000.0, 1000.0, PI) - 7.0).abs() < 1e-12);
    let dv = effective_collision_speed(10.0, 0.0, 1500.0, 75.0, 0.3);
    assert!((dv - 75.0 / 1575.0 * 10.0).abs() < 1e-12);
    assert!((dv - 0.4762).abs() < 1e-4);
}

#[test]
fn harm_examples() {
    assert!((harm(0.0, ImpactZone::Side) - 0.0146).abs() < 1e-4);
    assert!((harm(10.0, ImpactZone::Side) - 0.0800).abs() < 1e-4);
    assert!((harm(0.0, ImpactZone::Side) - 1.0 / (1.0 + 4.213f64.exp())).abs() < 1e-15);
    assert!((harm(1e4, ImpactZone::Rear) - 1.0).abs() < 1e-12);
}

#[test]
fn timestep_risk_examples() {
    assert_eq!(timestep_risk(0.0, 0.7), 0.0);
    assert_eq!(timestep_risk(1.0, 0.08), 0.08);
    assert!((timestep_risk(0.3679, 0.0800) - 0.02943).abs() < 1e-5);
}

fn agent(id: &str, class: AgentClass, x: f64, y: f64, heading: f64, speed: f64) -> AgentState {
    AgentState::new(id, class, Pose::new(x, y, heading, speed), 2.0, 1.0).unwrap()
}

#[test]
fn ttc_examples() {
    let r = (2.0f64).hypot(1.0);
    // surface gap 20 m between bounding circles, closing at 10 m/s
    let ego = agent("ego", AgentClass::Vehicle, 0.0, 0.0, 0.0, 10.0);
    let ahead = agent("o", AgentClass::Vehicle, 20.0 + 2.0 * r, 0.0, 0.0, 0.0);
    assert!((time_to_collision(&ego, &ahead) - 2.0).abs() < 1e-12);
    let away = agent("o", AgentClass::Vehicle, 30.0, 0.0, 0.0, 15.0);
    assert!(time_to_collision(&ego, &away).is_infinite());
    let slow = agent("e", AgentClass::Vehicle, 0.0, 0.0, 0.0, 1.0);
    let far = agent("o", AgentClass::Vehicle, 200.0 + 2.0 * r, 0.0, 0.0, 0.0);
    assert!(time_to_collision(&slow, &far).is_infinite());
}

/// Places the prediction mean so that `exp(-D^2/2)` equals the requested
/// per-step probability.
struct Injected(Vec<f64>, f64);

impl Predictor for Injected {
    fn predict(&self, _agent: &AgentState, taus: &[f64]) -> Result<Vec<PredictedState>> {
        Ok(taus
            .iter()
            .zip(&self.0)
            .enumerate()
            .map(|(step, (_, &p))| PredictedState {
                gaussian: GaussianPrediction {
                    mean: Vec2::new(self.1 + (-2.0 * p.ln()).sqrt(), 0.0),
                    covariance: Cov2::new(1.0, 0.0, 1.0).unwrap(),
                    step,
                    frame: Frame::World,
                },
                heading: 0.0,
                velocity: Vec2::new(0.0, 0.0),
            })
            .collect())
    }
}

#[test]
fn injected_steps_take_the_max() {
    // harm saturated at 1 so risk == probability
    let model = HarmModel { c0: -1000.0, ..HarmModel::default() };
    let ego = agent("ego", AgentClass::Vehicle, 0.0, 0.0, 0.0, 0.0);
    let other = agent("o", AgentClass::Cyclist, 0.0, 0.0, 0.0, 0.0);
    let poses = vec![Pose::new(0.0, 0.0, 0.0, 0.0); 3];
    let steps = step_risks(&poses, &[0.0, 0.1, 0.2], &ego, &other, &Injected(vec![0.1, 0.4, 0.2], 0.0), &model).unwrap();
    let t = aggregate_risk(&other, &steps);
    assert!((t.r_ego - 0.4).abs() < 1e-12 && (t.r_obj - 0.4).abs() < 1e-12);

    let single = step_risks(&poses[..1], &[0.0], &ego, &other, &Injected(vec![0.25], 0.0), &model).unwrap();
    let t = aggregate_risk(&other, &single);
    assert!((t.r_ego - timestep_risk(single[0].probability, single[0].harm_ego)).abs() < 1e-15);
}

#[test]
fn gated_out_pair_has_zero_tuple() {
    let ego = agent("ego", AgentClass::Vehicle, 0.0, 0.0, 0.0, 5.0);
    let other = agent("o", AgentClass::Vehicle, 80.0, 0.0, 0.0, 5.0);
    let poses = vec![Pose::new(0.0, 0.0, 0.0, 5.0); 2];
    let steps = step_risks(&poses, &[0.0, 0.1], &ego, &other, &Injected(vec![0.9, 0.9], 80.0), &HarmModel::default()).unwrap();
    let t = aggregate_risk(&other, &steps);
    assert_eq!((t.r_ego, t.r_obj, t.h_worst), (0.0, 0.0, 0.0));
}

proptest! {
    #![proptest_config(common::cases(1000))]

    #[test]
    fn momentum_identity(va in 0.0f64..30.0, vb in 0.0f64..30.0, ma in 50.0f64..3000.0, mb in 50.0f64..3000.0, alpha in 0.0f64..PI) {
        let dva = effective_collision_speed(va, vb, ma, mb, alpha);
        let dvb = effective_collision_speed(vb, va, mb, ma, alpha);
        let (lhs, rhs) = (ma * dva, mb * dvb);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE));
    }

    #[test]
    fn harm_matches_closed_form(dv in 0.0f64..60.0, side in any::<bool>()) {
        let (zone, c) = if side { (ImpactZone::Side, 0.244) } else { (ImpactZone::Rear, -0.431) };
        prop_assert!((harm(dv, zone) - logistic_harm(dv, c)).abs() < 1e-14);
    }

    #[test]
    fn angle_is_symmetric_and_bounded(ax in -10.0f64..10.0, ay in -10.0f64..10.0, bx in -10.0f64..10.0, by in -10.0f64..10.0) {
        let (a, b) = (Vec2::new(ax, ay), Vec2::new(bx, by));
        let alpha = collision_angle(a, b);
        prop_assert!((0.0..=PI).contains(&alpha));
        prop_assert!((alpha - collision_angle(b, a)).abs() < 1e-12);
        if a.norm() > 1e-6 && b.norm() > 1e-6 {
            let oracle = (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos();
            prop_assert!((alpha - oracle).abs() < 1e-6);
        }
    }
}
