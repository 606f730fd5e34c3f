//! Harm estimation, per-step and per-trajectory risk, and time to collision.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::collision::{collision_probability, OrientedBox};
use crate::error::{Error, Result};
use crate::geometry::{FrenetState, Pose, ReferencePath, Vec2};
use crate::planner::TrajectoryPlan;
use crate::prediction::Predictor;

/// TTC values above this are reported as infinite.
pub const TTC_CAP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentClass {
    Vehicle,
    Cyclist,
    Pedestrian,
}

impl AgentClass {
    pub fn default_mass(self) -> f64 {
        match self {
            AgentClass::Vehicle => 1500.0,
            AgentClass::Cyclist => 90.0,
            AgentClass::Pedestrian => 75.0,
        }
    }

    /// Vulnerable road user.
    pub fn is_vru(self) -> bool {
        !matches!(self, AgentClass::Vehicle)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgentClass::Vehicle => "vehicle",
            AgentClass::Cyclist => "cyclist",
            AgentClass::Pedestrian => "pedestrian",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: String,
    pub class: AgentClass,
    pub pose: Pose,
    pub mass: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl AgentState {
    pub fn new(
        id: impl Into<String>,
        class: AgentClass,
        pose: Pose,
        half_length: f64,
        half_width: f64,
    ) -> Result<Self> {
        let s = Self {
            id: id.into(),
            class,
            pose,
            mass: class.default_mass(),
            half_length,
            half_width,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_mass(mut self, mass: f64) -> Result<Self> {
        self.mass = mass;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) {
            return Err(Error::validation("mass_kg", format!("{} must be > 0", self.mass)));
        }
        if !(self.pose.speed >= 0.0) {
            return Err(Error::validation(
                "speed_mps",
                format!("{} must be >= 0", self.pose.speed),
            ));
        }
        OrientedBox::new(
            self.pose.position(),
            self.pose.heading,
            self.half_length,
            self.half_width,
        )?;
        Ok(())
    }

    pub fn footprint(&self) -> OrientedBox {
        self.footprint_at(self.pose.position(), self.pose.heading)
    }

    pub fn footprint_at(&self, center: Vec2, heading: f64) -> OrientedBox {
        OrientedBox {
            center,
            heading,
            half_length: self.half_length,
            half_width: self.half_width,
        }
    }
}

/// Pairwise risk between the ego vehicle and one other participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskTuple {
    pub other_id: String,
    pub other_class: AgentClass,
    /// Risk borne by the ego vehicle.
    pub r_ego: f64,
    /// Risk imposed on the other participant.
    pub r_obj: f64,
    /// Largest harm (either direction) over gated horizon steps.
    pub h_worst: f64,
}

impl RiskTuple {
    /// True if any horizon step passed the overlap gate.
    pub fn is_interacting(&self) -> bool {
        self.h_worst > 0.0
    }
}

/// `m_B / (m_A + m_B) * |v_A - v_B|` written with the law of cosines.
pub fn effective_collision_speed(v_a: f64, v_b: f64, m_a: f64, m_b: f64, alpha: f64) -> f64 {
    let rel_sq = v_a * v_a + v_b * v_b - 2.0 * v_a * v_b * alpha.cos();
    m_b / (m_a + m_b) * rel_sq.max(0.0).sqrt()
}

/// Angle between two velocity vectors in [0, pi]; zero if either is at rest.
pub fn collision_angle(v_a: Vec2, v_b: Vec2) -> f64 {
    let (na, nb) = (v_a.norm(), v_b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (v_a.cross(v_b)).atan2(v_a.dot(v_b)).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpactZone {
    Side,
    Rear,
}

impl ImpactZone {
    /// Near-parallel velocities (within 45 degrees of aligned or opposed)
    /// strike front-to-rear; anything else strikes the side.
    pub fn classify(alpha: f64) -> Self {
        let a = alpha.abs();
        if a < FRAC_PI_4 || a > 3.0 * FRAC_PI_4 {
            ImpactZone::Rear
        } else {
            ImpactZone::Side
        }
    }
}

/// Logistic injury model `H = 1 / (1 + exp(c0 - c1 dv - c_a))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarmModel {
    pub c0: f64,
    pub c1: f64,
    pub c_side: f64,
    pub c_rear: f64,
}

impl Default for HarmModel {
    fn default() -> Self {
        Self {
            c0: 4.457,
            c1: 0.177,
            c_side: 0.244,
            c_rear: -0.431,
        }
    }
}

impl HarmModel {
    pub fn harm(&self, delta_v: f64, zone: ImpactZone) -> f64 {
        let c_a = match zone {
            ImpactZone::Side => self.c_side,
            ImpactZone::Rear => self.c_rear,
        };
        1.0 / (1.0 + (self.c0 - self.c1 * delta_v - c_a).exp())
    }
}

/// [`HarmModel::harm`] with the published coefficients.
pub fn harm(delta_v: f64, zone: ImpactZone) -> f64 {
    HarmModel::default().harm(delta_v, zone)
}

pub fn timestep_risk(probability: f64, harm: f64) -> f64 {
    probability * harm
}

/// Breakdown of one horizon step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRisk {
    pub tau: f64,
    pub sat: bool,
    pub probability: f64,
    pub harm_ego: f64,
    pub harm_other: f64,
}

impl StepRisk {
    pub fn r_ego(&self) -> f64 {
        timestep_risk(self.probability, self.harm_ego)
    }

    pub fn r_obj(&self) -> f64 {
        timestep_risk(self.probability, self.harm_other)
    }
}

/// Ego pose at every sample of a Frenet plan.
pub fn plan_poses(plan: &TrajectoryPlan, path: &ReferencePath) -> Vec<Pose> {
    (0..plan.len())
        .map(|k| {
            path.frenet_to_cartesian_extrapolated(&FrenetState::new(
                plan.l[k],
                plan.d[k],
                plan.l_dot[k],
                plan.d_dot[k],
            ))
        })
        .collect()
}

/// Per-step collision probability and two-way harm along the ego plan.
pub fn step_risks(
    ego_poses: &[Pose],
    taus: &[f64],
    ego: &AgentState,
    other: &AgentState,
    predictor: &dyn Predictor,
    harm_model: &HarmModel,
) -> Result<Vec<StepRisk>> {
    let predictions = predictor.predict(other, taus)?;
    let mut out = Vec::with_capacity(taus.len());
    for ((pose, &tau), pred) in ego_poses.iter().zip(taus).zip(&predictions) {
        let ego_box = ego.footprint_at(pose.position(), pose.heading);
        let other_box = other.footprint_at(pred.gaussian.mean, pred.heading);
        let est = collision_probability(&ego_box, pose.position(), &pred.gaussian, &other_box)?;
        let (harm_ego, harm_other) = if est.sat {
            let v_ego = pose.velocity();
            let alpha = collision_angle(v_ego, pred.velocity);
            let zone = ImpactZone::classify(alpha);
            let (va, vb) = (v_ego.norm(), pred.velocity.norm());
            let dv_ego = effective_collision_speed(va, vb, ego.mass, other.mass, alpha);
            let dv_other = effective_collision_speed(vb, va, other.mass, ego.mass, alpha);
            (harm_model.harm(dv_ego, zone), harm_model.harm(dv_other, zone))
        } else {
            (0.0, 0.0)
        };
        out.push(StepRisk {
            tau,
            sat: est.sat,
            probability: est.probability,
            harm_ego,
            harm_other,
        });
    }
    Ok(out)
}

/// Collapses per-step risks into the pairwise tuple by taking maxima.
pub fn aggregate_risk(other: &AgentState, steps: &[StepRisk]) -> RiskTuple {
    let mut t = RiskTuple {
        other_id: other.id.clone(),
        other_class: other.class,
        r_ego: 0.0,
        r_obj: 0.0,
        h_worst: 0.0,
    };
    for s in steps {
        t.r_ego = t.r_ego.max(s.r_ego());
        t.r_obj = t.r_obj.max(s.r_obj());
        if s.sat {
            t.h_worst = t.h_worst.max(s.harm_ego).max(s.harm_other);
        }
    }
    t
}

/// Maximum risk over the planning horizon for one ego/other pair.
pub fn trajectory_risk(
    plan: &TrajectoryPlan,
    path: &ReferencePath,
    ego: &AgentState,
    other: &AgentState,
    predictor: &dyn Predictor,
    harm_model: &HarmModel,
) -> Result<RiskTuple> {
    let poses = plan_poses(plan, path);
    let steps = step_risks(&poses, &plan.tau, ego, other, predictor, harm_model)?;
    Ok(aggregate_risk(other, &steps))
}

/// Constant-velocity time to collision between bounding circles along the
/// line of centers. Diverging pairs, zero closing speed and values above
/// [`TTC_CAP`] give infinity; already-touching circles that still close give 0.
pub fn time_to_collision(ego: &AgentState, other: &AgentState) -> f64 {
    let r = other.pose.position() - ego.pose.position();
    let dist = r.norm();
    let radii = ego.footprint().bounding_radius() + other.footprint().bounding_radius();
    let rel_v = other.pose.velocity() - ego.pose.velocity();
    let closing = if dist > 0.0 {
        -rel_v.dot(r) / dist
    } else {
        rel_v.norm()
    };
    if !(closing > 0.0) {
        return f64::INFINITY;
    }
    let ttc = ((dist - radii) / closing).max(0.0);
    if ttc > TTC_CAP {
        f64::INFINITY
    } else {
        ttc
    }
}
