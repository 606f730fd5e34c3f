//! JSON scenario format and its validation.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::RoadBounds;
use crate::error::{Error, Result};
use crate::geometry::{Pose, ReferencePath, Vec2};
use crate::planner::{PlanAction, ROAD_WIDTH};
use crate::risk::{AgentClass, AgentState};

fn default_noise() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    /// Polyline `[x_m, y_m]` pairs.
    pub reference_path: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub road: Option<RoadSpec>,
    #[serde(default)]
    pub lane_center_offset_m: f64,
    pub ego: EgoSpec,
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub navigation_waypoints: Vec<[f64; 2]>,
    pub duration_s: f64,
    pub destination: DestinationSpec,
    /// Standard deviation of the noise on ground-truth predictions of
    /// pedestrians and cyclists.
    #[serde(default = "default_noise")]
    pub prediction_noise_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus_agent: Option<String>,
    /// Named action lists for scripted policies.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub scripts: BTreeMap<String, Vec<ActionSpec>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadSpec {
    pub left_m: f64,
    pub right_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoSpec {
    pub x_m: f64,
    pub y_m: f64,
    pub heading_rad: f64,
    pub speed_mps: f64,
    #[serde(default = "EgoSpec::default_half_length")]
    pub half_length_m: f64,
    #[serde(default = "EgoSpec::default_half_width")]
    pub half_width_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
}

impl EgoSpec {
    fn default_half_length() -> f64 {
        2.4
    }
    fn default_half_width() -> f64 {
        0.9
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub id: String,
    pub class: AgentClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    pub half_length_m: f64,
    pub half_width_m: f64,
    pub motion: MotionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MotionSpec {
    ConstantVelocity {
        x_m: f64,
        y_m: f64,
        heading_rad: f64,
        speed_mps: f64,
    },
    /// Timed waypoints, linearly interpolated. The last position is held at
    /// rest after the final time.
    Trajectory {
        waypoints: Vec<TimedWaypoint>,
        /// Heading while stationary before any motion.
        #[serde(default)]
        heading_rad: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimedWaypoint {
    pub t_s: f64,
    pub x_m: f64,
    pub y_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DestinationSpec {
    pub l_min_m: f64,
    pub l_max_m: f64,
    pub half_width_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpec {
    pub horizon_s: f64,
    pub lateral_m: f64,
    pub speed_mps: f64,
}

impl From<ActionSpec> for PlanAction {
    fn from(a: ActionSpec) -> Self {
        PlanAction::new(a.horizon_s, a.lateral_m, a.speed_mps)
    }
}

impl MotionSpec {
    /// Pose at time `t` seconds.
    pub fn pose_at(&self, t: f64) -> Pose {
        match self {
            MotionSpec::ConstantVelocity {
                x_m,
                y_m,
                heading_rad,
                speed_mps,
            } => {
                let p = Vec2::new(*x_m, *y_m) + Vec2::from_heading(*heading_rad) * (speed_mps * t);
                Pose::new(p.x, p.y, *heading_rad, *speed_mps)
            }
            MotionSpec::Trajectory {
                waypoints,
                heading_rad,
            } => trajectory_pose(waypoints, *heading_rad, t),
        }
    }
}

fn trajectory_pose(wps: &[TimedWaypoint], initial_heading: f64, t: f64) -> Pose {
    let pos = |w: &TimedWaypoint| Vec2::new(w.x_m, w.y_m);
    // heading of the last moving segment at or before segment `i`
    let heading_upto = |i: usize| {
        (0..=i)
            .rev()
            .map(|j| pos(&wps[j + 1]) - pos(&wps[j]))
            .find(|d| d.norm() > 1e-9)
            .map_or(initial_heading, |d| d.heading())
    };
    let last = wps.len() - 1;
    if last == 0 || t <= wps[0].t_s {
        let p = pos(&wps[0]);
        return Pose::new(p.x, p.y, initial_heading, 0.0);
    }
    if t >= wps[last].t_s {
        let p = pos(&wps[last]);
        return Pose::new(p.x, p.y, heading_upto(last - 1), 0.0);
    }
    let i = wps.partition_point(|w| w.t_s <= t) - 1;
    let (a, b) = (&wps[i], &wps[i + 1]);
    let seg = pos(b) - pos(a);
    let dt = b.t_s - a.t_s;
    let s = (t - a.t_s) / dt;
    let p = pos(a) + seg * s;
    Pose::new(p.x, p.y, heading_upto(i), seg.norm() / dt)
}

/// A validated scenario with its resampled reference path.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub path: ReferencePath,
    pub road: RoadBounds,
    pub nav_waypoints: Vec<Vec2>,
}

impl Scenario {
    pub fn from_spec(spec: ScenarioSpec) -> Result<Self> {
        let path = validate(&spec)?;
        let road = spec.road.map_or_else(RoadBounds::default, |r| RoadBounds {
            left: r.left_m,
            right: r.right_m,
        });
        let nav_waypoints = spec
            .navigation_waypoints
            .iter()
            .map(|p| Vec2::new(p[0], p[1]))
            .collect();
        Ok(Self {
            spec,
            path,
            road,
            nav_waypoints,
        })
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn ego_state(&self) -> AgentState {
        let e = &self.spec.ego;
        let ego = AgentState::new(
            "ego",
            AgentClass::Vehicle,
            Pose::new(e.x_m, e.y_m, e.heading_rad, e.speed_mps),
            e.half_length_m,
            e.half_width_m,
        )
        .expect("validated ego");
        match e.mass_kg {
            Some(m) => ego.with_mass(m).expect("validated mass"),
            None => ego,
        }
    }

    /// Every agent at time `t`.
    pub fn agents_at(&self, t: f64) -> Vec<AgentState> {
        self.spec.agents.iter().map(|a| agent_at(a, t)).collect()
    }

    pub fn agent_spec(&self, id: &str) -> Option<&AgentSpec> {
        self.spec.agents.iter().find(|a| a.id == id)
    }

    pub fn script(&self, name: &str) -> Option<Vec<PlanAction>> {
        self.spec
            .scripts
            .get(name)
            .map(|s| s.iter().copied().map(PlanAction::from).collect())
    }
}

pub(crate) fn agent_at(a: &AgentSpec, t: f64) -> AgentState {
    AgentState {
        id: a.id.clone(),
        class: a.class,
        pose: a.motion.pose_at(t),
        mass: a.mass_kg.unwrap_or(a.class.default_mass()),
        half_length: a.half_length_m,
        half_width: a.half_width_m,
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("{v} is not finite")))
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("{v} must be > 0")))
    }
}

fn validate(spec: &ScenarioSpec) -> Result<ReferencePath> {
    if spec.name.trim().is_empty() {
        return Err(Error::validation("name", "must not be empty"));
    }
    for (i, p) in spec.reference_path.iter().enumerate() {
        finite(&format!("reference_path[{i}]"), p[0])?;
        finite(&format!("reference_path[{i}]"), p[1])?;
    }
    let pts: Vec<Vec2> = spec.reference_path.iter().map(|p| Vec2::new(p[0], p[1])).collect();
    let path = ReferencePath::new(&pts)
        .map_err(|e| Error::validation("reference_path", e.to_string()))?;

    if let Some(r) = spec.road {
        finite("road.left_m", r.left_m)?;
        finite("road.right_m", r.right_m)?;
        if !(r.left_m > r.right_m) {
            return Err(Error::validation("road", "left_m must exceed right_m"));
        }
        if r.left_m.max(-r.right_m) >= path.corridor() {
            return Err(Error::validation("road", "bounds extend past the path corridor"));
        }
    }
    let road = spec.road.unwrap_or(RoadSpec {
        left_m: ROAD_WIDTH / 2.0,
        right_m: -ROAD_WIDTH / 2.0,
    });
    finite("lane_center_offset_m", spec.lane_center_offset_m)?;
    if !(road.right_m..=road.left_m).contains(&spec.lane_center_offset_m) {
        return Err(Error::validation("lane_center_offset_m", "outside road bounds"));
    }

    let e = &spec.ego;
    for (f, v) in [("ego.x_m", e.x_m), ("ego.y_m", e.y_m), ("ego.heading_rad", e.heading_rad)] {
        finite(f, v)?;
    }
    if !(e.speed_mps >= 0.0 && e.speed_mps.is_finite()) {
        return Err(Error::validation("ego.speed_mps", format!("{} must be >= 0", e.speed_mps)));
    }
    positive("ego.half_length_m", e.half_length_m)?;
    positive("ego.half_width_m", e.half_width_m)?;
    if let Some(m) = e.mass_kg {
        positive("ego.mass_kg", m)?;
    }
    let ego_fs = path
        .project_to_frenet(&Pose::new(e.x_m, e.y_m, e.heading_rad, e.speed_mps))
        .map_err(|err| Error::validation("ego", err.to_string()))?;
    if ego_fs.d > road.left_m || ego_fs.d < road.right_m {
        return Err(Error::validation("ego", "starts outside the road bounds"));
    }

    let mut ids = std::collections::BTreeSet::new();
    for (i, a) in spec.agents.iter().enumerate() {
        let f = |name: &str| format!("agents[{i}].{name}");
        if a.id.is_empty() || a.id == "ego" {
            return Err(Error::validation(f("id"), "must be non-empty and not `ego`"));
        }
        if !ids.insert(a.id.as_str()) {
            return Err(Error::validation(f("id"), format!("duplicate id `{}`", a.id)));
        }
        positive(&f("half_length_m"), a.half_length_m)?;
        positive(&f("half_width_m"), a.half_width_m)?;
        if let Some(m) = a.mass_kg {
            positive(&f("mass_kg"), m)?;
        }
        match &a.motion {
            MotionSpec::ConstantVelocity {
                x_m,
                y_m,
                heading_rad,
                speed_mps,
            } => {
                for (n, v) in [("x_m", x_m), ("y_m", y_m), ("heading_rad", heading_rad)] {
                    finite(&f(&format!("motion.{n}")), *v)?;
                }
                if !(*speed_mps >= 0.0 && speed_mps.is_finite()) {
                    return Err(Error::validation(f("motion.speed_mps"), "must be >= 0"));
                }
            }
            MotionSpec::Trajectory {
                waypoints,
                heading_rad,
            } => {
                finite(&f("motion.heading_rad"), *heading_rad)?;
                let Some(first) = waypoints.first() else {
                    return Err(Error::validation(f("motion.waypoints"), "must not be empty"));
                };
                if first.t_s != 0.0 {
                    return Err(Error::validation(f("motion.waypoints"), "first t_s must be 0"));
                }
                for (j, w) in waypoints.iter().enumerate() {
                    let wf = f(&format!("motion.waypoints[{j}]"));
                    finite(&wf, w.t_s)?;
                    finite(&wf, w.x_m)?;
                    finite(&wf, w.y_m)?;
                    if j > 0 && !(w.t_s > waypoints[j - 1].t_s) {
                        return Err(Error::validation(wf, "t_s must increase strictly"));
                    }
                }
            }
        }
    }
    if let Some(focus) = &spec.focus_agent {
        if !ids.contains(focus.as_str()) {
            return Err(Error::validation("focus_agent", format!("no agent `{focus}`")));
        }
    }

    for (i, p) in spec.navigation_waypoints.iter().enumerate() {
        finite(&format!("navigation_waypoints[{i}]"), p[0])?;
        finite(&format!("navigation_waypoints[{i}]"), p[1])?;
    }
    positive("duration_s", spec.duration_s)?;

    let d = &spec.destination;
    finite("destination.l_min_m", d.l_min_m)?;
    finite("destination.l_max_m", d.l_max_m)?;
    positive("destination.half_width_m", d.half_width_m)?;
    if !(0.0 <= d.l_min_m && d.l_min_m < d.l_max_m && d.l_max_m <= path.length() + 1e-9) {
        return Err(Error::validation(
            "destination",
            format!("needs 0 <= l_min_m < l_max_m <= {:.3}", path.length()),
        ));
    }
    if d.half_width_m > path.corridor() {
        return Err(Error::validation("destination.half_width_m", "wider than the path corridor"));
    }

    positive("prediction_noise_m", spec.prediction_noise_m)?;

    for (name, actions) in &spec.scripts {
        let f = format!("scripts.{name}");
        if actions.is_empty() {
            return Err(Error::validation(f, "must hold at least one action"));
        }
        for (j, a) in actions.iter().enumerate() {
            for v in [a.horizon_s, a.lateral_m, a.speed_mps] {
                finite(&format!("{f}[{j}]"), v)?;
            }
        }
    }
    Ok(path)
}

fn locate(err: &serde_json::Error) -> Error {
    Error::Parse {
        line: err.line(),
        column: err.column(),
        message: err.to_string(),
    }
}

/// Parses and validates scenario JSON. Syntax errors carry their position;
/// well-formed JSON with a bad field becomes a validation error naming it.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let spec: ScenarioSpec = match serde_path_to_error::deserialize(de) {
        Ok(s) => s,
        Err(e) => {
            let path = e.path().to_string();
            let inner = e.into_inner();
            return Err(match inner.classify() {
                serde_json::error::Category::Data if path != "." => {
                    Error::validation(path, inner.to_string())
                }
                _ => locate(&inner),
            });
        }
    };
    Scenario::from_spec(spec)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wp(t: f64, x: f64, y: f64) -> TimedWaypoint {
        TimedWaypoint {
            t_s: t,
            x_m: x,
            y_m: y,
        }
    }

    #[test]
    fn trajectory_interpolation_and_hold() {
        let m = MotionSpec::Trajectory {
            waypoints: vec![wp(0.0, 0.0, 0.0), wp(2.0, 10.0, 0.0), wp(3.0, 10.0, 5.0)],
            heading_rad: 0.3,
        };
        let p = m.pose_at(1.0);
        assert_eq!((p.x, p.y, p.heading, p.speed), (5.0, 0.0, 0.0, 5.0));
        let p = m.pose_at(2.5);
        assert!((p.y - 2.5).abs() < 1e-12 && (p.heading - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let p = m.pose_at(9.0);
        assert_eq!((p.x, p.y, p.speed), (10.0, 5.0, 0.0));
        assert!((p.heading - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn stationary_waypoint_keeps_initial_heading() {
        let m = MotionSpec::Trajectory {
            waypoints: vec![wp(0.0, 1.0, 2.0)],
            heading_rad: 1.0,
        };
        let p = m.pose_at(4.0);
        assert_eq!((p.x, p.y, p.heading, p.speed), (1.0, 2.0, 1.0, 0.0));
    }

    #[test]
    fn constant_velocity_motion() {
        let m = MotionSpec::ConstantVelocity {
            x_m: 1.0,
            y_m: 0.0,
            heading_rad: 0.0,
            speed_mps: 3.0,
        };
        let p = m.pose_at(2.0);
        assert_eq!((p.x, p.speed), (7.0, 3.0));
    }
}
