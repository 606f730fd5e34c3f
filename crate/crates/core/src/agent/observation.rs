use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{wrap_angle, FrenetState, Pose, ReferencePath, Vec2};
use crate::planner::{ROAD_WIDTH, V_MAX};
use crate::risk::AgentState;

pub const EGO_LEN: usize = 5;
pub const NAV_SLOTS: usize = 2;
pub const VEHICLE_SLOTS: usize = 8;
pub const VRU_SLOTS: usize = 4;
pub const OBSERVATION_LEN: usize = EGO_LEN + 4 * (NAV_SLOTS + VEHICLE_SLOTS + VRU_SLOTS);

/// Slot value for an absent agent or waypoint: far away and co-moving.
pub const PADDING: [f64; 4] = [1.0, 1.0, 0.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObservationConfig {
    pub road_width: f64,
    pub v_max: f64,
    pub d_scale: f64,
    pub curvature_norm: f64,
    pub heading_norm: f64,
    /// Perception range for surrounding agents, m.
    pub d_scale_sv: f64,
}

impl Default for ObservationConfig {
    fn default() -> Self {
        Self {
            road_width: ROAD_WIDTH,
            v_max: V_MAX,
            d_scale: 50.0,
            curvature_norm: 60.0,
            heading_norm: 60.0,
            d_scale_sv: 50.0,
        }
    }
}

/// Lateral positions of the road edges in the path frame, left positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadBounds {
    pub left: f64,
    pub right: f64,
}

impl Default for RoadBounds {
    fn default() -> Self {
        Self {
            left: ROAD_WIDTH / 2.0,
            right: -ROAD_WIDTH / 2.0,
        }
    }
}

pub struct WorldSnapshot<'a> {
    pub ego: &'a AgentState,
    pub ego_yaw_rate: f64,
    pub agents: &'a [AgentState],
    pub road: RoadBounds,
    pub nav_waypoints: &'a [Vec2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub ego: [f64; EGO_LEN],
    pub navigation: [[f64; 4]; NAV_SLOTS],
    pub vehicles: [[f64; 4]; VEHICLE_SLOTS],
    pub vrus: [[f64; 4]; VRU_SLOTS],
}

impl Observation {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(OBSERVATION_LEN);
        v.extend_from_slice(&self.ego);
        for slot in self
            .navigation
            .iter()
            .chain(&self.vehicles)
            .chain(&self.vrus)
        {
            v.extend_from_slice(slot);
        }
        v
    }
}

/// Relative Frenet offsets of `pose` from the ego. Agents outside the path
/// corridor fall back to the path-tangent frame at the ego.
fn relative_frenet(
    path: &ReferencePath,
    ego_fs: &FrenetState,
    ego_pose: &Pose,
    pose: &Pose,
) -> (f64, f64, f64, f64) {
    match path.project_to_frenet(pose) {
        Ok(fs) => (
            fs.d - ego_fs.d,
            fs.l - ego_fs.l,
            fs.d_dot - ego_fs.d_dot,
            fs.l_dot - ego_fs.l_dot,
        ),
        Err(_) => {
            let chi = path
                .heading_curvature(ego_fs.l.clamp(0.0, path.length()))
                .map(|(h, _)| h)
                .unwrap_or(ego_pose.heading);
            let t = Vec2::from_heading(chi);
            let n = t.perp();
            let dp = pose.position() - ego_pose.position();
            let dv = pose.velocity() - ego_pose.velocity();
            (dp.dot(n), dp.dot(t), dv.dot(n), dv.dot(t))
        }
    }
}

fn nearest_slots<const N: usize>(
    snap: &WorldSnapshot,
    path: &ReferencePath,
    ego_fs: &FrenetState,
    cfg: &ObservationConfig,
    select: impl Fn(&AgentState) -> bool,
) -> [[f64; 4]; N] {
    let ego_pos = snap.ego.pose.position();
    let mut near: Vec<(f64, &AgentState)> = snap
        .agents
        .iter()
        .filter(|a| select(a))
        .map(|a| ((a.pose.position() - ego_pos).norm(), a))
        .filter(|(dist, _)| *dist <= cfg.d_scale_sv)
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));

    let mut slots = [PADDING; N];
    for (slot, (_, agent)) in slots.iter_mut().zip(near) {
        let (dd, ds, dvd, dvs) = relative_frenet(path, ego_fs, &snap.ego.pose, &agent.pose);
        *slot = [
            dd / cfg.d_scale_sv,
            ds / cfg.d_scale_sv,
            dvd / cfg.v_max,
            dvs / cfg.v_max,
        ];
    }
    slots
}

/// Stacked, normalized observation of ego, navigation, nearest vehicles and
/// nearest vulnerable road users.
pub fn build_observation(
    snap: &WorldSnapshot,
    path: &ReferencePath,
    cfg: &ObservationConfig,
) -> Result<Observation> {
    let ego_fs = path.project_to_frenet(&snap.ego.pose)?;
    let (chi, _) = path.heading_curvature(ego_fs.l.clamp(0.0, path.length()))?;
    let ego = [
        (snap.road.left - ego_fs.d) / cfg.road_width,
        (ego_fs.d - snap.road.right) / cfg.road_width,
        snap.ego.pose.speed / cfg.v_max,
        wrap_angle(snap.ego.pose.heading - chi) / std::f64::consts::PI,
        snap.ego_yaw_rate,
    ];

    let mut navigation = [PADDING; NAV_SLOTS];
    let ahead = snap
        .nav_waypoints
        .iter()
        .filter_map(|p| path.project_to_frenet(&Pose::new(p.x, p.y, 0.0, 0.0)).ok())
        .filter(|fs| fs.l > ego_fs.l);
    for (slot, wp) in navigation.iter_mut().zip(ahead) {
        let (heading, kappa) = path.heading_curvature(wp.l.clamp(0.0, path.length()))?;
        *slot = [
            (wp.d - ego_fs.d) / cfg.d_scale,
            (wp.l - ego_fs.l) / cfg.d_scale,
            kappa / cfg.curvature_norm,
            heading / cfg.heading_norm,
        ];
    }

    Ok(Observation {
        ego,
        navigation,
        vehicles: nearest_slots(snap, path, &ego_fs, cfg, |a| !a.class.is_vru()),
        vrus: nearest_slots(snap, path, &ego_fs, cfg, |a| a.class.is_vru()),
    })
}
