use serde::{Deserialize, Serialize};

use crate::planner::{longitudinal_jerk_sum, TrajectoryPlan, V_MAX};
use crate::risk::AgentClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub w_speed: f64,
    pub w_progress: f64,
    pub w_jerk: f64,
    pub v_des: f64,
    pub success: f64,
    pub out_of_road: f64,
    pub collision_vehicle: f64,
    pub collision_vru: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            w_speed: 0.7,
            w_progress: 0.1,
            w_jerk: 0.05,
            v_des: 0.9 * V_MAX,
            success: 25.0,
            out_of_road: -15.0,
            collision_vehicle: -10.0,
            collision_vru: -15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TerminalEvent {
    Success,
    OutOfRoad,
    Collision { other_id: String, class: AgentClass },
    Timeout,
}

impl TerminalEvent {
    /// One-time reward for reaching this event.
    pub fn reward(&self, cfg: &RewardConfig) -> f64 {
        match self {
            TerminalEvent::Success => cfg.success,
            TerminalEvent::OutOfRoad => cfg.out_of_road,
            TerminalEvent::Collision { class, .. } if class.is_vru() => cfg.collision_vru,
            TerminalEvent::Collision { .. } => cfg.collision_vehicle,
            TerminalEvent::Timeout => 0.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            TerminalEvent::Success => "success",
            TerminalEvent::OutOfRoad => "out_of_road",
            TerminalEvent::Collision { .. } => "collision",
            TerminalEvent::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub speed: f64,
    pub progress: f64,
    pub terminal: f64,
    pub jerk: f64,
    pub total: f64,
}

/// Speed and progress terms summed over the plan samples, plus the terminal
/// bonus and the weighted longitudinal jerk penalty. `progress[k]` is the
/// forward progress credited to sample `k`; missing entries count as zero.
/// `direction` is +1 when moving along the path and -1 otherwise.
pub fn step_reward(
    plan: &TrajectoryPlan,
    progress: &[f64],
    direction: f64,
    terminal: Option<&TerminalEvent>,
    cfg: &RewardConfig,
) -> RewardBreakdown {
    let rho = if direction < 0.0 { -1.0 } else { 1.0 };
    let speed: f64 = plan
        .l_dot
        .iter()
        .map(|v| cfg.w_speed * (1.0 - (v - cfg.v_des).abs() / cfg.v_des) * rho)
        .sum();
    let progress: f64 = (0..plan.len())
        .map(|k| cfg.w_progress * progress.get(k).copied().unwrap_or(0.0) * rho)
        .sum();
    let terminal = terminal.map_or(0.0, |t| t.reward(cfg));
    let jerk = cfg.w_jerk * (-0.1 * longitudinal_jerk_sum(plan));
    RewardBreakdown {
        speed,
        progress,
        terminal,
        jerk,
        total: speed + progress + terminal + jerk,
    }
}
