use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::observation::Observation;
use crate::planner::{ActionBounds, PlanAction};

/// Recurrent state threaded through a policy between steps.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HiddenState {
    pub step: u64,
    pub memory: Vec<f64>,
}

impl HiddenState {
    fn next(&self) -> Self {
        Self {
            step: self.step + 1,
            memory: self.memory.clone(),
        }
    }
}

pub trait Policy {
    fn name(&self) -> &str;
    fn act(&self, observation: &Observation, hidden: &HiddenState) -> (PlanAction, HiddenState);
}

/// Holds a fixed lateral offset at the desired speed with a 2 s horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneKeepPolicy {
    pub lane_offset: f64,
    pub v_des: f64,
}

impl Policy for LaneKeepPolicy {
    fn name(&self) -> &str {
        "lane_keep"
    }

    fn act(&self, _: &Observation, hidden: &HiddenState) -> (PlanAction, HiddenState) {
        (
            PlanAction::new(2.0, self.lane_offset, self.v_des),
            hidden.next(),
        )
    }
}

/// Replays a fixed action list, then holds its last action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedPolicy {
    pub name: String,
    pub actions: Vec<PlanAction>,
}

impl Policy for ScriptedPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn act(&self, _: &Observation, hidden: &HiddenState) -> (PlanAction, HiddenState) {
        let i = (hidden.step as usize).min(self.actions.len().saturating_sub(1));
        let action = self
            .actions
            .get(i)
            .copied()
            .unwrap_or(PlanAction::new(0.0, 0.0, 0.0));
        (action, hidden.next())
    }
}

/// Uniform draws inside the action bounds, seeded per step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomPolicy {
    pub seed: u64,
    pub bounds: ActionBounds,
}

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn act(&self, _: &Observation, hidden: &HiddenState) -> (PlanAction, HiddenState) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(hidden.step);
        let a = [
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
        ];
        (PlanAction::from_normalized(a, &self.bounds), hidden.next())
    }
}
