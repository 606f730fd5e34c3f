//! Observation, reward, replay and dual-variable machinery for a learning
//! agent, plus simple built-in policies.

pub mod lagrange;
pub mod observation;
pub mod policy;
pub mod replay;
pub mod reward;
pub mod sum_tree;

pub use lagrange::{CostAggregation, LagrangeState};
pub use observation::{build_observation, Observation, ObservationConfig, RoadBounds, WorldSnapshot, OBSERVATION_LEN};
pub use policy::{HiddenState, LaneKeepPolicy, Policy, RandomPolicy, ScriptedPolicy};
pub use replay::{dynamic_priority, BetaSchedule, DynamicPriority, ReplayBuffer, SampledBatch, Transition};
pub use reward::{step_reward, RewardBreakdown, RewardConfig, TerminalEvent};
pub use sum_tree::SumTree;
