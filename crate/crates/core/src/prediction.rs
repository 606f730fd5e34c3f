//! Gaussian motion predictors for surrounding agents.

use serde::{Deserialize, Serialize};

use crate::collision::{Cov2, Frame, GaussianPrediction};
use crate::error::Result;
use crate::geometry::Vec2;
use crate::risk::AgentState;

/// Predicted distribution plus the kinematics needed for the harm model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedState {
    pub gaussian: GaussianPrediction,
    pub heading: f64,
    pub velocity: Vec2,
}

/// Produces one prediction per horizon offset `taus` (seconds from now).
pub trait Predictor {
    fn predict(&self, agent: &AgentState, taus: &[f64]) -> Result<Vec<PredictedState>>;
}

/// Propagates the current velocity; covariance is `diag(sigma_long^2,
/// sigma_lat^2)` in the agent's heading frame, scaled by `1 + tau * growth`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstantVelocityPredictor {
    pub sigma_long: f64,
    pub sigma_lat: f64,
    pub growth: f64,
}

impl Default for ConstantVelocityPredictor {
    fn default() -> Self {
        Self {
            sigma_long: 0.5,
            sigma_lat: 0.25,
            growth: 0.5,
        }
    }
}

impl Predictor for ConstantVelocityPredictor {
    fn predict(&self, agent: &AgentState, taus: &[f64]) -> Result<Vec<PredictedState>> {
        let p0 = agent.pose.position();
        let v = agent.pose.velocity();
        let base = Cov2::rotated_diag(
            self.sigma_long * self.sigma_long,
            self.sigma_lat * self.sigma_lat,
            agent.pose.heading,
        )?;
        Ok(taus
            .iter()
            .enumerate()
            .map(|(step, &tau)| PredictedState {
                gaussian: GaussianPrediction {
                    mean: p0 + v * tau,
                    covariance: base.scaled(1.0 + tau * self.growth),
                    step,
                    frame: Frame::World,
                },
                heading: agent.pose.heading,
                velocity: v,
            })
            .collect())
    }
}
