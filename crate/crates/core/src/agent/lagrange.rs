use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dual variable for the expected-cost constraint `D <= cost_limit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagrangeState {
    pub lambda: f64,
    pub learning_rate: f64,
    pub cost_limit: f64,
}

impl LagrangeState {
    pub fn new(lambda: f64, learning_rate: f64, cost_limit: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::validation("lambda", format!("{lambda} must be >= 0")));
        }
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::validation(
                "learning_rate",
                format!("{learning_rate} must be > 0"),
            ));
        }
        if !cost_limit.is_finite() {
            return Err(Error::validation("cost_limit", "must be finite"));
        }
        Ok(Self {
            lambda,
            learning_rate,
            cost_limit,
        })
    }

    /// One projected gradient-ascent step on `lambda * (cost - cost_limit)`.
    pub fn update(&self, episode_cost: f64) -> Self {
        let lambda = (self.lambda + self.learning_rate * (episode_cost - self.cost_limit)).max(0.0);
        Self { lambda, ..*self }
    }
}

/// How per-step costs are folded into the episode estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostAggregation {
    Mean,
    Discounted { gamma: f64 },
}

impl Default for CostAggregation {
    fn default() -> Self {
        CostAggregation::Mean
    }
}

impl CostAggregation {
    /// Zero for an empty episode.
    pub fn aggregate(&self, costs: &[f64]) -> f64 {
        match *self {
            CostAggregation::Mean if costs.is_empty() => 0.0,
            CostAggregation::Mean => costs.iter().sum::<f64>() / costs.len() as f64,
            CostAggregation::Discounted { gamma } => {
                let mut g = 1.0;
                let mut acc = 0.0;
                for c in costs {
                    acc += g * c;
                    g *= gamma;
                }
                acc
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_examples() {
        let s = LagrangeState::new(1.0, 0.1, 0.6).unwrap();
        assert!((s.update(1.6).lambda - 1.1).abs() < 1e-12);
        assert_eq!(s.update(0.6).lambda, 1.0);
        let z = LagrangeState::new(0.0, 0.1, 0.6).unwrap();
        assert_eq!(z.update(0.2).lambda, 0.0);
    }

    #[test]
    fn rejects_bad_rate() {
        assert!(LagrangeState::new(0.0, 0.0, 0.6).is_err());
        assert!(LagrangeState::new(-1.0, 0.1, 0.6).is_err());
    }

    #[test]
    fn aggregation_modes() {
        assert_eq!(CostAggregation::Mean.aggregate(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(CostAggregation::Mean.aggregate(&[]), 0.0);
        let d = CostAggregation::Discounted { gamma: 0.5 };
        assert_eq!(d.aggregate(&[1.0, 2.0, 4.0]), 3.0);
    }
}
