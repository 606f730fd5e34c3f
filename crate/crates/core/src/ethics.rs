//! Ethical (Bayes + Equality + Maximin) and selfish cost aggregation of
//! pairwise risk tuples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk::{AgentClass, RiskTuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    Ethical,
    Selfish,
}

impl CostMode {
    fn as_str(self) -> &'static str {
        match self {
            CostMode::Ethical => "ethical",
            CostMode::Selfish => "selfish",
        }
    }
}

/// Per-class multipliers applied to the risk imposed on other participants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassWeights {
    pub vehicle: f64,
    pub cyclist: f64,
    pub pedestrian: f64,
}

impl Default for ClassWeights {
    fn default() -> Self {
        Self {
            vehicle: 1.0,
            cyclist: 1.0,
            pedestrian: 1.0,
        }
    }
}

impl ClassWeights {
    pub fn get(&self, class: AgentClass) -> f64 {
        match class {
            AgentClass::Vehicle => self.vehicle,
            AgentClass::Cyclist => self.cyclist,
            AgentClass::Pedestrian => self.pedestrian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostConfig {
    pub mode: CostMode,
    pub w_bayes: f64,
    pub w_equality: f64,
    pub w_maximin: f64,
    pub w_selfish: f64,
    pub gamma_maximin: f64,
    pub class_weights: ClassWeights,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            mode: CostMode::Ethical,
            w_bayes: 3.33,
            w_equality: 3.33,
            w_maximin: 3.33,
            w_selfish: 10.0,
            gamma_maximin: 2.0,
            class_weights: ClassWeights::default(),
        }
    }
}

impl CostConfig {
    pub fn selfish() -> Self {
        Self {
            mode: CostMode::Selfish,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("w_bayes", self.w_bayes),
            ("w_equality", self.w_equality),
            ("w_maximin", self.w_maximin),
            ("w_selfish", self.w_selfish),
            ("class_weights.vehicle", self.class_weights.vehicle),
            ("class_weights.cyclist", self.class_weights.cyclist),
            ("class_weights.pedestrian", self.class_weights.pedestrian),
        ];
        for (name, w) in weights {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::validation(name, format!("{w} must be >= 0")));
            }
        }
        if !(self.gamma_maximin >= 1.0) {
            return Err(Error::validation(
                "gamma_maximin",
                format!("{} must be >= 1", self.gamma_maximin),
            ));
        }
        Ok(())
    }

    fn require(&self, mode: CostMode) -> Result<()> {
        if self.mode != mode {
            return Err(Error::ModeMismatch {
                configured: self.mode.as_str(),
                requested: mode.as_str(),
            });
        }
        Ok(())
    }
}

/// Risks of every participant (ego first) and worst harms per interacting pair.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RiskSet {
    pub risks: Vec<f64>,
    pub harms: Vec<f64>,
}

impl RiskSet {
    pub fn new(risks: Vec<f64>, harms: Vec<f64>) -> Result<Self> {
        for (field, values) in [("risks", &risks), ("harms", &harms)] {
            if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::validation(field, format!("{v} outside [0, 1]")));
            }
        }
        Ok(Self { risks, harms })
    }

    /// The ego contributes one entry, the largest risk it bears over all pairs.
    /// Each interacting participant contributes the risk imposed on it, scaled
    /// by its class weight, and its worst-case harm.
    pub fn from_tuples(tuples: &[RiskTuple], weights: &ClassWeights) -> Self {
        let ego = tuples.iter().map(|t| t.r_ego).fold(0.0, f64::max);
        let mut risks = vec![ego];
        let mut harms = Vec::new();
        for t in tuples.iter().filter(|t| t.is_interacting()) {
            risks.push((t.r_obj * weights.get(t.other_class)).min(1.0));
            harms.push(t.h_worst);
        }
        Self { risks, harms }
    }
}

/// Mean risk over all participants.
pub fn bayes_cost(set: &RiskSet) -> Result<f64> {
    if set.risks.is_empty() {
        return Err(Error::EmptyRiskSet);
    }
    Ok(set.risks.iter().sum::<f64>() / set.risks.len() as f64)
}

/// Mean absolute pairwise risk difference; zero for fewer than two risks.
pub fn equality_cost(set: &RiskSet) -> f64 {
    let n = set.risks.len();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for (i, a) in set.risks.iter().enumerate() {
        for b in &set.risks[i + 1..] {
            total += (a - b).abs();
        }
    }
    total / (n * (n - 1) / 2) as f64
}

/// Largest harm raised to `gamma`; zero without interactions.
pub fn maximin_cost(set: &RiskSet, gamma: f64) -> f64 {
    if set.harms.is_empty() {
        return 0.0;
    }
    set.harms.iter().copied().fold(0.0, f64::max).powf(gamma)
}

pub fn ethical_cost(set: &RiskSet, cfg: &CostConfig) -> Result<f64> {
    cfg.require(CostMode::Ethical)?;
    Ok(cfg.w_bayes * bayes_cost(set)?
        + cfg.w_equality * equality_cost(set)
        + cfg.w_maximin * maximin_cost(set, cfg.gamma_maximin))
}

/// `w_selfish` times the mean ego-side risk over interacting participants.
pub fn selfish_cost(ego_risks: &[f64], cfg: &CostConfig) -> Result<f64> {
    cfg.require(CostMode::Selfish)?;
    if ego_risks.is_empty() {
        return Ok(0.0);
    }
    Ok(cfg.w_selfish * ego_risks.iter().sum::<f64>() / ego_risks.len() as f64)
}

/// Every principle evaluated for logging, plus the cost for the configured mode.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub bayes: f64,
    pub equality: f64,
    pub maximin: f64,
    pub selfish: f64,
    pub total: f64,
}

pub fn evaluate_cost(tuples: &[RiskTuple], cfg: &CostConfig) -> CostBreakdown {
    let set = RiskSet::from_tuples(tuples, &cfg.class_weights);
    let ego_risks: Vec<f64> = tuples
        .iter()
        .filter(|t| t.is_interacting())
        .map(|t| t.r_ego)
        .collect();
    // the set always holds the ego entry, so the mean is defined
    let bayes = bayes_cost(&set).unwrap_or(0.0);
    let equality = equality_cost(&set);
    let maximin = maximin_cost(&set, cfg.gamma_maximin);
    let selfish = if ego_risks.is_empty() {
        0.0
    } else {
        cfg.w_selfish * ego_risks.iter().sum::<f64>() / ego_risks.len() as f64
    };
    let total = match cfg.mode {
        CostMode::Ethical => cfg.w_bayes * bayes + cfg.w_equality * equality + cfg.w_maximin * maximin,
        CostMode::Selfish => selfish,
    };
    CostBreakdown {
        bayes,
        equality,
        maximin,
        selfish,
        total,
    }
}
