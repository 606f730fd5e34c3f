//! Closed-loop episode simulation.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::spec::{agent_at, Scenario};
use crate::agent::{
    build_observation, step_reward, CostAggregation, HiddenState, LagrangeState, ObservationConfig,
    Policy, RewardBreakdown, RewardConfig, TerminalEvent, WorldSnapshot,
};
use crate::collision::{sat_overlap, Cov2, Frame, GaussianPrediction};
use crate::control::{advance_vehicle, PidGains, StanleyParams, Tracker, VehicleModel};
use crate::error::{Error, Result};
use crate::ethics::{evaluate_cost, CostBreakdown, CostConfig, CostMode};
use crate::geometry::FrenetState;
use crate::planner::{plan_trajectory, ActionBounds, PlanAction, TrajectoryPlan, DEFAULT_STEP};
use crate::prediction::{ConstantVelocityPredictor, PredictedState, Predictor};
use crate::risk::{time_to_collision, trajectory_risk, AgentState, HarmModel, RiskTuple};

/// Lateral gap between plan and vehicle above which a replan starts from the
/// measured state instead of the previous plan.
pub const RESEED_LATERAL_M: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Ethical,
    Selfish,
    /// Ethical cost is computed and logged but never fed back.
    Standard,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Ethical => "ethical",
            RunMode::Selfish => "selfish",
            RunMode::Standard => "standard",
        }
    }

    fn cost_mode(self) -> CostMode {
        match self {
            RunMode::Selfish => CostMode::Selfish,
            RunMode::Ethical | RunMode::Standard => CostMode::Ethical,
        }
    }

    fn feeds_back(self) -> bool {
        self != RunMode::Standard
    }
}

impl std::str::FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ethical" => Ok(RunMode::Ethical),
            "selfish" => Ok(RunMode::Selfish),
            "standard" => Ok(RunMode::Standard),
            other => Err(Error::validation("mode", format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LagrangeConfig {
    pub initial_lambda: f64,
    pub learning_rate: f64,
    pub cost_limit: f64,
}

impl Default for LagrangeConfig {
    fn default() -> Self {
        Self {
            initial_lambda: 0.0,
            learning_rate: 0.05,
            cost_limit: 0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub step_s: f64,
    pub substeps: usize,
    pub off_road_margin_m: f64,
    pub cost: CostConfig,
    pub harm: HarmModel,
    pub predictor: ConstantVelocityPredictor,
    pub reward: RewardConfig,
    pub observation: ObservationConfig,
    pub bounds: ActionBounds,
    pub pid: PidGains,
    pub stanley: StanleyParams,
    pub lagrange: LagrangeConfig,
    pub cost_aggregation: CostAggregation,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            step_s: DEFAULT_STEP,
            substeps: 10,
            off_road_margin_m: 0.2,
            cost: CostConfig::default(),
            harm: HarmModel::default(),
            predictor: ConstantVelocityPredictor::default(),
            reward: RewardConfig::default(),
            observation: ObservationConfig::default(),
            bounds: ActionBounds::default(),
            pid: PidGains::default(),
            stanley: StanleyParams::default(),
            lagrange: LagrangeConfig::default(),
            cost_aggregation: CostAggregation::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_s > 0.0 && self.step_s.is_finite()) {
            return Err(Error::validation("step_s", "must be > 0"));
        }
        if self.substeps == 0 {
            return Err(Error::validation("substeps", "must be >= 1"));
        }
        if !(self.off_road_margin_m >= 0.0) {
            return Err(Error::validation("off_road_margin_m", "must be >= 0"));
        }
        self.cost.validate()?;
        LagrangeState::new(
            self.lagrange.initial_lambda,
            self.lagrange.learning_rate,
            self.lagrange.cost_limit,
        )?;
        Ok(())
    }
}

/// Constant-velocity Gaussians for vehicles. Pedestrians and cyclists get
/// their scripted future positions plus seeded noise and an isotropic
/// covariance of the same scale.
pub struct ScenarioPredictor<'a> {
    pub scenario: &'a Scenario,
    pub vehicles: ConstantVelocityPredictor,
    pub now: f64,
    pub step: usize,
    pub seed: u64,
}

impl Predictor for ScenarioPredictor<'_> {
    fn predict(&self, agent: &AgentState, taus: &[f64]) -> Result<Vec<PredictedState>> {
        let idx = self.scenario.spec.agents.iter().position(|a| a.id == agent.id);
        let Some(idx) = idx.filter(|_| agent.class.is_vru()) else {
            return self.vehicles.predict(agent, taus);
        };
        let spec = &self.scenario.spec.agents[idx];
        let sigma = self.scenario.spec.prediction_noise_m;
        let normal = Normal::new(0.0, sigma).expect("validated noise");
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((self.step as u64) << 16) | idx as u64);
        let cov = Cov2::isotropic(sigma)?;
        Ok(taus
            .iter()
            .enumerate()
            .map(|(k, &tau)| {
                let truth = agent_at(spec, self.now + tau).pose;
                let mean = truth.position()
                    + crate::geometry::Vec2::new(normal.sample(&mut rng), normal.sample(&mut rng));
                PredictedState {
                    gaussian: GaussianPrediction {
                        mean,
                        covariance: cov,
                        step: k,
                        frame: Frame::World,
                    },
                    heading: truth.heading,
                    velocity: truth.velocity(),
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t_s: f64,
    pub x_m: f64,
    pub y_m: f64,
    pub heading_rad: f64,
    pub speed_mps: f64,
    pub l_m: f64,
    pub d_m: f64,
    pub accel_mps2: f64,
    pub jerk_mps3: f64,
    pub steer_rad: f64,
    pub action: PlanAction,
    /// Time to collision per agent; `null` means none within the cap.
    pub ttc_s: BTreeMap<String, Option<f64>>,
    pub min_ttc_s: Option<f64>,
    pub ego_risk: f64,
    pub max_other_risk: f64,
    pub risks: Vec<RiskTuple>,
    pub cost: CostBreakdown,
    pub reward: RewardBreakdown,
    /// Reward minus `lambda * cost`; equals the reward in standard mode.
    pub penalized_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub scenario: String,
    pub policy: String,
    pub mode: RunMode,
    pub seed: u64,
    pub step_s: f64,
    pub cost_aggregation: CostAggregation,
    pub steps: Vec<StepRecord>,
    pub terminal: TerminalEvent,
    pub episode_return: f64,
    pub episode_cost: f64,
    pub lambda_before: f64,
    pub lambda_after: f64,
}

impl EpisodeLog {
    pub fn file_stem(&self) -> String {
        format!("{}__{}__{}__s{}", self.scenario, self.policy, self.mode.as_str(), self.seed)
    }
}

fn min_option(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.filter(|v| v.is_finite()).reduce(f64::min)
}

/// Runs one episode. The result depends only on the arguments.
pub fn run_episode(
    scenario: &Scenario,
    policy: &dyn Policy,
    cfg: &RunConfig,
    mode: RunMode,
    seed: u64,
) -> Result<EpisodeLog> {
    cfg.validate()?;
    let cost_cfg = CostConfig {
        mode: mode.cost_mode(),
        ..cfg.cost
    };
    let lagrange = LagrangeState::new(
        cfg.lagrange.initial_lambda,
        cfg.lagrange.learning_rate,
        cfg.lagrange.cost_limit,
    )?;
    let path = &scenario.path;
    let dt = cfg.step_s;
    let mut ego = scenario.ego_state();
    let mut model = VehicleModel::new(ego.pose);
    let mut tracker = Tracker::new(cfg.pid, cfg.stanley);
    let mut hidden = HiddenState::default();
    let mut hint = 0usize;
    let mut prev_plan: Option<TrajectoryPlan> = None;
    let mut prev_accel = 0.0;
    let mut steps = Vec::new();
    let max_steps = (scenario.spec.duration_s / dt - 1e-9).ceil() as usize;

    let terminal = 'episode: {
        for k in 0..max_steps.max(1) {
            let t = k as f64 * dt;
            let agents = scenario.agents_at(t);
            let at = |e: Error| e.at_step(k);

            let obs = build_observation(
                &WorldSnapshot {
                    ego: &ego,
                    ego_yaw_rate: model.yaw_rate,
                    agents: &agents,
                    road: scenario.road,
                    nav_waypoints: &scenario.nav_waypoints,
                },
                path,
                &cfg.observation,
            )
            .map_err(at)?;
            let (action, next_hidden) = policy.act(&obs, &hidden);
            hidden = next_hidden;
            let action = action.clamped(&cfg.bounds);

            let fs = path.project_near(&ego.pose, &mut hint).map_err(at)?;
            // lateral state continues the previous plan unless tracking has
            // drifted; longitudinal uses the measured speed with the planned
            // acceleration
            let init = match prev_plan.as_ref().map(|p| p.state_at(dt)) {
                Some(s) if (s.d - fs.d).abs() <= RESEED_LATERAL_M => FrenetState {
                    l_ddot: s.l_ddot,
                    d: s.d,
                    d_dot: s.d_dot,
                    d_ddot: s.d_ddot,
                    ..fs
                },
                _ => fs,
            };
            let plan = plan_trajectory(&init, &action, dt);

            let predictor = ScenarioPredictor {
                scenario,
                vehicles: cfg.predictor,
                now: t,
                step: k,
                seed,
            };
            let risks = agents
                .iter()
                .map(|a| trajectory_risk(&plan, path, &ego, a, &predictor, &cfg.harm))
                .collect::<Result<Vec<_>>>()
                .map_err(at)?;
            let cost = evaluate_cost(&risks, &cost_cfg);
            let ttc: BTreeMap<String, Option<f64>> = agents
                .iter()
                .map(|a| {
                    let v = time_to_collision(&ego, a);
                    (a.id.clone(), v.is_finite().then_some(v))
                })
                .collect();

            let (accel, steer, _) = tracker.command(&model, &plan, path, 0.0, dt).map_err(at)?;
            let next_model = advance_vehicle(&model, accel, steer, dt, cfg.substeps);
            let next_ego = AgentState {
                pose: next_model.pose,
                ..ego.clone()
            };
            let t_next = (k + 1) as f64 * dt;
            let next_agents = scenario.agents_at(t_next);

            let next_fs = path.project_near(&next_model.pose, &mut hint).ok();
            let event = terminal_check(
                scenario,
                cfg,
                &next_ego,
                next_fs.as_ref(),
                &next_agents,
                k + 1 >= max_steps,
            );

            let progress: Vec<f64> = (0..plan.len())
                .map(|i| if i == 0 { 0.0 } else { plan.l[i] - plan.l[i - 1] })
                .collect();
            let direction = match &next_fs {
                Some(n) if n.l < fs.l => -1.0,
                _ => 1.0,
            };
            let reward = step_reward(&plan, &progress, direction, event.as_ref(), &cfg.reward);
            let penalized_reward = if mode.feeds_back() {
                reward.total - lagrange.lambda * cost.total
            } else {
                reward.total
            };

            steps.push(StepRecord {
                step: k,
                t_s: t,
                x_m: ego.pose.x,
                y_m: ego.pose.y,
                heading_rad: ego.pose.heading,
                speed_mps: ego.pose.speed,
                l_m: fs.l,
                d_m: fs.d,
                accel_mps2: accel,
                jerk_mps3: if k == 0 { 0.0 } else { (accel - prev_accel) / dt },
                steer_rad: steer,
                action,
                min_ttc_s: min_option(ttc.values().flatten().copied()),
                ttc_s: ttc,
                ego_risk: risks.iter().map(|r| r.r_ego).fold(0.0, f64::max),
                max_other_risk: risks.iter().map(|r| r.r_obj).fold(0.0, f64::max),
                risks,
                cost,
                reward,
                penalized_reward,
            });

            prev_accel = accel;
            prev_plan = Some(plan);
            model = next_model;
            ego = next_ego;
            if let Some(e) = event {
                break 'episode e;
            }
        }
        TerminalEvent::Timeout
    };

    let step_costs: Vec<f64> = steps.iter().map(|s| s.cost.total).collect();
    let episode_cost = cfg.cost_aggregation.aggregate(&step_costs);
    let lambda_after = if mode.feeds_back() {
        lagrange.update(episode_cost).lambda
    } else {
        lagrange.lambda
    };
    Ok(EpisodeLog {
        scenario: scenario.name().to_string(),
        policy: policy.name().to_string(),
        mode,
        seed,
        step_s: dt,
        cost_aggregation: cfg.cost_aggregation,
        episode_return: steps.iter().map(|s| s.reward.total).sum(),
        episode_cost,
        lambda_before: lagrange.lambda,
        lambda_after,
        steps,
        terminal,
    })
}

/// Collision, then leaving the road, then arrival, then running out of time.
fn terminal_check(
    scenario: &Scenario,
    cfg: &RunConfig,
    ego: &AgentState,
    fs: Option<&FrenetState>,
    agents: &[AgentState],
    last_step: bool,
) -> Option<TerminalEvent> {
    let ego_box = ego.footprint();
    if let Some(hit) = agents.iter().find(|a| sat_overlap(&ego_box, &a.footprint())) {
        return Some(TerminalEvent::Collision {
            other_id: hit.id.clone(),
            class: hit.class,
        });
    }
    let Some(fs) = fs else {
        return Some(TerminalEvent::OutOfRoad);
    };
    let margin = cfg.off_road_margin_m;
    if fs.d > scenario.road.left + margin || fs.d < scenario.road.right - margin {
        return Some(TerminalEvent::OutOfRoad);
    }
    let dest = &scenario.spec.destination;
    if (dest.l_min_m..=dest.l_max_m).contains(&fs.l) && fs.d.abs() <= dest.half_width_m {
        return Some(TerminalEvent::Success);
    }
    last_step.then_some(TerminalEvent::Timeout)
}
