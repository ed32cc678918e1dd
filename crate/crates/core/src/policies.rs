//! Offloading policies behind one interface: the in-context-learning agent
//! and its baselines, a tabular value learner, the per-task optimum and a
//! few static anchors.

use std::collections::HashMap;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::delay::{total_task_delay, Decision, DelayConfig, LlmProfile, TaskRequest};
use crate::error::{Result, SimError};
use crate::icl::{explore, Condition, DecisionOracle, EpsilonSchedule, ExampleSource, IclAgent, IclAgentConfig, PromptTemplate};
use crate::objective::{step_reward, RewardConfig, StepOutcome};

/// Models and cost parameters shared by every step of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub edge: LlmProfile,
    pub cloud: LlmProfile,
    pub delay: DelayConfig,
    pub reward: RewardConfig,
}

impl Environment {
    /// Delay and reward of serving `task` with `decision`.
    pub fn evaluate(&self, task: &TaskRequest, decision: Decision, capacity_bps: f64) -> Result<StepOutcome> {
        let delay = total_task_delay(task, &self.edge, &self.cloud, decision, capacity_bps, &self.delay)?;
        Ok(step_reward(task, decision, delay, &self.edge, &self.cloud, &self.reward))
    }
}

pub struct DecisionContext<'a> {
    pub step: usize,
    pub task: &'a TaskRequest,
    pub condition: Condition,
    pub capacity_bps: f64,
    pub env: &'a Environment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Choice {
    pub decision: Decision,
    pub explored: bool,
}

impl Choice {
    pub fn greedy(decision: Decision) -> Self {
        Self { decision, explored: false }
    }
}

pub trait Policy: Send {
    fn decide(&mut self, ctx: &DecisionContext<'_>, rng: &mut dyn RngCore) -> Result<Choice>;

    /// Feedback after the chosen decision was served.
    fn observe(&mut self, _ctx: &DecisionContext<'_>, _outcome: &StepOutcome) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Prioritized replay with epsilon-greedy exploration.
    Icl,
    /// Same agent, but the examples are the latest outcomes.
    LatestExperience,
    /// Prioritized replay, every decision from the oracle.
    NoExploration,
    QLearning,
    Bruteforce,
    AlwaysLocal,
    AlwaysOffload,
    UniformRandom,
}

impl PolicyKind {
    pub fn needs_oracle(self) -> bool {
        matches!(self, PolicyKind::Icl | PolicyKind::LatestExperience | PolicyKind::NoExploration)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub epsilon: EpsilonSchedule,
    pub bin_width: u32,
    pub latest_window: usize,
    pub learning_rate: f64,
    pub max_oracle_retries: u32,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            kind: PolicyKind::Icl,
            epsilon: EpsilonSchedule::default(),
            bin_width: 200,
            latest_window: 10,
            learning_rate: 0.1,
            max_oracle_retries: 2,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        self.epsilon.validate()?;
        if self.bin_width < 1 {
            return Err(SimError::Config("policy: bin_width must be >= 1".into()));
        }
        if self.latest_window < 1 {
            return Err(SimError::Config("policy: latest_window must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(SimError::Config("policy: learning_rate must be in (0, 1]".into()));
        }
        Ok(())
    }

    /// Builds the configured policy. `oracle` is required by the
    /// in-context-learning variants and ignored by the others.
    pub fn build(&self, oracle: Option<Box<dyn DecisionOracle>>, template: PromptTemplate) -> Result<Box<dyn Policy>> {
        self.validate()?;
        let agent = |source: ExampleSource, epsilon: EpsilonSchedule, oracle: Option<Box<dyn DecisionOracle>>| -> Result<Box<dyn Policy>> {
            let oracle = oracle.ok_or_else(|| SimError::Config("policy needs a decision oracle".into()))?;
            let cfg = IclAgentConfig {
                epsilon,
                bin_width: self.bin_width,
                max_oracle_retries: self.max_oracle_retries,
            };
            Ok(Box::new(IclAgent::new(source, oracle, template.clone(), cfg)))
        };
        match self.kind {
            PolicyKind::Icl => agent(ExampleSource::prioritized(), self.epsilon, oracle),
            PolicyKind::LatestExperience => agent(ExampleSource::latest(self.latest_window), self.epsilon, oracle),
            PolicyKind::NoExploration => agent(ExampleSource::prioritized(), EpsilonSchedule::NEVER, oracle),
            PolicyKind::QLearning => Ok(Box::new(QLearningPolicy::new(self.learning_rate, self.epsilon))),
            PolicyKind::Bruteforce => Ok(Box::new(BruteforcePolicy)),
            PolicyKind::AlwaysLocal => Ok(Box::new(StaticPolicy::AlwaysLocal)),
            PolicyKind::AlwaysOffload => Ok(Box::new(StaticPolicy::AlwaysOffload)),
            PolicyKind::UniformRandom => Ok(Box::new(StaticPolicy::UniformRandom)),
        }
    }
}

/// Running value estimate per (condition, decision); unvisited pairs read 0.
#[derive(Debug, Clone, Default)]
pub struct QTable {
    values: HashMap<(Condition, Decision), f64>,
    visits: HashMap<(Condition, Decision), u64>,
    learning_rate: f64,
}

impl QTable {
    pub fn new(learning_rate: f64) -> Self {
        assert!(learning_rate > 0.0 && learning_rate <= 1.0, "learning rate must be in (0, 1]");
        Self {
            learning_rate,
            ..Self::default()
        }
    }

    pub fn value(&self, cond: Condition, decision: Decision) -> f64 {
        self.values.get(&(cond, decision)).copied().unwrap_or(0.0)
    }

    pub fn visits(&self, cond: Condition, decision: Decision) -> u64 {
        self.visits.get(&(cond, decision)).copied().unwrap_or(0)
    }

    /// One-step update with no bootstrap term.
    pub fn update(&mut self, cond: Condition, decision: Decision, reward: f64) {
        let v = self.values.entry((cond, decision)).or_insert(0.0);
        *v += self.learning_rate * (reward - *v);
        *self.visits.entry((cond, decision)).or_insert(0) += 1;
    }

    /// Highest-valued decision; ties go to `Local`.
    pub fn greedy(&self, cond: Condition) -> Decision {
        if self.value(cond, Decision::Offload) > self.value(cond, Decision::Local) {
            Decision::Offload
        } else {
            Decision::Local
        }
    }

    /// Conditions with at least one visit.
    pub fn conditions(&self) -> Vec<Condition> {
        let mut out: Vec<_> = self.visits.keys().map(|(c, _)| *c).collect();
        out.sort();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone)]
pub struct QLearningPolicy {
    pub table: QTable,
    epsilon: EpsilonSchedule,
}

impl QLearningPolicy {
    pub fn new(learning_rate: f64, epsilon: EpsilonSchedule) -> Self {
        Self {
            table: QTable::new(learning_rate),
            epsilon,
        }
    }
}

impl Policy for QLearningPolicy {
    fn decide(&mut self, ctx: &DecisionContext<'_>, rng: &mut dyn RngCore) -> Result<Choice> {
        let eps = self.epsilon.value(ctx.step);
        Ok(match explore(rng, eps) {
            Some(d) => Choice { decision: d, explored: true },
            None => Choice::greedy(self.table.greedy(ctx.condition)),
        })
    }

    fn observe(&mut self, ctx: &DecisionContext<'_>, outcome: &StepOutcome) {
        self.table.update(ctx.condition, outcome.decision, outcome.reward);
    }
}

/// Per-task reward maximizer over both decisions; ties go to `Local`.
pub fn policy_bruteforce(
    task: &TaskRequest,
    edge: &LlmProfile,
    cloud: &LlmProfile,
    capacity_bps: f64,
    delay_cfg: &DelayConfig,
    reward_cfg: &RewardConfig,
) -> Result<Decision> {
    let reward = |d| -> Result<f64> {
        let delay = total_task_delay(task, edge, cloud, d, capacity_bps, delay_cfg)?;
        Ok(step_reward(task, d, delay, edge, cloud, reward_cfg).reward)
    };
    Ok(if reward(Decision::Offload)? > reward(Decision::Local)? {
        Decision::Offload
    } else {
        Decision::Local
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BruteforcePolicy;

impl Policy for BruteforcePolicy {
    fn decide(&mut self, ctx: &DecisionContext<'_>, _rng: &mut dyn RngCore) -> Result<Choice> {
        let env = ctx.env;
        policy_bruteforce(ctx.task, &env.edge, &env.cloud, ctx.capacity_bps, &env.delay, &env.reward).map(Choice::greedy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StaticPolicy {
    AlwaysLocal,
    AlwaysOffload,
    UniformRandom,
}

impl StaticPolicy {
    pub fn pick<R: Rng + ?Sized>(self, rng: &mut R) -> Decision {
        match self {
            StaticPolicy::AlwaysLocal => Decision::Local,
            StaticPolicy::AlwaysOffload => Decision::Offload,
            StaticPolicy::UniformRandom => {
                if rng.random_bool(0.5) {
                    Decision::Offload
                } else {
                    Decision::Local
                }
            }
        }
    }
}

impl Policy for StaticPolicy {
    fn decide(&mut self, _ctx: &DecisionContext<'_>, rng: &mut dyn RngCore) -> Result<Choice> {
        Ok(Choice::greedy(self.pick(rng)))
    }
}
