//! Per-task reward, quality constraint and the episode objective.

use serde::{Deserialize, Serialize};

use crate::delay::{serving_profile, Decision, LlmProfile, TaskRequest};
use crate::error::{Result, SimError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub target_delay_s: f64,
    /// Subtracted from the reward when the serving model misses the task's
    /// quality requirement.
    pub penalty: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            target_delay_s: 30.0,
            penalty: 40.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.penalty >= 0.0) || !self.target_delay_s.is_finite() {
            return Err(SimError::Config("reward: penalty must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub task_id: usize,
    pub decision: Decision,
    pub delay_s: f64,
    pub quality_ok: bool,
    pub reward: f64,
}

/// Whether the model chosen by `decision` meets the task's quality requirement.
pub fn quality_ok(task: &TaskRequest, decision: Decision, edge: &LlmProfile, cloud: &LlmProfile) -> bool {
    task.quality_req <= serving_profile(decision, edge, cloud).quality_index
}

pub fn step_reward(
    task: &TaskRequest,
    decision: Decision,
    delay_s: f64,
    edge: &LlmProfile,
    cloud: &LlmProfile,
    cfg: &RewardConfig,
) -> StepOutcome {
    debug_assert!(delay_s >= 0.0);
    let ok = quality_ok(task, decision, edge, cloud);
    let penalty = if ok { 0.0 } else { cfg.penalty };
    StepOutcome {
        task_id: task.task_id,
        decision,
        delay_s,
        quality_ok: ok,
        reward: cfg.target_delay_s - delay_s - penalty,
    }
}

/// Total delay over every served task.
pub fn episode_objective(outcomes: &[StepOutcome]) -> f64 {
    outcomes.iter().map(|o| o.delay_s).sum()
}
