//! Generation and delivery delay of one prompt.
//!
//! Generation time is affine in the output length: the first token costs the
//! model's TTFT and every following token its TPOT. Delivery is the radio
//! download of the generated bytes, plus a fixed backhaul hop when the task
//! was served by the cloud model.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Edge,
    Cloud,
}

impl Placement {
    pub fn as_str(self) -> &'static str {
        match self {
            Placement::Edge => "edge",
            Placement::Cloud => "cloud",
        }
    }
}

/// Where a task is served: the edge model (`Local`) or the cloud model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Local,
    Offload,
}

impl Decision {
    pub const ALL: [Decision; 2] = [Decision::Local, Decision::Offload];

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Local => "local",
            Decision::Offload => "offload",
        }
    }

    pub fn is_offload(self) -> bool {
        self == Decision::Offload
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    Regular,
    QualityPreferred,
}

impl TaskType {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskType::Regular => "regular",
            TaskType::QualityPreferred => "quality_preferred",
        }
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Timing and quality of one deployed LLM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmProfile {
    pub name: String,
    pub ttft_s: f64,
    pub tpot_s: f64,
    pub quality_index: f64,
    pub placement: Placement,
}

impl LlmProfile {
    pub fn new(name: impl Into<String>, ttft_s: f64, tpot_s: f64, quality_index: f64, placement: Placement) -> Result<Self> {
        let p = Self {
            name: name.into(),
            ttft_s,
            tpot_s,
            quality_index,
            placement,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ttft_s >= 0.0) || !(self.tpot_s > 0.0) || !(0.0..=100.0).contains(&self.quality_index) {
            return Err(SimError::InvalidInput(format!(
                "profile {}: need ttft_s >= 0, tpot_s > 0, quality_index in [0, 100]",
                self.name
            )));
        }
        Ok(())
    }
}

/// One user prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRequest {
    pub user_id: usize,
    pub task_id: usize,
    pub task_type: TaskType,
    pub n_tokens: u32,
    pub quality_req: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DelayConfig {
    pub token_size_bytes: f64,
    pub backhaul_s: f64,
}

impl Default for DelayConfig {
    fn default() -> Self {
        Self {
            token_size_bytes: 4.0,
            backhaul_s: 0.05,
        }
    }
}

impl DelayConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.token_size_bytes > 0.0) || !(self.backhaul_s >= 0.0) {
            return Err(SimError::Config(
                "delay: token_size_bytes must be > 0 and backhaul_s >= 0".into(),
            ));
        }
        Ok(())
    }
}

pub fn generation_time(task: &TaskRequest, profile: &LlmProfile) -> f64 {
    profile.ttft_s + f64::from(task.n_tokens) * profile.tpot_s
}

/// Download time of the generated content, plus backhaul when offloaded.
pub fn transmission_delay(task: &TaskRequest, capacity_bps: f64, offloaded: bool, cfg: &DelayConfig) -> Result<f64> {
    if !(capacity_bps > 0.0) {
        return Err(SimError::UnservableLink { capacity_bps });
    }
    let bits = f64::from(task.n_tokens) * cfg.token_size_bytes * 8.0;
    let backhaul = if offloaded { cfg.backhaul_s } else { 0.0 };
    Ok(bits / capacity_bps + backhaul)
}

pub fn serving_profile<'a>(decision: Decision, edge: &'a LlmProfile, cloud: &'a LlmProfile) -> &'a LlmProfile {
    match decision {
        Decision::Local => edge,
        Decision::Offload => cloud,
    }
}

pub fn total_task_delay(
    task: &TaskRequest,
    edge: &LlmProfile,
    cloud: &LlmProfile,
    decision: Decision,
    capacity_bps: f64,
    cfg: &DelayConfig,
) -> Result<f64> {
    let tran = transmission_delay(task, capacity_bps, decision.is_offload(), cfg)?;
    Ok(tran + generation_time(task, serving_profile(decision, edge, cloud)))
}
