//! In-context-learning offloading agent.
//!
//! The agent keeps a pool of demonstration examples keyed by the task's
//! condition (task type and output-size bin), renders them into a meta prompt
//! together with a fixed task description, and asks a [`DecisionOracle`] to
//! answer "local" or "offload". Exploration is epsilon-greedy; the pool keeps
//! only the best-reward example per condition.

mod agent;
mod explore;
mod oracle;
mod pool;
mod prompt;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::delay::{Decision, TaskType};

pub use agent::{ExampleSource, IclAgent, IclAgentConfig};
pub use explore::{epsilon_greedy, explore, EpsilonSchedule};
pub use oracle::{decide, mock_decision, parse_reply, DecisionOracle, MockOracle};
pub use pool::{Candidate, ExperiencePool, LatestWindow};
pub use prompt::{
    build_meta_prompt, parse_example_line, MetaPrompt, PromptTemplate, DEFAULT_DESCRIPTION,
};

/// Discretized decision context; also the example key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Condition {
    pub task_type: TaskType,
    pub token_bin: u32,
}

impl Condition {
    pub fn new(task_type: TaskType, n_tokens: u32, bin_width: u32) -> Self {
        Self {
            task_type,
            token_bin: bin_tokens(n_tokens, bin_width),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/bin{}", self.task_type, self.token_bin)
    }
}

pub fn bin_tokens(n_tokens: u32, bin_width: u32) -> u32 {
    assert!(bin_width >= 1, "bin width must be >= 1");
    n_tokens / bin_width
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    Good,
    Bad,
}

/// A demonstration example: condition, decision, reward, evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub condition: Condition,
    pub decision: Decision,
    pub reward: f64,
    pub evaluation: Evaluation,
}
