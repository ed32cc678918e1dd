//! Meta prompt rendering and parsing.
//!
//! Layout:
//!
//! ```text
//! <description>
//!
//! Examples:
//! Example 1: Keywords: (Task type: regular, Estimated output token size: 1000-1199 tokens), Decision: local, Reward: 16.4, Evaluation: Good decision.
//!
//! Now I give you a new condition to solve: Keywords: (Task type: quality-preferred, Estimated output token size: 800-999 tokens)
//! ```
//!
//! Rewards are written with the shortest representation that parses back to
//! the same `f64`.

use std::path::Path;

use crate::delay::{Decision, TaskType};
use crate::error::{Result, SimError};

use super::{Condition, Evaluation, Experience, ExperiencePool};

pub const DEFAULT_DESCRIPTION: &str = "\
Task goal: You are given a decision-making task for computational task offloading. You need to select between two decisions: \u{201c}local\u{201d} or \u{201c}offload\u{201d}.
Task definition: You have to consider the condition of each case, including the following keywords: Keyword 1: Task types, Keyword 2: Estimated output token size.
Rules: Now I give you a new condition to solve, please reply \u{201c}local\u{201d} or \u{201c}offload\u{201d} only without other words.";

const QUERY_PREFIX: &str = "Now I give you a new condition to solve: ";

/// The task description block of every prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    description: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            description: DEFAULT_DESCRIPTION.to_string(),
        }
    }
}

impl PromptTemplate {
    pub fn new(description: impl Into<String>) -> Result<Self> {
        let description = description.into().trim_end().to_string();
        let lower = description.to_lowercase();
        if !lower.contains("local") || !lower.contains("offload") {
            return Err(SimError::Config(
                "prompt template must mention both \"local\" and \"offload\"".into(),
            ));
        }
        Ok(Self { description })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::new(text)
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaPrompt {
    pub description: String,
    pub examples: Vec<Experience>,
    pub query: Condition,
    pub bin_width: u32,
}

impl MetaPrompt {
    pub fn render(&self) -> String {
        let mut out = String::with_capacity(512 + 160 * self.examples.len());
        out.push_str(&self.description);
        out.push_str("\n\n");
        if !self.examples.is_empty() {
            out.push_str("Examples:\n");
            for (i, e) in self.examples.iter().enumerate() {
                out.push_str(&render_example(i + 1, e, self.bin_width));
                out.push('\n');
            }
            out.push('\n');
        }
        out.push_str(QUERY_PREFIX);
        out.push_str(&render_keywords(&self.query, self.bin_width));
        out.push('\n');
        out
    }
}

/// Prompt over a prioritized pool; examples come out in condition order.
pub fn build_meta_prompt(template: &PromptTemplate, pool: &ExperiencePool, query: Condition, bin_width: u32) -> MetaPrompt {
    MetaPrompt {
        description: template.description().to_string(),
        examples: pool.iter().cloned().collect(),
        query,
        bin_width,
    }
}

fn task_type_label(t: TaskType) -> &'static str {
    match t {
        TaskType::Regular => "regular",
        TaskType::QualityPreferred => "quality-preferred",
    }
}

fn render_keywords(c: &Condition, bin_width: u32) -> String {
    let lo = c.token_bin * bin_width;
    let hi = lo + bin_width - 1;
    format!(
        "Keywords: (Task type: {}, Estimated output token size: {lo}-{hi} tokens)",
        task_type_label(c.task_type)
    )
}

fn render_example(index: usize, e: &Experience, bin_width: u32) -> String {
    let eval = match e.evaluation {
        Evaluation::Good => "Good decision",
        Evaluation::Bad => "Bad decision",
    };
    format!(
        "Example {index}: {}, Decision: {}, Reward: {}, Evaluation: {eval}.",
        render_keywords(&e.condition, bin_width),
        e.decision,
        e.reward
    )
}

/// Parses one rendered example line back into an [`Experience`].
pub fn parse_example_line(line: &str) -> Result<Experience> {
    let err = || SimError::OracleProtocol(format!("malformed example line: {line:?}"));
    let rest = line.strip_prefix("Example ").ok_or_else(err)?;
    let (_, rest) = rest.split_once(": Keywords: (Task type: ").ok_or_else(err)?;
    let (ty, rest) = rest.split_once(", Estimated output token size: ").ok_or_else(err)?;
    let task_type = match ty {
        "regular" => TaskType::Regular,
        "quality-preferred" => TaskType::QualityPreferred,
        _ => return Err(err()),
    };
    let (range, rest) = rest.split_once(" tokens), Decision: ").ok_or_else(err)?;
    let (lo, hi) = range.split_once('-').ok_or_else(err)?;
    let lo: u32 = lo.parse().map_err(|_| err())?;
    let hi: u32 = hi.parse().map_err(|_| err())?;
    if hi < lo {
        return Err(err());
    }
    let width = hi - lo + 1;
    let (decision, rest) = rest.split_once(", Reward: ").ok_or_else(err)?;
    let decision = match decision {
        "local" => Decision::Local,
        "offload" => Decision::Offload,
        _ => return Err(err()),
    };
    let (reward, rest) = rest.split_once(", Evaluation: ").ok_or_else(err)?;
    let reward: f64 = reward.parse().map_err(|_| err())?;
    let evaluation = match rest {
        "Good decision." => Evaluation::Good,
        "Bad decision." => Evaluation::Bad,
        _ => return Err(err()),
    };
    Ok(Experience {
        condition: Condition {
            task_type,
            token_bin: lo / width,
        },
        decision,
        reward,
        evaluation,
    })
}
