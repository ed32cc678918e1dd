use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::delay::{Decision, TaskType};
use crate::error::{Result, SimError};

use super::config::ExperimentConfig;

pub const CSV_HEADER: &str = "step,task_type,token_bin,decision,explored,delay_s,reward,quality_ok,cum_reward,success_rate";

/// One decision step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub user_id: usize,
    pub task_type: TaskType,
    pub n_tokens: u32,
    pub token_bin: u32,
    pub capacity_bps: f64,
    pub decision: Decision,
    pub explored: bool,
    pub delay_s: f64,
    pub reward: f64,
    pub quality_ok: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub seed: u64,
    pub records: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub steps: usize,
    pub cumulative_reward: f64,
    pub mean_reward: f64,
    pub final_window_mean_reward: f64,
    pub mean_delay_s: f64,
    pub total_delay_s: f64,
    pub success_rate: f64,
    pub quality_tasks: usize,
    pub explored_steps: usize,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl EpisodeMetrics {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn cumulative_reward(&self) -> f64 {
        self.records.iter().map(|r| r.reward).sum()
    }

    pub fn mean_reward(&self) -> f64 {
        mean(self.records.iter().map(|r| r.reward))
    }

    pub fn mean_delay(&self) -> f64 {
        mean(self.records.iter().map(|r| r.delay_s))
    }

    /// Sum of per-task delays over the episode.
    pub fn total_delay(&self) -> f64 {
        self.records.iter().map(|r| r.delay_s).sum()
    }

    /// Share of quality-preferred tasks whose requirement was met; 1 when
    /// there were none.
    pub fn success_rate(&self) -> f64 {
        success_rate(&self.records)
    }

    /// The trailing `fraction` of steps (at least one step when non-empty).
    pub fn final_window(&self, fraction: f64) -> &[StepRecord] {
        let n = self.records.len();
        let take = ((n as f64 * fraction).round() as usize).clamp(n.min(1), n);
        &self.records[n - take..]
    }

    /// The leading `fraction` of steps.
    pub fn initial_window(&self, fraction: f64) -> &[StepRecord] {
        let n = self.records.len();
        let take = ((n as f64 * fraction).round() as usize).clamp(n.min(1), n);
        &self.records[..take]
    }

    pub fn final_window_mean_reward(&self, fraction: f64) -> f64 {
        mean(self.final_window(fraction).iter().map(|r| r.reward))
    }

    /// Trailing moving average of the reward, one value per step.
    pub fn moving_average_reward(&self, window: usize) -> Vec<f64> {
        assert!(window >= 1);
        let mut out = Vec::with_capacity(self.records.len());
        let mut sum = 0.0;
        for (i, r) in self.records.iter().enumerate() {
            sum += r.reward;
            if i >= window {
                sum -= self.records[i - window].reward;
            }
            out.push(sum / (i + 1).min(window) as f64);
        }
        out
    }

    pub fn aggregates(&self, final_window_fraction: f64) -> Aggregates {
        Aggregates {
            steps: self.records.len(),
            cumulative_reward: self.cumulative_reward(),
            mean_reward: self.mean_reward(),
            final_window_mean_reward: self.final_window_mean_reward(final_window_fraction),
            mean_delay_s: self.mean_delay(),
            total_delay_s: self.total_delay(),
            success_rate: self.success_rate(),
            quality_tasks: self
                .records
                .iter()
                .filter(|r| r.task_type == TaskType::QualityPreferred)
                .count(),
            explored_steps: self.records.iter().filter(|r| r.explored).count(),
        }
    }

    /// CSV text with running cumulative reward and running success rate.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        let mut cum = 0.0;
        let (mut quality, mut met) = (0usize, 0usize);
        for r in &self.records {
            cum += r.reward;
            if r.task_type == TaskType::QualityPreferred {
                quality += 1;
                met += usize::from(r.quality_ok);
            }
            let rate = if quality == 0 { 1.0 } else { met as f64 / quality as f64 };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.6},{:.6},{},{:.6},{:.6}",
                r.step,
                r.task_type,
                r.token_bin,
                r.decision,
                u8::from(r.explored),
                r.delay_s,
                r.reward,
                u8::from(r.quality_ok),
                cum,
                rate
            );
        }
        out
    }
}

pub fn success_rate(records: &[StepRecord]) -> f64 {
    let (quality, met) = records
        .iter()
        .filter(|r| r.task_type == TaskType::QualityPreferred)
        .fold((0usize, 0usize), |(q, m), r| (q + 1, m + usize::from(r.quality_ok)));
    if quality == 0 {
        1.0
    } else {
        met as f64 / quality as f64
    }
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    seed: u64,
    config: &'a ExperimentConfig,
    aggregates: Aggregates,
}

/// Writes `path` as CSV and a summary JSON next to it (same stem, `.json`).
/// Returns the summary path.
pub fn write_metrics(metrics: &EpisodeMetrics, cfg: &ExperimentConfig, path: &Path) -> Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    }
    std::fs::write(path, metrics.to_csv()).map_err(|e| SimError::io(path, e))?;
    let summary = Summary {
        seed: metrics.seed,
        config: cfg,
        aggregates: metrics.aggregates(cfg.final_window_fraction),
    };
    let json_path = path.with_extension("json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&json_path, text + "\n").map_err(|e| SimError::io(&json_path, e))?;
    Ok(json_path)
}
