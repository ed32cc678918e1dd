//! Episode orchestration, replications and parameter sweeps.
//!
//! An episode serves one task per step, round-robin over users: the PF
//! scheduler runs for the step, the policy decides, the task is served and
//! the outcome is fed back to the policy. Users, tasks and the policy's own
//! randomness come from independent ChaCha streams of the episode seed, so
//! every policy sees the same task sequence and the same radio conditions
//! for a given seed.

mod config;
mod metrics;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::icl::Condition;
use crate::policies::{DecisionContext, Policy};
use crate::radio::CellState;
use crate::workload::{generate_users, TaskStream};

pub use config::{ExperimentConfig, OracleConfig, OracleKind, ProfileSelection};
pub use metrics::{success_rate, write_metrics, Aggregates, EpisodeMetrics, StepRecord, CSV_HEADER};

const USER_STREAM: u64 = 1;
const TASK_STREAM: u64 = 2;
const POLICY_STREAM: u64 = 3;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs one episode with the configured policy and oracle.
pub fn run_episode(cfg: &ExperimentConfig) -> Result<EpisodeMetrics> {
    cfg.validate()?;
    let oracle = cfg.oracle()?;
    let policy = cfg.policy.build(oracle, cfg.template()?)?;
    run_episode_with(cfg, policy)
}

/// Runs one episode driving a caller-supplied policy.
pub fn run_episode_with(cfg: &ExperimentConfig, mut policy: Box<dyn Policy>) -> Result<EpisodeMetrics> {
    cfg.validate()?;
    let env = cfg.environment()?;
    let mut user_rng = stream_rng(cfg.seed, USER_STREAM);
    let mut task_rng = stream_rng(cfg.seed, TASK_STREAM);
    let mut policy_rng = stream_rng(cfg.seed, POLICY_STREAM);

    let users = generate_users(&cfg.workload, &cfg.radio, &mut user_rng)?;
    let mut cell = CellState::new(cfg.radio.clone(), users)?;
    let mut tasks = TaskStream::new(&cfg.workload)?;
    let mut metrics = EpisodeMetrics::new(cfg.seed);
    metrics.records.reserve(cfg.steps);

    for step in 0..cfg.steps {
        let task = tasks.next_task(&mut task_rng);
        let capacity_bps = cell.serve_step(task.user_id).map_err(|e| e.at_step(step))?;
        let condition = Condition::new(task.task_type, task.n_tokens, cfg.policy.bin_width);
        let ctx = DecisionContext {
            step,
            task: &task,
            condition,
            capacity_bps,
            env: &env,
        };
        let choice = policy.decide(&ctx, &mut policy_rng).map_err(|e| e.at_step(step))?;
        let outcome = env
            .evaluate(&task, choice.decision, capacity_bps)
            .map_err(|e| e.at_step(step))?;
        policy.observe(&ctx, &outcome);
        metrics.records.push(StepRecord {
            step,
            user_id: task.user_id,
            task_type: task.task_type,
            n_tokens: task.n_tokens,
            token_bin: condition.token_bin,
            capacity_bps,
            decision: outcome.decision,
            explored: choice.explored,
            delay_s: outcome.delay_s,
            reward: outcome.reward,
            quality_ok: outcome.quality_ok,
        });
    }
    Ok(metrics)
}

/// All replications of `cfg`, in replication order, run in parallel.
pub fn run_replications(cfg: &ExperimentConfig) -> Result<Vec<EpisodeMetrics>> {
    cfg.validate()?;
    (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_episode(&cfg.replication(r)))
        .collect()
}

/// Mean with the min..max range over replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return Self { mean: 0.0, min: 0.0, max: 0.0 };
        }
        Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl fmt::Display for Spread {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4} [{:.4}, {:.4}]", self.mean, self.min, self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub name: String,
    pub replications: usize,
    pub mean_reward: Spread,
    pub final_window_mean_reward: Spread,
    pub mean_delay_s: Spread,
    pub success_rate: Spread,
}

impl ReplicationSummary {
    pub fn new(cfg: &ExperimentConfig, runs: &[EpisodeMetrics]) -> Self {
        let f = cfg.final_window_fraction;
        Self {
            name: cfg.name.clone(),
            replications: runs.len(),
            mean_reward: Spread::of(runs.iter().map(EpisodeMetrics::mean_reward)),
            final_window_mean_reward: Spread::of(runs.iter().map(|m| m.final_window_mean_reward(f))),
            mean_delay_s: Spread::of(runs.iter().map(EpisodeMetrics::mean_delay)),
            success_rate: Spread::of(runs.iter().map(EpisodeMetrics::success_rate)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    PromptTokenMean,
    QualityTaskFraction,
    /// Values are `edge+cloud` profile names.
    ProfilePair,
}

impl FromStr for SweepAxis {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prompt_token_mean" => Ok(SweepAxis::PromptTokenMean),
            "quality_task_fraction" => Ok(SweepAxis::QualityTaskFraction),
            "profile_pair" => Ok(SweepAxis::ProfilePair),
            other => Err(SimError::Config(format!(
                "unknown sweep axis {other:?} (expected prompt_token_mean, quality_task_fraction or profile_pair)"
            ))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::PromptTokenMean => "prompt_token_mean",
            SweepAxis::QualityTaskFraction => "quality_task_fraction",
            SweepAxis::ProfilePair => "profile_pair",
        })
    }
}

impl SweepAxis {
    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &ExperimentConfig, value: &str) -> Result<ExperimentConfig> {
        let mut cfg = base.clone();
        let num = || -> Result<f64> {
            value
                .trim()
                .parse()
                .map_err(|_| SimError::Config(format!("{self}: {value:?} is not a number")))
        };
        match self {
            SweepAxis::PromptTokenMean => cfg.workload.mean_tokens = num()?,
            SweepAxis::QualityTaskFraction => cfg.workload.quality_task_fraction = num()?,
            SweepAxis::ProfilePair => {
                let (edge, cloud) = value
                    .split_once('+')
                    .ok_or_else(|| SimError::Config(format!("profile pair {value:?} must look like edge+cloud")))?;
                cfg.profiles.edge = edge.trim().to_string();
                cfg.profiles.cloud = cloud.trim().to_string();
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: String,
    pub replication: usize,
    pub seed: u64,
    pub mean_delay_s: f64,
    pub mean_reward: f64,
    pub success_rate: f64,
}

pub const SWEEP_CSV_HEADER: &str = "axis,value,replication,seed,mean_delay_s,mean_reward,success_rate";

impl SweepRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6},{:.6}",
            self.axis, self.value, self.replication, self.seed, self.mean_delay_s, self.mean_reward, self.success_rate
        )
    }
}

/// One row per (value, replication), in value-major order.
pub fn run_sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[String]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(SimError::Config("sweep needs at least one value".into()));
    }
    let points: Vec<(String, ExperimentConfig)> = values
        .iter()
        .map(|v| Ok((v.clone(), axis.apply(base, v)?)))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..base.replications).map(move |r| (p, r)))
        .collect();
    jobs.into_par_iter()
        .map(|(p, r)| {
            let (value, cfg) = &points[p];
            let cfg = cfg.replication(r);
            let m = run_episode(&cfg)?;
            Ok(SweepRow {
                axis,
                value: value.clone(),
                replication: r,
                seed: cfg.seed,
                mean_delay_s: m.mean_delay(),
                mean_reward: m.mean_reward(),
                success_rate: m.success_rate(),
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}
