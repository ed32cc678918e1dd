//! User placement and prompt streams.

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::delay::{TaskRequest, TaskType};
use crate::error::{Result, SimError};
use crate::radio::{compute_gain, RadioConfig, UserChannel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    pub n_users: usize,
    pub requests_per_user: usize,
    pub mean_tokens: f64,
    pub token_sd: f64,
    pub token_min: u32,
    pub token_max: u32,
    pub quality_task_fraction: f64,
    pub cell_radius_m: f64,
    pub min_distance_m: f64,
    /// Quality requirement attached to regular tasks.
    pub regular_quality_req: f64,
    /// Quality requirement attached to quality-preferred tasks.
    pub quality_preferred_req: f64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self {
            n_users: 20,
            requests_per_user: 50,
            mean_tokens: 1000.0,
            token_sd: 300.0,
            token_min: 50,
            token_max: 2000,
            quality_task_fraction: 0.3,
            cell_radius_m: 250.0,
            min_distance_m: 35.0,
            regular_quality_req: 60.0,
            quality_preferred_req: 85.0,
        }
    }
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(SimError::Config(format!("workload: {msg}")));
        if self.n_users < 1 {
            return bad("n_users must be >= 1");
        }
        if self.requests_per_user < 1 {
            return bad("requests_per_user must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.quality_task_fraction) {
            return bad("quality_task_fraction must be in [0, 1]");
        }
        if self.token_min < 1 || self.token_min > self.token_max {
            return bad("need 1 <= token_min <= token_max");
        }
        if !(self.token_sd >= 0.0) || !self.mean_tokens.is_finite() {
            return bad("token_sd must be >= 0 and mean_tokens finite");
        }
        if !(self.min_distance_m > 0.0) || self.cell_radius_m < self.min_distance_m {
            return bad("need 0 < min_distance_m <= cell_radius_m");
        }
        for q in [self.regular_quality_req, self.quality_preferred_req] {
            if !(0.0..=100.0).contains(&q) {
                return bad("quality requirements must be in [0, 100]");
            }
        }
        Ok(())
    }

    pub fn quality_req(&self, task_type: TaskType) -> f64 {
        match task_type {
            TaskType::Regular => self.regular_quality_req,
            TaskType::QualityPreferred => self.quality_preferred_req,
        }
    }
}

/// Drops `n_users` users uniformly over the annulus between `min_distance_m`
/// and `cell_radius_m` and draws each one's channel gain.
pub fn generate_users<R: Rng + ?Sized>(
    cfg: &WorkloadConfig,
    radio: &RadioConfig,
    rng: &mut R,
) -> Result<Vec<UserChannel>> {
    cfg.validate()?;
    let r0 = cfg.min_distance_m * cfg.min_distance_m;
    let r1 = cfg.cell_radius_m * cfg.cell_radius_m;
    (0..cfg.n_users)
        .map(|user_id| {
            let u: f64 = rng.random();
            let distance_m = (r0 + u * (r1 - r0)).sqrt().clamp(cfg.min_distance_m, cfg.cell_radius_m);
            let gain = compute_gain(distance_m, radio, rng)?;
            Ok(UserChannel::flat(user_id, distance_m, gain, radio.rb_count))
        })
        .collect()
}

/// Endless round-robin prompt stream: one request per user per round.
#[derive(Debug, Clone)]
pub struct TaskStream {
    cfg: WorkloadConfig,
    tokens: Normal<f64>,
    quality: Bernoulli,
    next_user: usize,
    round: usize,
}

impl TaskStream {
    pub fn new(cfg: &WorkloadConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            tokens: Normal::new(cfg.mean_tokens, cfg.token_sd)
                .map_err(|e| SimError::Config(format!("workload: {e}")))?,
            quality: Bernoulli::new(cfg.quality_task_fraction)
                .map_err(|e| SimError::Config(format!("workload: {e}")))?,
            cfg: cfg.clone(),
            next_user: 0,
            round: 0,
        })
    }

    pub fn next_task<R: Rng + ?Sized>(&mut self, rng: &mut R) -> TaskRequest {
        let task_type = if self.quality.sample(rng) {
            TaskType::QualityPreferred
        } else {
            TaskType::Regular
        };
        let raw = self.tokens.sample(rng);
        let n_tokens = raw
            .round()
            .clamp(f64::from(self.cfg.token_min), f64::from(self.cfg.token_max)) as u32;
        let task = TaskRequest {
            user_id: self.next_user,
            task_id: self.round,
            task_type,
            n_tokens,
            quality_req: self.cfg.quality_req(task_type),
        };
        self.next_user += 1;
        if self.next_user == self.cfg.n_users {
            self.next_user = 0;
            self.round += 1;
        }
        task
    }
}

/// One batch of `requests_per_user` prompts for every user, interleaved
/// round-robin across users.
pub fn generate_tasks<R: Rng + ?Sized>(cfg: &WorkloadConfig, rng: &mut R) -> Result<Vec<TaskRequest>> {
    let mut stream = TaskStream::new(cfg)?;
    Ok((0..cfg.n_users * cfg.requests_per_user)
        .map(|_| stream.next_task(rng))
        .collect())
}
