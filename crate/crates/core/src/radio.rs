//! Downlink radio model for a single cell.
//!
//! Channel gains follow an urban-macro path loss with lognormal shadowing and
//! are drawn once per episode (block fading). Resource blocks are handed out
//! per slot by a proportional-fair scheduler, and per-user capacity is the
//! Shannon sum over the blocks a user holds.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Radio parameters. Interference is a fixed aggregate power, zero for an
/// isolated cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub rb_count: usize,
    pub rb_bandwidth_hz: f64,
    pub bs_tx_power_dbm_per_rb: f64,
    pub noise_density_dbm_hz: f64,
    pub intercell_interference_w: f64,
    pub pathloss_ref_db: f64,
    pub pathloss_exp_coeff: f64,
    pub shadowing_sigma_db: f64,
    /// EWMA window of the proportional-fair average rate, in slots.
    pub pf_window_slots: f64,
    /// Floor on the PF denominator, bit/s.
    pub pf_min_rate_bps: f64,
    /// Scheduling slots simulated per decision step.
    pub slots_per_step: usize,
}

pub const DEFAULT_RB_COUNT: usize = 50;
pub const DEFAULT_BS_TOTAL_POWER_DBM: f64 = 40.0;

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            rb_count: DEFAULT_RB_COUNT,
            rb_bandwidth_hz: 180e3,
            bs_tx_power_dbm_per_rb: DEFAULT_BS_TOTAL_POWER_DBM
                - 10.0 * (DEFAULT_RB_COUNT as f64).log10(),
            noise_density_dbm_hz: -174.0,
            intercell_interference_w: 0.0,
            pathloss_ref_db: 128.1,
            pathloss_exp_coeff: 37.6,
            shadowing_sigma_db: 8.0,
            pf_window_slots: 100.0,
            pf_min_rate_bps: 1.0,
            slots_per_step: 10,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(SimError::Config(format!("radio: {msg}")));
        if self.rb_count < 1 {
            return bad("rb_count must be >= 1");
        }
        if !(self.rb_bandwidth_hz > 0.0) {
            return bad("rb_bandwidth_hz must be > 0");
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return bad("shadowing_sigma_db must be >= 0");
        }
        if !(self.intercell_interference_w >= 0.0) {
            return bad("intercell_interference_w must be >= 0");
        }
        if !(self.pf_window_slots >= 1.0) {
            return bad("pf_window_slots must be >= 1");
        }
        if !(self.pf_min_rate_bps > 0.0) {
            return bad("pf_min_rate_bps must be > 0");
        }
        if self.slots_per_step < 1 {
            return bad("slots_per_step must be >= 1");
        }
        Ok(())
    }

    /// Transmit power per RB in watts.
    pub fn tx_power_w(&self) -> f64 {
        dbm_to_watts(self.bs_tx_power_dbm_per_rb)
    }

    /// Noise power over one RB in watts.
    pub fn noise_per_rb_w(&self) -> f64 {
        dbm_to_watts(self.noise_density_dbm_hz) * self.rb_bandwidth_hz
    }

    /// SINR on one RB for a linear channel gain.
    pub fn sinr(&self, gain: f64) -> f64 {
        self.tx_power_w() * gain / (self.intercell_interference_w + self.noise_per_rb_w())
    }

    /// Shannon rate of one RB for a linear channel gain, bit/s.
    pub fn rb_rate(&self, gain: f64) -> f64 {
        self.rb_bandwidth_hz * (1.0 + self.sinr(gain)).log2()
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// One user's view of the downlink channel plus its PF history.
#[derive(Debug, Clone, PartialEq)]
pub struct UserChannel {
    pub user_id: usize,
    pub distance_m: f64,
    pub gain_per_rb: Vec<f64>,
    pub avg_rate_ewma: f64,
}

impl UserChannel {
    /// A user with the same gain on every RB and no scheduling history.
    pub fn flat(user_id: usize, distance_m: f64, gain: f64, rb_count: usize) -> Self {
        Self {
            user_id,
            distance_m,
            gain_per_rb: vec![gain; rb_count],
            avg_rate_ewma: 0.0,
        }
    }
}

/// RB index → owning user. `None` marks an idle block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RbAllocation {
    pub assignment: Vec<Option<usize>>,
}

impl RbAllocation {
    pub fn rbs_of(&self, user_id: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, owner)| **owner == Some(user_id))
            .map(|(q, _)| q)
    }

    pub fn count_for(&self, user_id: usize) -> usize {
        self.rbs_of(user_id).count()
    }
}

/// Linear channel gain at `distance_m` with one shadowing draw.
pub fn compute_gain<R: Rng + ?Sized>(distance_m: f64, cfg: &RadioConfig, rng: &mut R) -> Result<f64> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(SimError::InvalidInput(format!(
            "distance must be positive, got {distance_m}"
        )));
    }
    let shadow = Normal::new(0.0, cfg.shadowing_sigma_db)
        .map_err(|e| SimError::InvalidInput(format!("shadowing sigma: {e}")))?
        .sample(rng);
    let loss_db = cfg.pathloss_ref_db + cfg.pathloss_exp_coeff * (distance_m / 1000.0).log10() + shadow;
    Ok(10f64.powf(-loss_db / 10.0))
}

/// Runs one proportional-fair scheduling slot.
///
/// RBs are visited in index order. Each goes to the user maximizing
/// `rate(q) / max(projected_avg, pf_min_rate_bps)`, where the projected
/// average already counts the rate granted earlier in the same slot. Ties go
/// to the lowest `user_id`. The EWMA history of every user is updated once
/// the slot is complete.
pub fn allocate_proportional_fair(users: &mut [UserChannel], cfg: &RadioConfig) -> Result<RbAllocation> {
    if users.is_empty() {
        return Err(SimError::InvalidInput("no users to schedule".into()));
    }
    if let Some(u) = users.iter().find(|u| u.gain_per_rb.len() != cfg.rb_count) {
        return Err(SimError::InvalidInput(format!(
            "user {} has {} gains for {} RBs",
            u.user_id,
            u.gain_per_rb.len(),
            cfg.rb_count
        )));
    }

    let keep = 1.0 - 1.0 / cfg.pf_window_slots;
    let inv_window = 1.0 / cfg.pf_window_slots;
    let mut granted = vec![0.0; users.len()];
    let mut assignment = Vec::with_capacity(cfg.rb_count);

    for q in 0..cfg.rb_count {
        let mut best: Option<(usize, f64)> = None;
        for (idx, user) in users.iter().enumerate() {
            let rate = cfg.rb_rate(user.gain_per_rb[q]);
            let projected = keep * user.avg_rate_ewma + inv_window * granted[idx];
            let metric = rate / projected.max(cfg.pf_min_rate_bps);
            best = match best {
                None => Some((idx, metric)),
                Some((b, m)) if metric > m || (metric == m && user.user_id < users[b].user_id) => {
                    Some((idx, metric))
                }
                keep_best => keep_best,
            };
        }
        let (winner, _) = best.expect("non-empty user list");
        granted[winner] += cfg.rb_rate(users[winner].gain_per_rb[q]);
        assignment.push(Some(users[winner].user_id));
    }

    for (user, rate) in users.iter_mut().zip(&granted) {
        user.avg_rate_ewma = keep * user.avg_rate_ewma + inv_window * rate;
    }
    Ok(RbAllocation { assignment })
}

/// Capacity in bit/s over the RBs assigned to `user`; zero if none.
pub fn link_capacity(user: &UserChannel, alloc: &RbAllocation, cfg: &RadioConfig) -> f64 {
    alloc
        .rbs_of(user.user_id)
        .map(|q| cfg.rb_rate(user.gain_per_rb[q]))
        .sum()
}

/// All users of the cell with their PF state.
#[derive(Debug, Clone)]
pub struct CellState {
    pub cfg: RadioConfig,
    pub users: Vec<UserChannel>,
}

impl CellState {
    pub fn new(cfg: RadioConfig, users: Vec<UserChannel>) -> Result<Self> {
        cfg.validate()?;
        if users.is_empty() {
            return Err(SimError::InvalidInput("cell has no users".into()));
        }
        Ok(Self { cfg, users })
    }

    /// Schedules `slots_per_step` PF slots over every user and returns the
    /// mean rate that `user_id` achieved across them.
    pub fn serve_step(&mut self, user_id: usize) -> Result<f64> {
        let idx = self
            .users
            .iter()
            .position(|u| u.user_id == user_id)
            .ok_or_else(|| SimError::InvalidInput(format!("unknown user {user_id}")))?;
        let mut total = 0.0;
        for _ in 0..self.cfg.slots_per_step {
            let alloc = allocate_proportional_fair(&mut self.users, &self.cfg)?;
            total += link_capacity(&self.users[idx], &alloc, &self.cfg);
        }
        Ok(total / self.cfg.slots_per_step as f64)
    }
}
