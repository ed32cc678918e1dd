use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::delay::Decision;
use crate::error::{Result, SimError};

/// Geometric decay with a floor: `max(floor, start * decay^step)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub decay: f64,
    pub floor: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 0.5,
            decay: 0.998,
            floor: 0.01,
        }
    }
}

impl EpsilonSchedule {
    pub const NEVER: Self = Self {
        start: 0.0,
        decay: 1.0,
        floor: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.start) || !unit.contains(&self.decay) || !unit.contains(&self.floor) {
            return Err(SimError::Config("epsilon: start, decay and floor must be in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn value(&self, step: usize) -> f64 {
        let exp = i32::try_from(step).unwrap_or(i32::MAX);
        (self.start * self.decay.powi(exp)).max(self.floor)
    }
}

/// With probability `epsilon`, a uniformly random decision.
pub fn explore<R: Rng + ?Sized>(rng: &mut R, epsilon: f64) -> Option<Decision> {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    if rng.random::<f64>() < epsilon {
        Some(if rng.random_bool(0.5) { Decision::Offload } else { Decision::Local })
    } else {
        None
    }
}

/// Returns `(decision, explored)`.
pub fn epsilon_greedy<R: Rng + ?Sized>(rng: &mut R, epsilon: f64, oracle_decision: Decision) -> (Decision, bool) {
    match explore(rng, epsilon) {
        Some(d) => (d, true),
        None => (oracle_decision, false),
    }
}
