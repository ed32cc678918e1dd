use std::collections::{BTreeMap, VecDeque};

use crate::delay::Decision;

use super::{Condition, Evaluation, Experience};

/// An outcome that has not been evaluated yet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub condition: Condition,
    pub decision: Decision,
    pub reward: f64,
}

/// Best-reward example per condition, ordered by condition.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperiencePool {
    entries: BTreeMap<Condition, Experience>,
}

impl ExperiencePool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, condition: &Condition) -> Option<&Experience> {
        self.entries.get(condition)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.entries.values()
    }

    /// Prioritized replay update.
    ///
    /// An unseen condition is always inserted and judged good. For a known
    /// condition the candidate replaces the stored example only with a
    /// strictly higher reward; a lower reward is judged bad and an equal one
    /// keeps the incumbent.
    pub fn replay_update(&mut self, candidate: Candidate) -> Evaluation {
        let fresh = Experience {
            condition: candidate.condition,
            decision: candidate.decision,
            reward: candidate.reward,
            evaluation: Evaluation::Good,
        };
        match self.entries.get_mut(&candidate.condition) {
            None => {
                self.entries.insert(candidate.condition, fresh);
                Evaluation::Good
            }
            Some(stored) if candidate.reward > stored.reward => {
                *stored = fresh;
                Evaluation::Good
            }
            Some(stored) if candidate.reward < stored.reward => Evaluation::Bad,
            Some(_) => Evaluation::Good,
        }
    }
}

/// The most recent `capacity` outcomes, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct LatestWindow {
    capacity: usize,
    entries: VecDeque<Experience>,
}

impl LatestWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "window must hold at least one example");
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, exp: Experience) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(exp);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.entries.iter()
    }
}
