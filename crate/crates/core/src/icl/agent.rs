use rand::RngCore;

use crate::error::Result;
use crate::objective::StepOutcome;
use crate::policies::{Choice, DecisionContext, Policy};

use super::{
    build_meta_prompt, decide, explore, Candidate, Condition, DecisionOracle, EpsilonSchedule, Evaluation,
    Experience, ExperiencePool, LatestWindow, MetaPrompt, PromptTemplate,
};

/// Where the agent's demonstration examples come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ExampleSource {
    /// Best reward per condition.
    Prioritized(ExperiencePool),
    /// The most recent outcomes, in arrival order.
    Latest(LatestWindow),
}

impl ExampleSource {
    pub fn prioritized() -> Self {
        ExampleSource::Prioritized(ExperiencePool::new())
    }

    pub fn latest(window: usize) -> Self {
        ExampleSource::Latest(LatestWindow::new(window))
    }

    pub fn examples(&self) -> Vec<Experience> {
        match self {
            ExampleSource::Prioritized(pool) => pool.iter().cloned().collect(),
            ExampleSource::Latest(window) => window.iter().cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IclAgentConfig {
    pub epsilon: EpsilonSchedule,
    pub bin_width: u32,
    pub max_oracle_retries: u32,
}

/// The decision loop: render prompt, ask the oracle (unless exploring),
/// then fold the served outcome back into the example set.
pub struct IclAgent {
    source: ExampleSource,
    oracle: Box<dyn DecisionOracle>,
    template: PromptTemplate,
    cfg: IclAgentConfig,
    last_evaluation: Option<Evaluation>,
}

impl IclAgent {
    pub fn new(source: ExampleSource, oracle: Box<dyn DecisionOracle>, template: PromptTemplate, cfg: IclAgentConfig) -> Self {
        Self {
            source,
            oracle,
            template,
            cfg,
            last_evaluation: None,
        }
    }

    pub fn source(&self) -> &ExampleSource {
        &self.source
    }

    /// Evaluator verdict on the most recent outcome.
    pub fn last_evaluation(&self) -> Option<Evaluation> {
        self.last_evaluation
    }

    pub fn prompt(&self, query: Condition) -> MetaPrompt {
        match &self.source {
            ExampleSource::Prioritized(pool) => build_meta_prompt(&self.template, pool, query, self.cfg.bin_width),
            ExampleSource::Latest(window) => MetaPrompt {
                description: self.template.description().to_string(),
                examples: window.iter().cloned().collect(),
                query,
                bin_width: self.cfg.bin_width,
            },
        }
    }

    /// Records one served outcome and returns the evaluator's verdict.
    ///
    /// An outcome that misses the quality requirement is judged bad and,
    /// under prioritized replay, never reaches the pool. The latest-outcome
    /// window keeps it, labelled bad.
    pub fn record(&mut self, condition: Condition, outcome: &StepOutcome) -> Evaluation {
        let verdict = match &mut self.source {
            ExampleSource::Prioritized(_) if !outcome.quality_ok => Evaluation::Bad,
            ExampleSource::Prioritized(pool) => pool.replay_update(Candidate {
                condition,
                decision: outcome.decision,
                reward: outcome.reward,
            }),
            ExampleSource::Latest(window) => {
                let evaluation = if outcome.quality_ok { Evaluation::Good } else { Evaluation::Bad };
                window.push(Experience {
                    condition,
                    decision: outcome.decision,
                    reward: outcome.reward,
                    evaluation,
                });
                evaluation
            }
        };
        self.last_evaluation = Some(verdict);
        verdict
    }
}

impl Policy for IclAgent {
    fn decide(&mut self, ctx: &DecisionContext<'_>, rng: &mut dyn RngCore) -> Result<Choice> {
        let eps = self.cfg.epsilon.value(ctx.step);
        if eps > 0.0 {
            if let Some(decision) = explore(rng, eps) {
                return Ok(Choice { decision, explored: true });
            }
        }
        let prompt = self.prompt(ctx.condition);
        decide(self.oracle.as_mut(), &prompt, self.cfg.max_oracle_retries).map(Choice::greedy)
    }

    fn observe(&mut self, ctx: &DecisionContext<'_>, outcome: &StepOutcome) {
        self.record(ctx.condition, outcome);
    }
}
