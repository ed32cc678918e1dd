use std::collections::BTreeMap;

use crate::delay::Decision;
use crate::error::{Result, SimError};

use super::{Condition, Experience, MetaPrompt};

/// Anything that can answer a meta prompt, typically an LLM.
pub trait DecisionOracle: Send {
    /// Raw reply text for `prompt`.
    fn answer(&mut self, prompt: &MetaPrompt) -> Result<String>;
}

impl<O: DecisionOracle + ?Sized> DecisionOracle for Box<O> {
    fn answer(&mut self, prompt: &MetaPrompt) -> Result<String> {
        (**self).answer(prompt)
    }
}

/// Extracts the decision from a reply. Exactly one of the two keywords must
/// appear as a whole word, in any case; a reply naming neither or both is a
/// protocol error.
pub fn parse_reply(reply: &str) -> Result<Decision> {
    let mut found: Option<Decision> = None;
    for word in reply.split(|c: char| !c.is_alphanumeric()) {
        let d = if word.eq_ignore_ascii_case("local") {
            Decision::Local
        } else if word.eq_ignore_ascii_case("offload") {
            Decision::Offload
        } else {
            continue;
        };
        match found {
            Some(prev) if prev != d => {
                return Err(SimError::OracleProtocol(format!(
                    "reply names both decisions: {reply:?}"
                )))
            }
            _ => found = Some(d),
        }
    }
    found.ok_or_else(|| SimError::OracleProtocol(format!("no decision in reply: {reply:?}")))
}

/// Asks the oracle, re-asking up to `max_retries` times on unparsable replies.
pub fn decide<O: DecisionOracle + ?Sized>(oracle: &mut O, prompt: &MetaPrompt, max_retries: u32) -> Result<Decision> {
    let mut last = None;
    for _ in 0..=max_retries {
        let reply = oracle.answer(prompt)?;
        match parse_reply(&reply) {
            Ok(d) => return Ok(d),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Deterministic stand-in for an LLM.
///
/// Returns the decision of the example with the query's exact key (the last
/// one wins when a key repeats). Otherwise it copies the nearest example of
/// the same task type by bin distance, preferring the smaller bin on ties,
/// and falls back to `local`.
pub fn mock_decision<'a>(examples: impl IntoIterator<Item = &'a Experience>, query: &Condition) -> Decision {
    let mut view: BTreeMap<Condition, Decision> = BTreeMap::new();
    for e in examples {
        view.insert(e.condition, e.decision);
    }
    if let Some(d) = view.get(query) {
        return *d;
    }
    view.iter()
        .filter(|(c, _)| c.task_type == query.task_type)
        .min_by_key(|(c, _)| (c.token_bin.abs_diff(query.token_bin), c.token_bin))
        .map(|(_, d)| *d)
        .unwrap_or(Decision::Local)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MockOracle;

impl DecisionOracle for MockOracle {
    fn answer(&mut self, prompt: &MetaPrompt) -> Result<String> {
        Ok(mock_decision(&prompt.examples, &prompt.query).as_str().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::TaskType;
    use crate::icl::{Evaluation, PromptTemplate};

    struct Scripted(Vec<&'static str>);

    impl DecisionOracle for Scripted {
        fn answer(&mut self, _: &MetaPrompt) -> Result<String> {
            Ok(self.0.remove(0).to_string())
        }
    }

    fn ex(task_type: TaskType, bin: u32, decision: Decision) -> Experience {
        Experience {
            condition: Condition { task_type, token_bin: bin },
            decision,
            reward: 0.0,
            evaluation: Evaluation::Good,
        }
    }

    fn prompt(examples: Vec<Experience>, query: Condition) -> MetaPrompt {
        MetaPrompt {
            description: PromptTemplate::default().description().to_string(),
            examples,
            query,
            bin_width: 200,
        }
    }

    #[test]
    fn reply_parsing() {
        assert_eq!(parse_reply("offload").unwrap(), Decision::Offload);
        assert_eq!(parse_reply("OFFLOAD").unwrap(), Decision::Offload);
        assert_eq!(parse_reply("I think local is best").unwrap(), Decision::Local);
        assert_eq!(parse_reply("\u{201c}Local\u{201d}.").unwrap(), Decision::Local);
        assert!(parse_reply("localoffload").is_err());
        assert!(parse_reply("local or offload").is_err());
        assert!(parse_reply("maybe").is_err());
        assert_eq!(parse_reply("local, local").unwrap(), Decision::Local);
    }

    #[test]
    fn decide_normalizes_case() {
        let p = prompt(vec![], Condition { task_type: TaskType::Regular, token_bin: 1 });
        assert_eq!(decide(&mut Scripted(vec!["OFFLOAD"]), &p, 2).unwrap(), Decision::Offload);
        assert_eq!(decide(&mut Scripted(vec!["hm", "local"]), &p, 2).unwrap(), Decision::Local);
    }

    #[test]
    fn decide_gives_up_after_retries() {
        let p = prompt(vec![], Condition { task_type: TaskType::Regular, token_bin: 1 });
        let err = decide(&mut Scripted(vec!["maybe", "maybe", "maybe"]), &p, 2).unwrap_err();
        assert!(matches!(err, SimError::OracleProtocol(_)));
    }

    #[test]
    fn mock_exact_key() {
        let q = Condition { task_type: TaskType::Regular, token_bin: 5 };
        let p = prompt(vec![ex(TaskType::Regular, 5, Decision::Offload), ex(TaskType::Regular, 4, Decision::Local)], q);
        assert_eq!(MockOracle.answer(&p).unwrap(), "offload");
    }

    #[test]
    fn mock_empty_pool_defaults_local() {
        let q = Condition { task_type: TaskType::QualityPreferred, token_bin: 5 };
        assert_eq!(mock_decision(&[], &q), Decision::Local);
    }

    #[test]
    fn mock_nearest_same_type() {
        let q = Condition { task_type: TaskType::Regular, token_bin: 3 };
        let pool = [
            ex(TaskType::Regular, 2, Decision::Local),
            ex(TaskType::Regular, 6, Decision::Offload),
            ex(TaskType::QualityPreferred, 3, Decision::Offload),
        ];
        assert_eq!(mock_decision(&pool, &q), Decision::Local);
        let q = Condition { task_type: TaskType::Regular, token_bin: 4 };
        // distance 2 vs 2: smaller bin wins
        assert_eq!(mock_decision(&pool, &q), Decision::Local);
        let q = Condition { task_type: TaskType::Regular, token_bin: 5 };
        assert_eq!(mock_decision(&pool, &q), Decision::Offload);
    }

    #[test]
    fn mock_ignores_other_type() {
        let q = Condition { task_type: TaskType::Regular, token_bin: 3 };
        let pool = [ex(TaskType::QualityPreferred, 3, Decision::Offload)];
        assert_eq!(mock_decision(&pool, &q), Decision::Local);
    }

    #[test]
    fn mock_repeated_key_uses_latest() {
        let q = Condition { task_type: TaskType::Regular, token_bin: 3 };
        let pool = [ex(TaskType::Regular, 3, Decision::Offload), ex(TaskType::Regular, 3, Decision::Local)];
        assert_eq!(mock_decision(&pool, &q), Decision::Local);
    }
}
