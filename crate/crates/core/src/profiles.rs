//! LLM profile library, loadable from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::delay::{LlmProfile, Placement};
use crate::error::{Result, SimError};

const BUILTIN: &str = include_str!("../data/profiles.toml");

/// How a record's single `reported_s` figure is read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimingInterpretation {
    /// `reported_s` replaces the first-token time.
    #[default]
    Ttft,
    /// `reported_s` replaces the per-token time.
    Tpot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileRecord {
    pub name: String,
    pub ttft_s: f64,
    pub tpot_s: f64,
    pub quality_index: f64,
    pub placement: Placement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported_s: Option<f64>,
}

impl ProfileRecord {
    pub fn resolve(&self, interpretation: TimingInterpretation) -> Result<LlmProfile> {
        let (mut ttft, mut tpot) = (self.ttft_s, self.tpot_s);
        if let Some(r) = self.reported_s {
            match interpretation {
                TimingInterpretation::Ttft => ttft = r,
                TimingInterpretation::Tpot => tpot = r,
            }
        }
        LlmProfile::new(self.name.clone(), ttft, tpot, self.quality_index, self.placement)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileLibrary {
    #[serde(rename = "profile")]
    pub records: Vec<ProfileRecord>,
}

impl ProfileLibrary {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("bundled profile library parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let lib: Self = toml::from_str(text).map_err(|e| SimError::Config(format!("profile library: {e}")))?;
        for rec in &lib.records {
            rec.resolve(TimingInterpretation::Ttft)?;
            rec.resolve(TimingInterpretation::Tpot)?;
        }
        Ok(lib)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn get(&self, name: &str) -> Option<&ProfileRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn profile(&self, name: &str, interpretation: TimingInterpretation) -> Result<LlmProfile> {
        self.get(name)
            .ok_or_else(|| SimError::Config(format!("unknown LLM profile {name:?}")))?
            .resolve(interpretation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_contains_reference_pairs() {
        let lib = ProfileLibrary::builtin();
        let edge = lib.profile("Llama3-8B", TimingInterpretation::Ttft).unwrap();
        assert_eq!(edge.ttft_s, 0.23);
        assert_eq!(edge.tpot_s, 1.0 / 75.0);
        let cloud = lib.profile("GPT-4o", TimingInterpretation::Ttft).unwrap();
        assert_eq!(cloud.tpot_s, 1.0 / 32.0);
        assert_eq!(cloud.placement, Placement::Cloud);
    }

    #[test]
    fn reported_value_follows_interpretation() {
        let lib = ProfileLibrary::builtin();
        let as_ttft = lib.profile("Gemma-7B", TimingInterpretation::Ttft).unwrap();
        assert_eq!(as_ttft.ttft_s, 1.0 / 155.0);
        assert_eq!(as_ttft.tpot_s, 1.0 / 75.0);
        let as_tpot = lib.profile("Gemma-7B", TimingInterpretation::Tpot).unwrap();
        assert_eq!(as_tpot.ttft_s, 0.23);
        assert_eq!(as_tpot.tpot_s, 1.0 / 155.0);
        for (name, v) in [("Gemini-1.5-Pro", 58.0), ("Llama2-7B", 89.0), ("Llama2-70B", 40.0)] {
            assert_eq!(lib.get(name).unwrap().reported_s, Some(1.0 / v));
        }
    }

    #[test]
    fn unknown_profile_is_config_error() {
        let lib = ProfileLibrary::builtin();
        assert!(matches!(
            lib.profile("nope", TimingInterpretation::Ttft),
            Err(SimError::Config(_))
        ));
    }

    #[test]
    fn invalid_record_rejected() {
        let text = r#"
[[profile]]
name = "bad"
ttft_s = 0.1
tpot_s = 0.0
quality_index = 50.0
placement = "edge"
"#;
        assert!(ProfileLibrary::parse(text).is_err());
    }
}
