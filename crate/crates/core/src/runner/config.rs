use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::delay::{DelayConfig, LlmProfile, Placement};
use crate::error::{Result, SimError};
use crate::icl::{DecisionOracle, MockOracle, PromptTemplate};
use crate::llm_client::{OracleEndpointConfig, RecordingOracle, RemoteOracle, ReplayOracle};
use crate::objective::RewardConfig;
use crate::policies::{Environment, PolicyConfig};
use crate::profiles::{ProfileLibrary, TimingInterpretation};
use crate::radio::RadioConfig;
use crate::workload::WorkloadConfig;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    #[default]
    Mock,
    Remote,
    /// Replays a transcript written by an earlier run.
    Replay,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub kind: OracleKind,
    pub remote: OracleEndpointConfig,
    /// Where to record oracle exchanges, if anywhere.
    pub transcript: Option<PathBuf>,
    /// Transcript read by the `replay` oracle.
    pub replay_from: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSelection {
    pub edge: String,
    pub cloud: String,
    /// Profile library file; the bundled library when absent.
    pub library: Option<PathBuf>,
    pub timing_interpretation: TimingInterpretation,
}

impl Default for ProfileSelection {
    fn default() -> Self {
        Self {
            edge: "Llama3-8B".into(),
            cloud: "GPT-4o".into(),
            library: None,
            timing_interpretation: TimingInterpretation::Ttft,
        }
    }
}

impl ProfileSelection {
    pub fn library(&self) -> Result<ProfileLibrary> {
        match &self.library {
            Some(path) => ProfileLibrary::load(path),
            None => Ok(ProfileLibrary::builtin()),
        }
    }

    pub fn resolve(&self) -> Result<(LlmProfile, LlmProfile)> {
        let lib = self.library()?;
        let edge = lib.profile(&self.edge, self.timing_interpretation)?;
        let cloud = lib.profile(&self.cloud, self.timing_interpretation)?;
        if edge.placement != Placement::Edge || cloud.placement != Placement::Cloud {
            log::warn!(
                "profile pair {}+{} does not follow edge+cloud placement",
                edge.name,
                cloud.name
            );
        }
        Ok((edge, cloud))
    }
}

/// Everything one experiment needs. Deserialized from TOML; every section
/// and key is optional and falls back to the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub steps: usize,
    pub replications: usize,
    /// Fraction of the episode used as the "final window" in summaries.
    pub final_window_fraction: f64,
    pub moving_average_window: usize,
    /// Task-description file; the built-in description when absent.
    pub prompt_template: Option<PathBuf>,
    pub profiles: ProfileSelection,
    pub radio: RadioConfig,
    pub delay: DelayConfig,
    pub workload: WorkloadConfig,
    pub reward: RewardConfig,
    pub policy: PolicyConfig,
    pub oracle: OracleConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            seed: 7,
            steps: 2000,
            replications: 5,
            final_window_fraction: 0.1,
            moving_average_window: 100,
            prompt_template: None,
            profiles: ProfileSelection::default(),
            radio: RadioConfig::default(),
            delay: DelayConfig::default(),
            workload: WorkloadConfig::default(),
            reward: RewardConfig::default(),
            policy: PolicyConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))
    }

    /// Loads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        let mut cfg = Self::parse(&text).map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(inner) = p.as_mut() {
                if inner.is_relative() {
                    *inner = base.join(&*inner);
                }
            }
        };
        fix(&mut cfg.prompt_template);
        fix(&mut cfg.profiles.library);
        fix(&mut cfg.oracle.transcript);
        fix(&mut cfg.oracle.replay_from);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(SimError::Config("steps must be >= 1".into()));
        }
        if self.replications < 1 {
            return Err(SimError::Config("replications must be >= 1".into()));
        }
        if !(self.final_window_fraction > 0.0 && self.final_window_fraction <= 1.0) {
            return Err(SimError::Config("final_window_fraction must be in (0, 1]".into()));
        }
        if self.moving_average_window < 1 {
            return Err(SimError::Config("moving_average_window must be >= 1".into()));
        }
        self.radio.validate()?;
        self.delay.validate()?;
        self.workload.validate()?;
        self.reward.validate()?;
        self.policy.validate()?;
        self.oracle.remote.validate()?;
        self.profiles.resolve()?;
        Ok(())
    }

    pub fn environment(&self) -> Result<Environment> {
        let (edge, cloud) = self.profiles.resolve()?;
        Ok(Environment {
            edge,
            cloud,
            delay: self.delay.clone(),
            reward: self.reward.clone(),
        })
    }

    pub fn template(&self) -> Result<PromptTemplate> {
        match &self.prompt_template {
            Some(path) => PromptTemplate::load(path),
            None => Ok(PromptTemplate::default()),
        }
    }

    /// The oracle for this run, or `None` when the policy does not use one.
    pub fn oracle(&self) -> Result<Option<Box<dyn DecisionOracle>>> {
        if !self.policy.kind.needs_oracle() {
            return Ok(None);
        }
        let base: Box<dyn DecisionOracle> = match self.oracle.kind {
            OracleKind::Mock => Box::new(MockOracle),
            OracleKind::Remote => Box::new(RemoteOracle::new(self.oracle.remote.clone())?),
            OracleKind::Replay => {
                let path = self
                    .oracle
                    .replay_from
                    .as_ref()
                    .ok_or_else(|| SimError::Config("replay oracle needs oracle.replay_from".into()))?;
                Box::new(ReplayOracle::load(path)?)
            }
        };
        Ok(Some(match &self.oracle.transcript {
            Some(path) => Box::new(RecordingOracle::create(base, path)?),
            None => base,
        }))
    }

    /// Config for replication `r`: seed offset by `r`, and per-replication
    /// transcript files when there is more than one replication.
    pub fn replication(&self, r: usize) -> Self {
        let mut cfg = self.clone();
        cfg.seed = self.seed.wrapping_add(r as u64);
        if self.replications > 1 {
            for path in [&mut cfg.oracle.transcript, &mut cfg.oracle.replay_from].into_iter().flatten() {
                *path = with_replication_suffix(path, r);
            }
        }
        cfg
    }
}

fn with_replication_suffix(path: &Path, r: usize) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("transcript");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}.rep{r}.{ext}"),
        None => format!("{stem}.rep{r}"),
    };
    path.with_file_name(name)
}
