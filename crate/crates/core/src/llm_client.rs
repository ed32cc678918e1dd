//! Chat-completion backed decision oracle, transcript recording and replay.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::delay::Decision;
use crate::error::{Result, SimError};
use crate::icl::{parse_reply, DecisionOracle, MetaPrompt};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleEndpointConfig {
    /// API root; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model_name: String,
    /// Environment variable holding the bearer token.
    pub api_key_env_var: String,
    pub timeout_s: f64,
    pub max_retries: u32,
    pub temperature: f64,
    /// First backoff delay; doubles on each retry.
    pub backoff_initial_s: f64,
}

impl Default for OracleEndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model_name: "gpt-4o".into(),
            api_key_env_var: "OPENAI_API_KEY".into(),
            timeout_s: 30.0,
            max_retries: 3,
            temperature: 0.0,
            backoff_initial_s: 0.5,
        }
    }
}

impl OracleEndpointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.timeout_s > 0.0) || !(self.backoff_initial_s >= 0.0) {
            return Err(SimError::Config("oracle: timeout_s must be > 0 and backoff_initial_s >= 0".into()));
        }
        Ok(())
    }

    /// Upper bound on the wall time spent on one prompt.
    pub fn budget(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s * f64::from(self.max_retries + 1))
    }
}

/// Hex SHA-256 of the rendered prompt.
pub fn prompt_hash(prompt: &MetaPrompt) -> String {
    hex::encode(Sha256::digest(prompt.render().as_bytes()))
}

pub struct RemoteOracle {
    cfg: OracleEndpointConfig,
    api_key: String,
    http: reqwest::blocking::Client,
}

impl RemoteOracle {
    pub fn new(cfg: OracleEndpointConfig) -> Result<Self> {
        cfg.validate()?;
        let api_key = std::env::var(&cfg.api_key_env_var)
            .map_err(|_| SimError::Config(format!("environment variable {} is not set", cfg.api_key_env_var)))?;
        let http = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| SimError::Transport(e.to_string()))?;
        Ok(Self { cfg, api_key, http })
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, body: &serde_json::Value, timeout: Duration) -> std::result::Result<String, Attempt> {
        let resp = self
            .http
            .post(self.endpoint())
            .bearer_auth(&self.api_key)
            .timeout(timeout)
            .json(body)
            .send()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(format!("HTTP {status}")));
        }
        let value: serde_json::Value = resp.json().map_err(|e| Attempt::Retry(e.to_string()))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_owned)
            .ok_or_else(|| Attempt::Fatal("response has no choices[0].message.content".into()))
    }
}

enum Attempt {
    Retry(String),
    Fatal(String),
}

impl DecisionOracle for RemoteOracle {
    fn answer(&mut self, prompt: &MetaPrompt) -> Result<String> {
        let body = json!({
            "model": self.cfg.model_name,
            "messages": [{ "role": "user", "content": prompt.render() }],
            "temperature": self.cfg.temperature,
        });
        let deadline = Instant::now() + self.cfg.budget();
        let per_try = Duration::from_secs_f64(self.cfg.timeout_s);
        let mut backoff = Duration::from_secs_f64(self.cfg.backoff_initial_s);
        let mut last_err = String::new();
        for attempt in 0..=self.cfg.max_retries {
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                break;
            }
            match self.attempt(&body, per_try.min(remaining)) {
                Ok(content) => return Ok(content),
                Err(Attempt::Fatal(msg)) => return Err(SimError::Transport(msg)),
                Err(Attempt::Retry(msg)) => {
                    log::warn!("oracle attempt {} failed: {msg}", attempt + 1);
                    last_err = msg;
                }
            }
            if attempt < self.cfg.max_retries {
                let remaining = deadline.saturating_duration_since(Instant::now());
                std::thread::sleep(backoff.min(remaining));
                backoff *= 2;
            }
        }
        Err(SimError::Transport(format!(
            "gave up after {} attempts: {last_err}",
            self.cfg.max_retries + 1
        )))
    }
}

/// One-shot query: send the prompt and parse the decision out of the reply.
pub fn remote_answer(cfg: &OracleEndpointConfig, prompt: &MetaPrompt) -> Result<Decision> {
    let mut oracle = RemoteOracle::new(cfg.clone())?;
    parse_reply(&oracle.answer(prompt)?)
}

/// One line of a transcript file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    /// Index of the oracle call within the episode.
    pub step: usize,
    pub timestamp: String,
    pub prompt_hash: String,
    pub reply: String,
    /// Parsed decision, absent when the reply was unparsable.
    pub decision: Option<Decision>,
}

/// Wraps an oracle and appends every exchange to a JSON-lines transcript.
pub struct RecordingOracle<O> {
    inner: O,
    out: BufWriter<File>,
    path: PathBuf,
    calls: usize,
}

impl<O: DecisionOracle> RecordingOracle<O> {
    pub fn create(inner: O, path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| SimError::io(path, e))?;
        Ok(Self {
            inner,
            out: BufWriter::new(file),
            path: path.to_path_buf(),
            calls: 0,
        })
    }
}

impl<O: DecisionOracle> DecisionOracle for RecordingOracle<O> {
    fn answer(&mut self, prompt: &MetaPrompt) -> Result<String> {
        let reply = self.inner.answer(prompt)?;
        let record = TranscriptRecord {
            step: self.calls,
            timestamp: chrono::Utc::now().to_rfc3339(),
            prompt_hash: prompt_hash(prompt),
            decision: parse_reply(&reply).ok(),
            reply: reply.clone(),
        };
        self.calls += 1;
        let line = serde_json::to_string(&record).expect("transcript record serializes");
        writeln!(self.out, "{line}")
            .and_then(|_| self.out.flush())
            .map_err(|e| SimError::io(&self.path, e))?;
        Ok(reply)
    }
}

/// Offline oracle that replays a recorded transcript in order.
#[derive(Debug, Clone)]
pub struct ReplayOracle {
    records: VecDeque<TranscriptRecord>,
    verify_prompts: bool,
}

impl ReplayOracle {
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| SimError::io(path, e))?;
        let mut records = VecDeque::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| SimError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TranscriptRecord = serde_json::from_str(&line)
                .map_err(|e| SimError::Config(format!("{}:{}: {e}", path.display(), i + 1)))?;
            records.push_back(rec);
        }
        Ok(Self {
            records,
            verify_prompts: true,
        })
    }

    /// Skip the prompt-hash check, e.g. after editing the template.
    pub fn without_prompt_check(mut self) -> Self {
        self.verify_prompts = false;
        self
    }

    pub fn remaining(&self) -> usize {
        self.records.len()
    }
}

impl DecisionOracle for ReplayOracle {
    fn answer(&mut self, prompt: &MetaPrompt) -> Result<String> {
        let rec = self
            .records
            .pop_front()
            .ok_or_else(|| SimError::OracleProtocol("transcript exhausted".into()))?;
        if self.verify_prompts && rec.prompt_hash != prompt_hash(prompt) {
            return Err(SimError::OracleProtocol(format!(
                "prompt diverged from transcript at call {}",
                rec.step
            )));
        }
        Ok(rec.reply)
    }
}
