//! Candidate generation and group scoring.
//!
//! A backend produces `G` candidate responses for one canvas. The remote
//! backend samples a chat-completion model; the random and replay backends
//! stand in for it in tests, baselines and offline re-scoring.

mod random;
mod remote;
mod replay;

use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use random::{canvas_stream, RandomBackend};
pub use remote::{ChatMessage, RemoteBackend};
pub use replay::ReplayBackend;

use crate::error::{GrpoError, RolloutError};
use crate::grpo::{group_advantages, GroupAdvantages, GrpoConfig};
use crate::layout::{Canvas, Layout};
use crate::protocol::{parse_response, CandidateResponse};
use crate::reward::{hybrid_reward, RewardBreakdown, RewardConfig};

pub const DEFAULT_API_KEY_ENV: &str = "POSTERLAY_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    Random,
    Replay,
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "remote" => Ok(Self::Remote),
            "random" => Ok(Self::Random),
            "replay" => Ok(Self::Replay),
            other => Err(format!("unknown backend `{other}` (expected remote, random or replay)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyBackendConfig {
    pub kind: BackendKind,
    /// Base URL of an OpenAI-compatible API, e.g. `http://localhost:8000/v1`.
    pub endpoint: Option<String>,
    pub model_name: Option<String>,
    pub temperature: f64,
    pub group_size: usize,
    /// Per-request deadline in seconds.
    pub timeout: f64,
    pub max_retries: u32,
    pub seed: Option<u64>,
    /// Upper bound on concurrent requests within a group.
    pub parallelism: usize,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    /// Rollout log consumed by the replay backend.
    pub replay_path: Option<PathBuf>,
}

impl Default for PolicyBackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Random,
            endpoint: None,
            model_name: None,
            temperature: 1.0,
            group_size: 8,
            timeout: 60.0,
            max_retries: 3,
            seed: None,
            parallelism: 8,
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            replay_path: None,
        }
    }
}

impl PolicyBackendConfig {
    pub fn validate(&self) -> Result<(), RolloutError> {
        let fail = |m: &str| Err(RolloutError::Config(m.to_string()));
        if self.group_size == 0 {
            return fail("group_size must be at least 1");
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return fail("temperature must be non-negative");
        }
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            return fail("timeout must be positive");
        }
        if self.parallelism == 0 {
            return fail("parallelism must be at least 1");
        }
        match self.kind {
            BackendKind::Remote if self.endpoint.is_none() || self.model_name.is_none() => {
                fail("the remote backend requires an endpoint and a model name")
            }
            BackendKind::Random if self.seed.is_none() => fail("the random backend requires a seed"),
            BackendKind::Replay if self.replay_path.is_none() => fail("the replay backend requires a rollout log path"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub canvas_id: String,
    pub candidates: Vec<CandidateResponse>,
    /// Wall-clock seconds per candidate.
    pub latencies: Vec<f64>,
    /// Failure message for placeholder candidates.
    pub errors: Vec<Option<String>>,
}

impl RolloutGroup {
    pub fn from_raw(canvas_id: impl Into<String>, raws: impl IntoIterator<Item = String>) -> Self {
        let candidates: Vec<_> = raws.into_iter().map(|r| parse_response(&r)).collect();
        let n = candidates.len();
        Self { canvas_id: canvas_id.into(), candidates, latencies: vec![0.0; n], errors: vec![None; n] }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

pub trait PolicyBackend: Send + Sync {
    fn rollout(&self, canvas: &Canvas, template: &str, group_size: usize) -> Result<RolloutGroup, RolloutError>;
}

pub fn build_backend(cfg: &PolicyBackendConfig) -> Result<Box<dyn PolicyBackend>, RolloutError> {
    cfg.validate()?;
    Ok(match cfg.kind {
        BackendKind::Random => Box::new(RandomBackend::new(cfg.seed.expect("validated"))),
        BackendKind::Replay => Box::new(ReplayBackend::load(cfg.replay_path.as_deref().expect("validated"))?),
        BackendKind::Remote => Box::new(RemoteBackend::from_config(cfg)?),
    })
}

/// `G` candidates for `canvas` from the configured backend.
pub fn rollout(canvas: &Canvas, cfg: &PolicyBackendConfig, template: &str) -> Result<RolloutGroup, RolloutError> {
    build_backend(cfg)?.rollout(canvas, template, cfg.group_size)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEvaluation {
    pub breakdowns: Vec<RewardBreakdown>,
    pub advantages: GroupAdvantages,
}

impl GroupEvaluation {
    pub fn rewards(&self) -> Vec<f64> {
        self.breakdowns.iter().map(|b| b.hybrid).collect()
    }
}

/// Reward breakdowns in candidate order. Candidates are scored in parallel.
pub fn score_group(group: &RolloutGroup, canvas: &Canvas, reference: Option<&Layout>, rewards: &RewardConfig) -> Vec<RewardBreakdown> {
    group.candidates.par_iter().map(|c| hybrid_reward(c, canvas, reference, rewards)).collect()
}

pub fn score_group_sequential(
    group: &RolloutGroup,
    canvas: &Canvas,
    reference: Option<&Layout>,
    rewards: &RewardConfig,
) -> Vec<RewardBreakdown> {
    group.candidates.iter().map(|c| hybrid_reward(c, canvas, reference, rewards)).collect()
}

/// Breakdowns plus group-relative advantages over the hybrid rewards.
pub fn evaluate_group(
    group: &RolloutGroup,
    canvas: &Canvas,
    reference: Option<&Layout>,
    rewards: &RewardConfig,
    grpo: &GrpoConfig,
) -> Result<GroupEvaluation, GrpoError> {
    if group.len() < 2 {
        return Err(GrpoError::GroupTooSmall(group.len()));
    }
    let breakdowns = score_group(group, canvas, reference, rewards);
    let hybrid: Vec<f64> = breakdowns.iter().map(|b| b.hybrid).collect();
    let advantages = group_advantages(&hybrid, grpo)?;
    Ok(GroupEvaluation { breakdowns, advantages })
}

/// One line of the rollout log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutLogRecord {
    pub canvas_id: String,
    pub candidate_index: usize,
    pub raw: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<RewardBreakdown>,
}

impl RolloutLogRecord {
    pub fn for_group(group: &RolloutGroup, breakdowns: Option<&[RewardBreakdown]>) -> Vec<Self> {
        group
            .candidates
            .iter()
            .enumerate()
            .map(|(i, c)| Self {
                canvas_id: group.canvas_id.clone(),
                candidate_index: i,
                raw: c.raw.clone(),
                breakdown: breakdowns.map(|b| b[i].clone()),
            })
            .collect()
    }
}

/// Per-canvas evaluation record: rewards always, advantages when `G >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEvaluationRecord {
    pub canvas_id: String,
    pub rewards: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advantages: Option<Vec<f64>>,
    pub breakdowns: Vec<RewardBreakdown>,
}

/// Score a group and, when it holds at least two candidates, attach
/// advantages.
pub fn evaluate_record(
    group: &RolloutGroup,
    canvas: &Canvas,
    reference: Option<&Layout>,
    rewards: &RewardConfig,
    grpo: &GrpoConfig,
) -> Result<GroupEvaluationRecord, GrpoError> {
    let (breakdowns, advantages) = if group.len() >= 2 {
        let e = evaluate_group(group, canvas, reference, rewards, grpo)?;
        (e.breakdowns, Some(e.advantages.advantages))
    } else {
        (score_group(group, canvas, reference, rewards), None)
    };
    Ok(GroupEvaluationRecord {
        canvas_id: group.canvas_id.clone(),
        rewards: breakdowns.iter().map(|b| b.hybrid).collect(),
        advantages,
        breakdowns,
    })
}
