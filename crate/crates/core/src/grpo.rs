//! Group-relative policy optimization primitives.
//!
//! Rewards are outcome-level: every token of candidate `i` shares the
//! candidate's group-relative advantage `A_i`.

use serde::{Deserialize, Serialize};

use crate::error::GrpoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvantageMode {
    /// `A_i = r_i - mean(r)`
    MeanOnly,
    /// `A_i = (r_i - mean(r)) / (std(r) + std_floor)`
    #[default]
    MeanStd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrpoConfig {
    /// Clip radius for the probability ratio.
    pub epsilon: f64,
    /// Weight of the KL penalty towards the reference policy.
    pub beta: f64,
    pub advantage_mode: AdvantageMode,
    pub std_floor: f64,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        Self { epsilon: 0.2, beta: 0.01, advantage_mode: AdvantageMode::MeanStd, std_floor: 1e-8 }
    }
}

impl GrpoConfig {
    pub fn with_mode(mode: AdvantageMode) -> Self {
        Self { advantage_mode: mode, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), GrpoError> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(GrpoError::InvalidConfig(format!("epsilon must lie in (0, 1], got {}", self.epsilon)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(GrpoError::InvalidConfig(format!("beta must be non-negative, got {}", self.beta)));
        }
        if !(self.std_floor > 0.0 && self.std_floor.is_finite()) {
            return Err(GrpoError::InvalidConfig(format!("std_floor must be positive, got {}", self.std_floor)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAdvantages {
    pub advantages: Vec<f64>,
    pub mode: AdvantageMode,
}

/// Sum in ascending value order so the result does not depend on candidate
/// order.
fn order_free_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum()
}

/// Group-relative advantages for one group of at least two rewards.
pub fn group_advantages(rewards: &[f64], cfg: &GrpoConfig) -> Result<GroupAdvantages, GrpoError> {
    if rewards.len() < 2 {
        return Err(GrpoError::GroupTooSmall(rewards.len()));
    }
    if let Some(i) = rewards.iter().position(|r| !r.is_finite()) {
        return Err(GrpoError::NonFiniteReward(i));
    }
    let n = rewards.len() as f64;
    let mean = order_free_sum(rewards) / n;
    let centered: Vec<f64> = rewards.iter().map(|r| r - mean).collect();
    let advantages = match cfg.advantage_mode {
        AdvantageMode::MeanOnly => centered,
        AdvantageMode::MeanStd => {
            let squares: Vec<f64> = centered.iter().map(|d| d * d).collect();
            let std = (order_free_sum(&squares) / n).sqrt();
            centered.iter().map(|d| d / (std + cfg.std_floor)).collect()
        }
    };
    Ok(GroupAdvantages { advantages, mode: cfg.advantage_mode })
}

/// Per-token `(logprob_new, logprob_old, logprob_ref)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct TokenLogProbs {
    pub new: f64,
    pub old: f64,
    pub reference: f64,
}

impl From<[f64; 3]> for TokenLogProbs {
    fn from([new, old, reference]: [f64; 3]) -> Self {
        Self { new, old, reference }
    }
}

impl From<TokenLogProbs> for [f64; 3] {
    fn from(t: TokenLogProbs) -> Self {
        [t.new, t.old, t.reference]
    }
}

/// Token log-probabilities per candidate. Serializes as an array (candidates)
/// of arrays (tokens) of `[new, old, ref]` triples.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenBatch {
    pub candidates: Vec<Vec<TokenLogProbs>>,
}

impl TokenBatch {
    pub fn new(candidates: Vec<Vec<TokenLogProbs>>) -> Result<Self, GrpoError> {
        let batch = Self { candidates };
        batch.validate()?;
        Ok(batch)
    }

    pub fn validate(&self) -> Result<(), GrpoError> {
        if self.candidates.is_empty() {
            return Err(GrpoError::ShapeMismatch("batch has no candidates".into()));
        }
        for (i, c) in self.candidates.iter().enumerate() {
            if c.is_empty() {
                return Err(GrpoError::ShapeMismatch(format!("candidate {i} has no tokens")));
            }
            if c.iter().any(|t| !(t.new.is_finite() && t.old.is_finite() && t.reference.is_finite())) {
                return Err(GrpoError::ShapeMismatch(format!("candidate {i} has a non-finite log-probability")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// `min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)` for one token.
#[inline]
pub fn clipped_term(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon);
    (ratio * advantage).min(clipped * advantage)
}

/// Mean over candidates of the per-candidate mean clipped surrogate.
pub fn clipped_surrogate(batch: &TokenBatch, adv: &GroupAdvantages, cfg: &GrpoConfig) -> Result<f64, GrpoError> {
    batch.validate()?;
    if batch.len() != adv.advantages.len() {
        return Err(GrpoError::ShapeMismatch(format!(
            "{} candidates but {} advantages",
            batch.len(),
            adv.advantages.len()
        )));
    }
    let total: f64 = batch
        .candidates
        .iter()
        .zip(&adv.advantages)
        .map(|(tokens, &a)| {
            let sum: f64 = tokens.iter().map(|t| clipped_term((t.new - t.old).exp(), a, cfg.epsilon)).sum();
            sum / tokens.len() as f64
        })
        .sum();
    Ok(total / batch.len() as f64)
}

/// Per-token KL estimate `u - ln u - 1` with `u = pi_ref / pi_new`; never
/// negative.
#[inline]
pub fn kl_term(logprob_new: f64, logprob_ref: f64) -> f64 {
    let log_u = logprob_ref - logprob_new;
    // exp_m1 keeps the estimate accurate and non-negative when u is near 1.
    (log_u.exp_m1() - log_u).max(0.0)
}

/// Token-averaged, then candidate-averaged KL estimate to the reference policy.
pub fn kl_to_reference(batch: &TokenBatch) -> Result<f64, GrpoError> {
    batch.validate()?;
    let total: f64 = batch
        .candidates
        .iter()
        .map(|tokens| tokens.iter().map(|t| kl_term(t.new, t.reference)).sum::<f64>() / tokens.len() as f64)
        .sum();
    Ok(total / batch.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveReport {
    pub advantages: GroupAdvantages,
    pub surrogate: f64,
    pub kl: f64,
    pub objective: f64,
}

/// Clipped surrogate minus `beta` times the KL estimate, with advantages
/// computed from `rewards`.
pub fn grpo_objective(batch: &TokenBatch, rewards: &[f64], cfg: &GrpoConfig) -> Result<ObjectiveReport, GrpoError> {
    cfg.validate()?;
    let advantages = group_advantages(rewards, cfg)?;
    let surrogate = clipped_surrogate(batch, &advantages, cfg)?;
    let kl = kl_to_reference(batch)?;
    Ok(ObjectiveReport { objective: surrogate - cfg.beta * kl, advantages, surrogate, kl })
}
