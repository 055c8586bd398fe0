//! Desk-scale policy optimization on layouts.
//!
//! The policy is an isotropic Gaussian over every element's `(x, y, w, h)`
//! in pixels. Each iteration samples a group of layouts, scores them, turns
//! the scores into group-relative advantages and takes one score-function
//! step on the means:
//!
//! `mu <- mu + lr * (1/G) * sum_i A_i * (z_i - mu) / sigma^2`
//!
//! One update per sampled group means the sampling policy equals the policy
//! being updated, so the importance ratio is 1 and clipping never engages.
//! What this exercises is the group baseline, not token-level GRPO.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backends::canvas_stream;
use crate::error::TrainError;
use crate::geometry::{center, BBox};
use crate::grpo::{group_advantages, AdvantageMode, GrpoConfig};
use crate::layout::{Canvas, Layout};
use crate::reward::{quality_reward, RewardConfig};

/// Smallest sampled width or height, in pixels.
pub const MIN_SIZE: f64 = 1.0;
const SIGMA_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyPolicy {
    pub canvas: Canvas,
    /// `[x, y, w, h]` per manifest entry.
    pub means: Vec<[f64; 4]>,
    pub log_sigma: f64,
}

impl ToyPolicy {
    pub fn new(canvas: Canvas, means: Vec<[f64; 4]>, sigma: f64) -> Result<Self, TrainError> {
        if means.len() != canvas.manifest.len() {
            return Err(TrainError::Config(format!(
                "{} means for a manifest of {} elements",
                means.len(),
                canvas.manifest.len()
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(TrainError::Config(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { canvas, means, log_sigma: sigma.ln() })
    }

    /// Untrained starting point: every element the same box at the canvas
    /// center.
    pub fn centered(canvas: Canvas, sigma: f64) -> Result<Self, TrainError> {
        let (w, h) = (canvas.width * 0.3, canvas.height * 0.08);
        let mean = [(canvas.width - w) / 2.0, (canvas.height - h) / 2.0, w, h];
        let means = vec![mean; canvas.manifest.len()];
        Self::new(canvas, means, sigma)
    }

    pub fn sigma(&self) -> f64 {
        self.log_sigma.exp()
    }

    pub fn layout_from(&self, params: &[[f64; 4]]) -> Layout {
        Layout::from_boxes(
            Some(self.canvas.id.clone()),
            self.canvas
                .manifest
                .iter()
                .zip(params)
                .map(|(&c, p)| (c, BBox::new(p[0], p[1], p[2].max(MIN_SIZE), p[3].max(MIN_SIZE)))),
        )
    }

    pub fn mean_layout(&self) -> Layout {
        self.layout_from(&self.means)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledGroup {
    pub layouts: Vec<Layout>,
    /// Raw Gaussian draws before size clamping.
    pub draws: Vec<Vec<[f64; 4]>>,
}

/// `G` layouts with every coordinate drawn from `N(mu, sigma^2)`; widths and
/// heights are clamped to at least [`MIN_SIZE`].
pub fn sample_group(policy: &ToyPolicy, group_size: usize, rng: &mut ChaCha8Rng) -> SampledGroup {
    let sigma = policy.sigma();
    let draws: Vec<Vec<[f64; 4]>> = (0..group_size)
        .map(|_| {
            policy
                .means
                .iter()
                .map(|m| {
                    let mut z = *m;
                    for v in &mut z {
                        let eps: f64 = StandardNormal.sample(rng);
                        *v += sigma * eps;
                    }
                    z
                })
                .collect()
        })
        .collect();
    let layouts = draws.iter().map(|d| policy.layout_from(d)).collect();
    SampledGroup { layouts, draws }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SigmaSchedule {
    Fixed,
    /// `sigma <- sigma * exp(-rate)` after every update.
    ExponentialDecay { rate: f64 },
}

/// What the trainer maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardSignal {
    /// Weighted layout quality.
    #[default]
    Quality,
    /// Negative mean distance of element centers to the canvas center over
    /// the half-diagonal. Diagnostic only.
    CenterDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub iterations: usize,
    pub group_size: usize,
    pub learning_rate: f64,
    /// Starting standard deviation in pixels; defaults to 5% of the larger
    /// canvas side.
    pub initial_sigma: Option<f64>,
    pub sigma_schedule: SigmaSchedule,
    pub seed: u64,
    pub advantage_mode: AdvantageMode,
    pub signal: RewardSignal,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            group_size: 8,
            learning_rate: 80.0,
            initial_sigma: None,
            sigma_schedule: SigmaSchedule::ExponentialDecay { rate: 0.003 },
            seed: 42,
            advantage_mode: AdvantageMode::MeanStd,
            signal: RewardSignal::Quality,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: String| Err(TrainError::Config(m));
        if self.iterations == 0 {
            return fail("iterations must be at least 1".into());
        }
        if self.group_size < 2 {
            return fail(format!("group_size must be at least 2, got {}", self.group_size));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be non-negative, got {}", self.learning_rate));
        }
        if let Some(s) = self.initial_sigma {
            if !(s > 0.0 && s.is_finite()) {
                return fail(format!("initial_sigma must be positive, got {s}"));
            }
        }
        if let SigmaSchedule::ExponentialDecay { rate } = self.sigma_schedule {
            if !(rate >= 0.0 && rate.is_finite()) {
                return fail(format!("decay rate must be non-negative, got {rate}"));
            }
        }
        Ok(())
    }

    pub fn sigma_for(&self, canvas: &Canvas) -> f64 {
        self.initial_sigma.unwrap_or(0.05 * canvas.width.max(canvas.height))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub iteration: usize,
    pub mean_reward: f64,
    pub max_reward: f64,
    /// Sigma used to sample this iteration's group.
    pub sigma: f64,
}

fn score(layout: &Layout, canvas: &Canvas, rewards: &RewardConfig, signal: RewardSignal) -> Result<f64, TrainError> {
    match signal {
        RewardSignal::Quality => {
            Ok(quality_reward(layout, canvas, &rewards.weights.quality_weights, &rewards.policy)?.0)
        }
        RewardSignal::CenterDistance => {
            let (cx, cy) = (canvas.width / 2.0, canvas.height / 2.0);
            let total: f64 = layout.elements.iter().map(|e| {
                let (x, y) = center(&e.bbox);
                (x - cx).hypot(y - cy)
            }).sum();
            Ok(-total / layout.len().max(1) as f64 / canvas.half_diagonal())
        }
    }
}

/// One sample-score-update cycle. `iteration` only labels the stats.
pub fn update_step(
    policy: &ToyPolicy,
    rewards: &RewardConfig,
    cfg: &TrainConfig,
    iteration: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(ToyPolicy, StepStats), TrainError> {
    let sigma = policy.sigma();
    let group = sample_group(policy, cfg.group_size, rng);
    let scores: Vec<f64> = group
        .layouts
        .par_iter()
        .map(|l| score(l, &policy.canvas, rewards, cfg.signal))
        .collect::<Result<_, _>>()?;
    let advantages = group_advantages(&scores, &GrpoConfig::with_mode(cfg.advantage_mode))?.advantages;

    let g = cfg.group_size as f64;
    let step = cfg.learning_rate / (g * sigma * sigma);
    let mut means = policy.means.clone();
    for (draw, a) in group.draws.iter().zip(&advantages) {
        for (m, (z, m0)) in means.iter_mut().zip(draw.iter().zip(&policy.means)) {
            for k in 0..4 {
                m[k] += step * a * (z[k] - m0[k]);
            }
        }
    }

    let next_sigma = match cfg.sigma_schedule {
        SigmaSchedule::Fixed => sigma,
        SigmaSchedule::ExponentialDecay { rate } => sigma * (-rate).exp(),
    };
    if !(next_sigma > SIGMA_FLOOR) || means.iter().flatten().any(|v| !v.is_finite()) {
        return Err(TrainError::Diverged {
            iteration,
            detail: format!("sigma {next_sigma:e}, step scale {step:e}; parameters are no longer finite or sigma underflowed"),
        });
    }

    let stats = StepStats {
        iteration,
        mean_reward: scores.iter().sum::<f64>() / g,
        max_reward: scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        sigma,
    };
    Ok((ToyPolicy { canvas: policy.canvas.clone(), means, log_sigma: next_sigma.ln() }, stats))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    pub steps: Vec<StepStats>,
    pub initial: ToyPolicy,
    pub policy: ToyPolicy,
}

impl TrainingTrace {
    pub fn final_layout(&self) -> Layout {
        self.policy.mean_layout()
    }

    /// Running maximum of the per-iteration mean reward.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.steps
            .iter()
            .scan(f64::NEG_INFINITY, |best, s| {
                *best = best.max(s.mean_reward);
                Some(*best)
            })
            .collect()
    }

    /// Mean group reward averaged over the last `window` iterations (fewer
    /// if the trace is shorter). A single group of 8 is too noisy to call
    /// "the final reward" on its own.
    pub fn tail_mean(&self, window: usize) -> f64 {
        let n = window.clamp(1, self.steps.len().max(1));
        let tail = &self.steps[self.steps.len().saturating_sub(n)..];
        tail.iter().map(|s| s.mean_reward).sum::<f64>() / tail.len().max(1) as f64
    }

    /// `iteration,mean_reward,max_reward,sigma` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,mean_reward,max_reward,sigma\n");
        for s in &self.steps {
            let _ = writeln!(out, "{},{},{},{}", s.iteration, s.mean_reward, s.max_reward, s.sigma);
        }
        out
    }
}

pub fn train(canvas: &Canvas, rewards: &RewardConfig, cfg: &TrainConfig) -> Result<TrainingTrace, TrainError> {
    let initial = ToyPolicy::centered(canvas.clone(), cfg.sigma_for(canvas))?;
    train_from(initial, rewards, cfg)
}

/// Train from a given starting policy. Fully determined by the inputs.
pub fn train_from(initial: ToyPolicy, rewards: &RewardConfig, cfg: &TrainConfig) -> Result<TrainingTrace, TrainError> {
    train_with(initial, rewards, cfg, |_, _| {})
}

/// [`train_from`], calling `on_step` with each iteration's stats and the
/// policy after its update.
pub fn train_with(
    initial: ToyPolicy,
    rewards: &RewardConfig,
    cfg: &TrainConfig,
    mut on_step: impl FnMut(&StepStats, &ToyPolicy),
) -> Result<TrainingTrace, TrainError> {
    cfg.validate()?;
    if initial.canvas.manifest.is_empty() {
        return Err(TrainError::Config("canvas manifest is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(canvas_stream(&initial.canvas.id));

    let mut policy = initial.clone();
    let mut steps = Vec::with_capacity(cfg.iterations);
    for iteration in 0..cfg.iterations {
        let (next, stats) = update_step(&policy, rewards, cfg, iteration, &mut rng)?;
        on_step(&stats, &next);
        policy = next;
        steps.push(stats);
    }
    Ok(TrainingTrace { steps, initial, policy })
}
