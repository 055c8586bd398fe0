//! Hybrid layout reward: a weighted blend of output-format validity, layout
//! quality and agreement with a reference layout.

mod format;
mod matching;
mod policy;
mod quality;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use format::{assess_format, format_reward, FormatTier, FormatVerdict};
pub use matching::iou_matching_reward;
pub use policy::{CollisionParty, CompatibilityPolicy, PartyPair};
pub use quality::{
    alignment_score, distribution_score, inverse_collision_rate, quality_reward, quality_scores,
    spacing_consistency, underlay_text_reward, QualityScores,
};

use crate::error::RewardError;
use crate::layout::{Canvas, Layout};
use crate::protocol::{parse_response, CandidateResponse};

const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityWeights {
    pub icr: f64,
    pub al: f64,
    pub dis: f64,
    pub sp: f64,
    pub ut: f64,
}

impl Default for QualityWeights {
    fn default() -> Self {
        Self { icr: 0.2, al: 0.2, dis: 0.2, sp: 0.2, ut: 0.2 }
    }
}

impl QualityWeights {
    fn values(&self) -> [f64; 5] {
        [self.icr, self.al, self.dis, self.sp, self.ut]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub lambda_f: f64,
    pub lambda_q: f64,
    pub lambda_u: f64,
    pub quality_weights: QualityWeights,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self { lambda_f: 0.1, lambda_q: 0.8, lambda_u: 0.1, quality_weights: QualityWeights::default() }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), RewardError> {
        let lambdas = [self.lambda_f, self.lambda_q, self.lambda_u];
        let quality = self.quality_weights.values();
        if lambdas.iter().chain(&quality).any(|w| !w.is_finite() || *w < 0.0) {
            return Err(RewardError::InvalidWeights("weights must be finite and non-negative".into()));
        }
        let sum: f64 = lambdas.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(RewardError::InvalidWeights(format!("lambda_f + lambda_q + lambda_u = {sum}, expected 1")));
        }
        let qsum: f64 = quality.iter().sum();
        if (qsum - 1.0).abs() > SUM_TOLERANCE {
            return Err(RewardError::InvalidWeights(format!("quality weights sum to {qsum}, expected 1")));
        }
        Ok(())
    }

    /// `(lambda_f, lambda_q, lambda_u)` actually applied. Without a reference
    /// the IoU weight is redistributed proportionally onto format and quality.
    pub fn effective(&self, has_reference: bool) -> (f64, f64, f64) {
        if has_reference {
            return (self.lambda_f, self.lambda_q, self.lambda_u);
        }
        let rest = self.lambda_f + self.lambda_q;
        if rest <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        (self.lambda_f / rest, self.lambda_q / rest, 0.0)
    }

    /// `lambda_f * format + lambda_q * quality + lambda_u * iou` with the
    /// effective weights.
    pub fn combine(&self, format: f64, quality: f64, iou: f64, has_reference: bool) -> f64 {
        let (f, q, u) = self.effective(has_reference);
        (f * format + q * quality + u * iou).clamp(0.0, 1.0)
    }
}

/// Reward configuration file contents.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub weights: RewardWeights,
    pub policy: CompatibilityPolicy,
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        self.weights.validate()?;
        self.policy.validate().map_err(RewardError::InvalidWeights)
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    /// Hex SHA-256 of the canonical JSON form; equal configs hash equally.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("reward config always serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Every reward component for one candidate. Serializes to a flat object;
/// field names are a frozen contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub format_tier: FormatTier,
    pub format_detail: String,
    pub format: f64,
    pub icr: f64,
    pub al: f64,
    pub dis: f64,
    pub sp: f64,
    pub ut: f64,
    pub quality: f64,
    pub iou: f64,
    pub hybrid: f64,
}

impl RewardBreakdown {
    pub fn format_verdict(&self) -> FormatVerdict {
        FormatVerdict { tier: self.format_tier, score: self.format, detail: self.format_detail.clone() }
    }

    pub fn quality_scores(&self) -> QualityScores {
        QualityScores { icr: self.icr, al: self.al, dis: self.dis, sp: self.sp, ut: self.ut }
    }

    /// The nine numeric fields in declaration order.
    pub fn numeric_fields(&self) -> [(&'static str, f64); 9] {
        [
            ("format", self.format),
            ("icr", self.icr),
            ("al", self.al),
            ("dis", self.dis),
            ("sp", self.sp),
            ("ut", self.ut),
            ("quality", self.quality),
            ("iou", self.iou),
            ("hybrid", self.hybrid),
        ]
    }
}

/// Score one parsed response.
///
/// Without a recoverable layout (missing block, unparsable JSON, unknown
/// category) the quality and IoU terms are 0. An empty reference is treated
/// as absent.
pub fn hybrid_reward(
    response: &CandidateResponse,
    canvas: &Canvas,
    reference: Option<&Layout>,
    config: &RewardConfig,
) -> RewardBreakdown {
    let reference = reference.filter(|r| !r.is_empty());
    let (verdict, layout) = assess_format(response, canvas);
    let weights = &config.weights;

    let (quality, scores, iou) = match layout.filter(|l| !l.is_empty()) {
        Some(layout) => {
            let (quality, scores) = quality_reward(&layout, canvas, &weights.quality_weights, &config.policy)
                .expect("non-empty layouts always score");
            let iou = reference.map(|r| iou_matching_reward(&layout, r).unwrap_or(0.0)).unwrap_or(0.0);
            (quality, scores, iou)
        }
        None => (0.0, QualityScores::default(), 0.0),
    };

    RewardBreakdown {
        format_tier: verdict.tier,
        format_detail: verdict.detail,
        format: verdict.score,
        icr: scores.icr,
        al: scores.al,
        dis: scores.dis,
        sp: scores.sp,
        ut: scores.ut,
        quality,
        iou,
        hybrid: weights.combine(verdict.score, quality, iou, reference.is_some()),
    }
}

/// [`hybrid_reward`] on raw response text.
pub fn score_text(raw: &str, canvas: &Canvas, reference: Option<&Layout>, config: &RewardConfig) -> RewardBreakdown {
    hybrid_reward(&parse_response(raw), canvas, reference, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;
    use crate::layout::ElementCategory::*;
    use crate::protocol::format_response;

    #[test]
    fn default_weights_are_valid() {
        RewardWeights::default().validate().unwrap();
        RewardConfig::default().validate().unwrap();
    }

    #[test]
    fn invalid_weights_rejected() {
        let w = RewardWeights { lambda_f: 0.5, ..Default::default() };
        assert!(w.validate().is_err());
        let w = RewardWeights { lambda_f: -0.1, lambda_q: 1.0, lambda_u: 0.1, ..Default::default() };
        assert!(w.validate().is_err());
        let w = RewardWeights { quality_weights: QualityWeights { icr: 0.5, ..Default::default() }, ..Default::default() };
        assert!(w.validate().is_err());
    }

    #[test]
    fn combine_examples() {
        let w = RewardWeights::default();
        assert!((w.combine(1.0, 0.5, 0.0, true) - 0.5).abs() < 1e-12);
        assert!((w.combine(0.2, 0.0, 0.0, true) - 0.02).abs() < 1e-12);
        let expected = 0.1 + 0.8 * 0.82704 + 0.1 / 3.0;
        assert!((w.combine(1.0, 0.82704, 1.0 / 3.0, true) - expected).abs() < 1e-12);
        assert!((expected - 0.795).abs() < 5e-4);
    }

    #[test]
    fn missing_reference_redistributes_iou_weight() {
        let w = RewardWeights::default();
        let (f, q, u) = w.effective(false);
        assert!((f - 1.0 / 9.0).abs() < 1e-12 && (q - 8.0 / 9.0).abs() < 1e-12 && u == 0.0);
        assert!((w.combine(1.0, 1.0, 0.0, false) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unparsable_response_is_gated() {
        let canvas = Canvas::new("c", 100.0, 100.0, vec![], vec![Text]).unwrap();
        let reference = Layout::from_boxes(None, [(Text, BBox::new(0.0, 0.0, 10.0, 10.0))]);
        let b = score_text("<think>x</think><answer>{not json</answer>", &canvas, Some(&reference), &RewardConfig::default());
        assert_eq!(b.format_tier, FormatTier::Unparsable);
        assert_eq!((b.quality, b.iou, b.icr), (0.0, 0.0, 0.0));
        assert!((b.hybrid - 0.02).abs() < 1e-12);
    }

    #[test]
    fn valid_response_against_itself() {
        let canvas = Canvas::new("c", 100.0, 100.0, vec![], vec![Text, Logo]).unwrap();
        let layout = Layout::from_boxes(None, [(Text, BBox::new(10.0, 10.0, 30.0, 10.0)), (Logo, BBox::new(60.0, 70.0, 20.0, 20.0))]);
        let raw = format_response("placing", &layout);
        let b = score_text(&raw, &canvas, Some(&layout), &RewardConfig::default());
        assert_eq!(b.format_tier, FormatTier::Valid);
        assert!((b.iou - 1.0).abs() < 1e-12);
        let expected = 0.1 + 0.8 * b.quality + 0.1;
        assert!((b.hybrid - expected).abs() < 1e-12);
    }

    #[test]
    fn mismatched_counts_still_score_quality() {
        let canvas = Canvas::new("c", 100.0, 100.0, vec![], vec![Text, Text]).unwrap();
        let layout = Layout::from_boxes(None, [(Text, BBox::new(10.0, 10.0, 30.0, 10.0))]);
        let b = score_text(&format_response("", &layout), &canvas, None, &RewardConfig::default());
        assert_eq!(b.format_tier, FormatTier::ElementMismatch);
        assert!(b.quality > 0.0);
    }

    #[test]
    fn breakdown_json_is_flat() {
        let canvas = Canvas::new("c", 100.0, 100.0, vec![], vec![Text]).unwrap();
        let b = score_text("nothing", &canvas, None, &RewardConfig::default());
        let v: serde_json::Value = serde_json::to_value(&b).unwrap();
        let obj = v.as_object().unwrap();
        assert_eq!(obj["format_tier"], "missing_block");
        assert_eq!(obj["format"], 0.1);
        for (name, _) in b.numeric_fields() {
            assert!(obj[name].is_number(), "{name}");
        }
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = RewardConfig::default();
        let mut b = RewardConfig::default();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.policy.boundary_obstacles = false;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn config_parsing() {
        let cfg = RewardConfig::from_json(r#"{"weights":{"lambda_f":0.2,"lambda_q":0.7,"lambda_u":0.1}}"#).unwrap();
        assert_eq!(cfg.weights.lambda_f, 0.2);
        assert_eq!(cfg.weights.quality_weights, QualityWeights::default());
        assert!(RewardConfig::from_json(r#"{"weights":{"lambda_f":0.9}}"#).is_err());
        assert!(RewardConfig::from_json(r#"{"bogus":1}"#).is_err());
    }
}
