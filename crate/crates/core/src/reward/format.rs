use std::fmt;

use serde::{Deserialize, Serialize};

use crate::layout::{Canvas, Layout};
use crate::protocol::{parse_layout_json, CandidateResponse, LayoutParseFailure};

/// Format tiers, ordered from worst to best.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatTier {
    MissingBlock,
    Unparsable,
    ElementMismatch,
    Valid,
}

impl FormatTier {
    pub fn score(self) -> f64 {
        match self {
            Self::MissingBlock => 0.1,
            Self::Unparsable => 0.2,
            Self::ElementMismatch => 0.5,
            Self::Valid => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::MissingBlock => "missing_block",
            Self::Unparsable => "unparsable",
            Self::ElementMismatch => "element_mismatch",
            Self::Valid => "valid",
        }
    }
}

impl fmt::Display for FormatTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormatVerdict {
    pub tier: FormatTier,
    pub score: f64,
    pub detail: String,
}

impl FormatVerdict {
    fn new(tier: FormatTier, detail: impl Into<String>) -> Self {
        Self { tier, score: tier.score(), detail: detail.into() }
    }
}

/// Format verdict plus whatever layout could be recovered from the answer.
pub fn assess_format(response: &CandidateResponse, canvas: &Canvas) -> (FormatVerdict, Option<Layout>) {
    let answer = match (&response.think, &response.answer) {
        (Some(_), Some(answer)) => answer,
        (None, None) => return (FormatVerdict::new(FormatTier::MissingBlock, "missing <think> and <answer> blocks"), None),
        (None, _) => return (FormatVerdict::new(FormatTier::MissingBlock, "missing <think> block"), None),
        (_, None) => return (FormatVerdict::new(FormatTier::MissingBlock, "missing <answer> block"), None),
    };
    match parse_layout_json(answer, canvas) {
        Ok(layout) => (FormatVerdict::new(FormatTier::Valid, "ok"), Some(layout)),
        Err(LayoutParseFailure::Unparsable(detail)) => (FormatVerdict::new(FormatTier::Unparsable, detail), None),
        Err(LayoutParseFailure::ElementMismatch { detail, layout }) => {
            (FormatVerdict::new(FormatTier::ElementMismatch, detail), layout)
        }
    }
}

/// Tier of the first failing check: block presence, JSON parsability, then
/// the category multiset against the canvas manifest.
pub fn format_reward(response: &CandidateResponse, canvas: &Canvas) -> FormatVerdict {
    assess_format(response, canvas).0
}
