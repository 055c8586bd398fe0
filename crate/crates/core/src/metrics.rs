//! Benchmark metrics for generated layouts: overlay (Ove, lower is better),
//! underlay effectiveness (Und, higher is better) and occlusion (Occ, lower
//! is better).

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{area, containment_ratio, intersection_area, jaccard, union_area, union_intersection_area, BBox};
use crate::layout::{Canvas, ElementCategory, Layout};

const CONTAINMENT_TOLERANCE: f64 = 1e-9;

/// Pairwise overlap measure used by [`overlay`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMeasure {
    #[default]
    Jaccard,
    /// Intersection divided by the smaller box area.
    IntersectionOverMin,
}

impl OverlapMeasure {
    fn eval(self, a: &BBox, b: &BBox) -> f64 {
        match self {
            Self::Jaccard => jaccard(a, b),
            Self::IntersectionOverMin => {
                let m = area(a).min(area(b));
                if m <= 0.0 {
                    0.0
                } else {
                    (intersection_area(a, b) / m).min(1.0)
                }
            }
        }
    }
}

/// Mean pairwise overlap among non-underlay elements; 0 with fewer than two.
pub fn overlay(layout: &Layout) -> f64 {
    overlay_with(layout, OverlapMeasure::Jaccard)
}

pub fn overlay_with(layout: &Layout, measure: OverlapMeasure) -> f64 {
    let boxes: Vec<&BBox> = layout
        .elements
        .iter()
        .filter(|e| e.category != ElementCategory::Underlay)
        .map(|e| &e.bbox)
        .collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (i, a) in boxes.iter().enumerate() {
        for b in &boxes[i + 1..] {
            total += measure.eval(a, b);
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}

/// Fraction of underlays that fully contain at least one non-underlay
/// element; 1 when there are no underlays.
pub fn underlay_effectiveness(layout: &Layout) -> f64 {
    let content: Vec<&BBox> = layout
        .elements
        .iter()
        .filter(|e| e.category != ElementCategory::Underlay)
        .map(|e| &e.bbox)
        .collect();
    let mut underlays = 0usize;
    let mut effective = 0usize;
    for u in layout.of_category(ElementCategory::Underlay) {
        underlays += 1;
        if content.iter().any(|c| containment_ratio(c, &u.bbox) >= 1.0 - CONTAINMENT_TOLERANCE) {
            effective += 1;
        }
    }
    if underlays == 0 {
        1.0
    } else {
        effective as f64 / underlays as f64
    }
}

/// Share of the saliency union covered by the element union; 0 without
/// saliency regions.
pub fn occlusion(layout: &Layout, canvas: &Canvas) -> f64 {
    let saliency = canvas.saliency_boxes();
    let denom = union_area(&saliency);
    if denom <= 0.0 {
        return 0.0;
    }
    (union_intersection_area(&layout.boxes(), &saliency) / denom).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTriple {
    pub ove: f64,
    pub und: f64,
    pub occ: f64,
}

impl MetricTriple {
    pub fn of(layout: &Layout, canvas: &Canvas, measure: OverlapMeasure) -> Self {
        Self { ove: overlay_with(layout, measure), und: underlay_effectiveness(layout), occ: occlusion(layout, canvas) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ove: f64,
    pub und: f64,
    pub occ: f64,
    pub n_layouts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_layout: Option<Vec<MetricTriple>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("cannot report metrics over an empty corpus")]
pub struct EmptyCorpus;

pub fn report(items: &[(Layout, Canvas)]) -> Result<MetricReport, EmptyCorpus> {
    report_with(items, OverlapMeasure::Jaccard)
}

/// Per-layout metrics (in input order) and their means.
pub fn report_with(items: &[(Layout, Canvas)], measure: OverlapMeasure) -> Result<MetricReport, EmptyCorpus> {
    if items.is_empty() {
        return Err(EmptyCorpus);
    }
    let per: Vec<MetricTriple> = items.par_iter().map(|(l, c)| MetricTriple::of(l, c, measure)).collect();
    let n = per.len() as f64;
    let mean = |f: fn(&MetricTriple) -> f64| per.iter().map(f).sum::<f64>() / n;
    Ok(MetricReport {
        ove: mean(|t| t.ove),
        und: mean(|t| t.und),
        occ: mean(|t| t.occ),
        n_layouts: per.len(),
        per_layout: Some(per),
    })
}

impl MetricReport {
    /// Aligned text table with the columns Ove, Und, Occ.
    pub fn to_table(&self, label: &str) -> String {
        let width = label.len().max(6);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>8}  {:>8}  {:>8}  {:>6}", "Model", "Ove ↓", "Und ↑", "Occ ↓", "N");
        let _ = writeln!(out, "{:<width$}  {:>8.4}  {:>8.4}  {:>8.4}  {:>6}", label, self.ove, self.und, self.occ, self.n_layouts);
        out
    }
}
