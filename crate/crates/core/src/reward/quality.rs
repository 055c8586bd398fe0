//! Layout quality sub-rewards. Each returns a value in `[0, 1]`, higher is
//! better.

use crate::error::RewardError;
use crate::geometry::{center, containment_ratio, intersection_area, jaccard, BBox};
use crate::layout::{Canvas, ElementCategory, Layout};

use super::policy::{CollisionParty, CompatibilityPolicy};
use super::QualityWeights;

/// One minus the mean jaccard over every penalized pair.
///
/// Pairs are element/element pairs the policy penalizes plus element/saliency
/// pairs whose category is penalized against [`CollisionParty::Salient`].
/// With `boundary_obstacles` set, the result is further scaled by the mean
/// in-canvas fraction of the elements, so area pushed outside the canvas
/// counts as a collision with the exterior.
pub fn inverse_collision_rate(layout: &Layout, canvas: &Canvas, policy: &CompatibilityPolicy) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0usize;
    let els = &layout.elements;
    for (i, a) in els.iter().enumerate() {
        for b in &els[i + 1..] {
            if policy.penalizes(a.category.into(), b.category.into()) {
                total += 1.0 - jaccard(&a.bbox, &b.bbox);
                pairs += 1;
            }
        }
        if policy.penalizes(a.category.into(), CollisionParty::Salient) {
            for s in &canvas.saliency {
                total += 1.0 - jaccard(&a.bbox, &s.bbox);
                pairs += 1;
            }
        }
    }
    let pair_score = if pairs == 0 { 1.0 } else { total / pairs as f64 };

    let inside = if policy.boundary_obstacles { in_canvas_fraction(layout, canvas) } else { 1.0 };
    (pair_score * inside).clamp(0.0, 1.0)
}

/// Mean fraction of element area inside the canvas; zero-area elements are
/// skipped.
fn in_canvas_fraction(layout: &Layout, canvas: &Canvas) -> f64 {
    let bounds = canvas.bounds();
    let (sum, n) = layout
        .elements
        .iter()
        .filter(|e| e.bbox.area() > 0.0)
        .fold((0.0, 0usize), |(s, n), e| (s + containment_ratio(&e.bbox, &bounds), n + 1));
    if n == 0 {
        1.0
    } else {
        sum / n as f64
    }
}

fn centers(layout: &Layout) -> Vec<(f64, f64)> {
    layout.elements.iter().map(|e| center(&e.bbox)).collect()
}

fn mean_point(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x, sy + y));
    (sx / n, sy / n)
}

/// Average of canvas alignment (mean element center near the canvas center)
/// and mutual alignment (low population variance of the centers), both
/// normalized by the canvas half-diagonal.
pub fn alignment_score(layout: &Layout, canvas: &Canvas) -> Result<f64, RewardError> {
    if layout.is_empty() {
        return Err(RewardError::EmptyLayout);
    }
    let pts = centers(layout);
    let (mx, my) = mean_point(&pts);
    let half_diag = canvas.half_diagonal();

    let offset = (mx - canvas.width / 2.0).hypot(my - canvas.height / 2.0);
    let to_canvas = 1.0 - (offset / half_diag).min(1.0);

    let n = pts.len() as f64;
    let var_x = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>() / n;
    let var_y = pts.iter().map(|(_, y)| (y - my).powi(2)).sum::<f64>() / n;
    let mutual = 1.0 - ((var_x + var_y) / (half_diag * half_diag)).min(1.0);

    Ok(((to_canvas + mutual) / 2.0).clamp(0.0, 1.0))
}

/// Column/row of a 3x3 grid for a coordinate; points on a cell boundary
/// belong to the lower-index cell.
fn grid_index(v: f64, extent: f64) -> usize {
    if v <= extent / 3.0 {
        0
    } else if v <= 2.0 * extent / 3.0 {
        1
    } else {
        2
    }
}

/// Average of spread (mean squared distance of centers from their mean over
/// the squared half-diagonal, capped at 1) and 3x3 grid coverage by centers.
pub fn distribution_score(layout: &Layout, canvas: &Canvas) -> Result<f64, RewardError> {
    if layout.is_empty() {
        return Err(RewardError::EmptyLayout);
    }
    let pts = centers(layout);
    let (mx, my) = mean_point(&pts);
    let half_diag_sq = canvas.half_diagonal().powi(2);
    let mean_sq = pts.iter().map(|(x, y)| (x - mx).powi(2) + (y - my).powi(2)).sum::<f64>() / pts.len() as f64;
    let spread = (mean_sq / half_diag_sq).min(1.0);

    let mut occupied = [false; 9];
    for (x, y) in &pts {
        occupied[grid_index(*y, canvas.height) * 3 + grid_index(*x, canvas.width)] = true;
    }
    let coverage = occupied.iter().filter(|o| **o).count() as f64 / 9.0;

    Ok(((spread + coverage) / 2.0).clamp(0.0, 1.0))
}

/// Vertical rhythm: `1 - Var(g) / (mean(g) * H)` over the gaps `g` between
/// consecutive center-y values, clamped to `[0, 1]`. Fewer than two gaps, or
/// all elements stacked at one height, score 1.
pub fn spacing_consistency(layout: &Layout, canvas: &Canvas) -> f64 {
    let mut ys: Vec<f64> = centers(layout).into_iter().map(|(_, y)| y).collect();
    if ys.len() < 3 {
        return 1.0;
    }
    ys.sort_by(f64::total_cmp);
    let gaps: Vec<f64> = ys.windows(2).map(|w| w[1] - w[0]).collect();
    let n = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return 1.0;
    }
    let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n;
    (1.0 - var / (mean * canvas.height)).clamp(0.0, 1.0)
}

/// Each underlay should back exactly one text. An underlay touched by no text
/// or by several texts scores 0; with exactly one text it scores the fraction
/// of that text lying on the underlay. Layouts without underlays score 1.
pub fn underlay_text_reward(layout: &Layout) -> f64 {
    let texts: Vec<&BBox> = layout.of_category(ElementCategory::Text).map(|e| &e.bbox).collect();
    let scores: Vec<f64> = layout
        .of_category(ElementCategory::Underlay)
        .map(|u| {
            let mut touching = texts.iter().filter(|t| intersection_area(t, &u.bbox) > 0.0);
            match (touching.next(), touching.next()) {
                (Some(text), None) => containment_ratio(text, &u.bbox),
                _ => 0.0,
            }
        })
        .collect();
    if scores.is_empty() {
        1.0
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct QualityScores {
    pub icr: f64,
    pub al: f64,
    pub dis: f64,
    pub sp: f64,
    pub ut: f64,
}

impl QualityScores {
    pub fn weighted(&self, w: &QualityWeights) -> f64 {
        let q = w.icr * self.icr + w.al * self.al + w.dis * self.dis + w.sp * self.sp + w.ut * self.ut;
        q.clamp(0.0, 1.0)
    }
}

/// All five sub-rewards of a non-empty layout.
pub fn quality_scores(layout: &Layout, canvas: &Canvas, policy: &CompatibilityPolicy) -> Result<QualityScores, RewardError> {
    Ok(QualityScores {
        icr: inverse_collision_rate(layout, canvas, policy),
        al: alignment_score(layout, canvas)?,
        dis: distribution_score(layout, canvas)?,
        sp: spacing_consistency(layout, canvas),
        ut: underlay_text_reward(layout),
    })
}

/// Weighted quality together with the sub-values it was built from.
pub fn quality_reward(
    layout: &Layout,
    canvas: &Canvas,
    weights: &QualityWeights,
    policy: &CompatibilityPolicy,
) -> Result<(f64, QualityScores), RewardError> {
    let scores = quality_scores(layout, canvas, policy)?;
    Ok((scores.weighted(weights), scores))
}
