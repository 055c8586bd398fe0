use crate::error::RewardError;
use crate::geometry::jaccard;
use crate::layout::{ElementCategory, Layout};

/// Agreement with a reference layout.
///
/// Within each category, predicted and reference boxes are matched greedily
/// in descending IoU order (ties broken by index). The matched IoUs are summed
/// and divided by the larger of the two element counts, so unmatched elements
/// on either side contribute zero.
pub fn iou_matching_reward(layout: &Layout, reference: &Layout) -> Result<f64, RewardError> {
    if reference.is_empty() {
        return Err(RewardError::EmptyReference);
    }
    let mut matched = 0.0;
    for category in ElementCategory::ALL {
        let pred: Vec<_> = layout.of_category(category).map(|e| e.bbox).collect();
        let truth: Vec<_> = reference.of_category(category).map(|e| e.bbox).collect();
        if pred.is_empty() || truth.is_empty() {
            continue;
        }
        let mut candidates: Vec<(f64, usize, usize)> = pred
            .iter()
            .enumerate()
            .flat_map(|(i, p)| truth.iter().enumerate().map(move |(j, t)| (jaccard(p, t), i, j)))
            .filter(|(iou, _, _)| *iou > 0.0)
            .collect();
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut pred_used = vec![false; pred.len()];
        let mut truth_used = vec![false; truth.len()];
        for (iou, i, j) in candidates {
            if !pred_used[i] && !truth_used[j] {
                pred_used[i] = true;
                truth_used[j] = true;
                matched += iou;
            }
        }
    }
    let denom = layout.len().max(reference.len()) as f64;
    Ok((matched / denom).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;
    use ElementCategory::*;

    fn layout(items: &[(ElementCategory, BBox)]) -> Layout {
        Layout::from_boxes(None, items.iter().copied())
    }

    #[test]
    fn identity_is_one() {
        let l = layout(&[(Text, BBox::new(0.0, 0.0, 5.0, 5.0)), (Logo, BBox::new(10.0, 10.0, 3.0, 3.0))]);
        assert!((iou_matching_reward(&l, &l).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_is_zero() {
        let a = layout(&[(Text, BBox::new(0.0, 0.0, 5.0, 5.0))]);
        let b = layout(&[(Text, BBox::new(50.0, 50.0, 5.0, 5.0))]);
        assert_eq!(iou_matching_reward(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn shifted_single_element() {
        let a = layout(&[(Text, BBox::new(0.0, 0.0, 2.0, 2.0))]);
        let b = layout(&[(Text, BBox::new(1.0, 0.0, 2.0, 2.0))]);
        assert!((iou_matching_reward(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn categories_never_cross_match() {
        let a = layout(&[(Logo, BBox::new(0.0, 0.0, 5.0, 5.0))]);
        let b = layout(&[(Text, BBox::new(0.0, 0.0, 5.0, 5.0))]);
        assert_eq!(iou_matching_reward(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn extra_predictions_dilute() {
        let r = layout(&[(Text, BBox::new(0.0, 0.0, 5.0, 5.0))]);
        let p = layout(&[(Text, BBox::new(0.0, 0.0, 5.0, 5.0)), (Text, BBox::new(20.0, 0.0, 5.0, 5.0))]);
        assert!((iou_matching_reward(&p, &r).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn greedy_takes_best_pair_first() {
        let r = layout(&[(Text, BBox::new(0.0, 0.0, 10.0, 10.0)), (Text, BBox::new(8.0, 0.0, 10.0, 10.0))]);
        let p = layout(&[(Text, BBox::new(8.0, 0.0, 10.0, 10.0)), (Text, BBox::new(0.0, 0.0, 10.0, 10.0))]);
        assert!((iou_matching_reward(&p, &r).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_reference_errors() {
        let p = layout(&[(Text, BBox::new(0.0, 0.0, 5.0, 5.0))]);
        assert_eq!(iou_matching_reward(&p, &Layout::default()), Err(RewardError::EmptyReference));
        assert_eq!(iou_matching_reward(&Layout::default(), &p).unwrap(), 0.0);
    }
}
