//! Axis-aligned rectangle geometry.
//!
//! Boxes are `(x, y, w, h)` in real-valued pixels with the origin at the
//! top-left corner. Degenerate boxes (zero width or height) are legal and
//! contribute zero area everywhere.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    #[serde(rename = "width")]
    pub w: f64,
    #[serde(rename = "height")]
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    /// Box spanning `[x0, x1] x [y0, y1]`. Inverted spans collapse to zero size.
    pub fn from_corners(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new(x0, y0, (x1 - x0).max(0.0), (y1 - y0).max(0.0))
    }

    #[inline]
    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    #[inline]
    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.w.is_finite()
            && self.h.is_finite()
            && self.w >= 0.0
            && self.h >= 0.0
    }

    pub fn area(&self) -> f64 {
        area(self)
    }

    pub fn center(&self) -> (f64, f64) {
        center(self)
    }

    /// Clamp the box into `[0, width] x [0, height]`.
    pub fn clamp_to(&self, width: f64, height: f64) -> Self {
        let x0 = self.x.clamp(0.0, width);
        let y0 = self.y.clamp(0.0, height);
        let x1 = self.right().clamp(0.0, width);
        let y1 = self.bottom().clamp(0.0, height);
        Self::from_corners(x0, y0, x1, y1)
    }
}

pub fn area(b: &BBox) -> f64 {
    b.w.max(0.0) * b.h.max(0.0)
}

/// Overlap length of `[a0, a1]` and `[b0, b1]`, never negative.
#[inline]
fn overlap_1d(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

pub fn intersection_area(a: &BBox, b: &BBox) -> f64 {
    overlap_1d(a.x, a.right(), b.x, b.right()) * overlap_1d(a.y, a.bottom(), b.y, b.bottom())
}

/// Intersection over union. Two zero-area boxes have jaccard 0: there is no
/// evidence of overlap.
pub fn jaccard(a: &BBox, b: &BBox) -> f64 {
    let inter = intersection_area(a, b);
    let union = area(a) + area(b) - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Fraction of `inner`'s area lying inside `outer`; 0 for a zero-area `inner`.
pub fn containment_ratio(inner: &BBox, outer: &BBox) -> f64 {
    let a = area(inner);
    if a <= 0.0 {
        return 0.0;
    }
    (intersection_area(inner, outer) / a).clamp(0.0, 1.0)
}

pub fn center(b: &BBox) -> (f64, f64) {
    (b.x + b.w / 2.0, b.y + b.h / 2.0)
}

/// Intersection of two boxes, if it has positive extent on both axes.
pub fn intersection(a: &BBox, b: &BBox) -> Option<BBox> {
    let x0 = a.x.max(b.x);
    let y0 = a.y.max(b.y);
    let x1 = a.right().min(b.right());
    let y1 = a.bottom().min(b.bottom());
    (x1 > x0 && y1 > y0).then(|| BBox::from_corners(x0, y0, x1, y1))
}

/// Exact area of the union of `boxes`.
pub fn union_area(boxes: &[BBox]) -> f64 {
    covered_area(boxes, None)
}

/// Exact area of `union(first) ∩ union(second)`.
///
/// Both unions are evaluated on the compressed grid induced by every edge of
/// every box; a grid cell is counted when some box of each family covers it.
pub fn union_intersection_area(first: &[BBox], second: &[BBox]) -> f64 {
    covered_area(first, Some(second))
}

fn covered_area(first: &[BBox], second: Option<&[BBox]>) -> f64 {
    let live = |bs: &[BBox]| -> Vec<BBox> { bs.iter().copied().filter(|b| area(b) > 0.0).collect() };
    let first = live(first);
    let second = second.map(live);
    if first.is_empty() || second.as_ref().is_some_and(|s| s.is_empty()) {
        return 0.0;
    }

    let all = first.iter().chain(second.iter().flatten());
    let mut xs: Vec<f64> = all.clone().flat_map(|b| [b.x, b.right()]).collect();
    let mut ys: Vec<f64> = all.flat_map(|b| [b.y, b.bottom()]).collect();
    for v in [&mut xs, &mut ys] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }

    // Per-family coverage flags on the compressed grid, filled box by box.
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let index = |v: &[f64], t: f64| v.partition_point(|&c| c < t);
    let paint = |boxes: &[BBox]| -> Vec<bool> {
        let mut grid = vec![false; nx * ny];
        for b in boxes {
            let (i0, i1) = (index(&xs, b.x), index(&xs, b.right()));
            let (j0, j1) = (index(&ys, b.y), index(&ys, b.bottom()));
            for i in i0..i1 {
                for j in j0..j1 {
                    grid[i * ny + j] = true;
                }
            }
        }
        grid
    };

    let a = paint(&first);
    let b = second.as_deref().map(paint);
    let mut total = 0.0;
    for i in 0..nx {
        let dx = xs[i + 1] - xs[i];
        for j in 0..ny {
            let k = i * ny + j;
            if a[k] && b.as_ref().is_none_or(|g| g[k]) {
                total += dx * (ys[j + 1] - ys[j]);
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn area_examples() {
        assert_eq!(area(&BBox::new(0.0, 0.0, 2.0, 2.0)), 4.0);
        assert_eq!(area(&BBox::new(5.0, 5.0, 0.0, 3.0)), 0.0);
        assert!((area(&BBox::new(1.5, 2.5, 3.0, 0.5)) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn intersection_examples() {
        let a = BBox::new(0.0, 0.0, 2.0, 2.0);
        assert_eq!(intersection_area(&a, &BBox::new(1.0, 1.0, 2.0, 2.0)), 1.0);
        assert_eq!(
            intersection_area(&BBox::new(0.0, 0.0, 1.0, 1.0), &BBox::new(5.0, 5.0, 1.0, 1.0)),
            0.0
        );
        assert_eq!(intersection_area(&a, &a), 4.0);
    }

    #[test]
    fn jaccard_examples() {
        let a = BBox::new(0.0, 0.0, 2.0, 2.0);
        assert_eq!(jaccard(&a, &a), 1.0);
        assert_eq!(jaccard(&a, &BBox::new(10.0, 10.0, 1.0, 1.0)), 0.0);
        assert!((jaccard(&a, &BBox::new(1.0, 1.0, 2.0, 2.0)) - 1.0 / 7.0).abs() < 1e-12);
        let p = BBox::new(3.0, 3.0, 0.0, 0.0);
        assert_eq!(jaccard(&p, &p), 0.0);
    }

    #[test]
    fn containment_examples() {
        let underlay = BBox::new(0.0, 0.0, 10.0, 10.0);
        assert_eq!(containment_ratio(&BBox::new(2.0, 2.0, 3.0, 3.0), &underlay), 1.0);
        assert_eq!(containment_ratio(&BBox::new(20.0, 2.0, 3.0, 3.0), &underlay), 0.0);
        let half = containment_ratio(&BBox::new(0.0, 0.0, 2.0, 2.0), &BBox::new(1.0, 0.0, 2.0, 2.0));
        assert!((half - 0.5).abs() < 1e-12);
        assert_eq!(containment_ratio(&BBox::new(1.0, 1.0, 0.0, 4.0), &underlay), 0.0);
    }

    #[test]
    fn center_examples() {
        assert_eq!(center(&BBox::new(0.0, 0.0, 2.0, 2.0)), (1.0, 1.0));
        assert_eq!(center(&BBox::new(10.0, 20.0, 0.0, 0.0)), (10.0, 20.0));
        assert_eq!(center(&BBox::new(3.0, 4.0, 5.0, 6.0)), (5.5, 7.0));
    }

    #[test]
    fn union_handles_overlap_and_nesting() {
        let boxes = [
            BBox::new(0.0, 0.0, 2.0, 2.0),
            BBox::new(1.0, 1.0, 2.0, 2.0),
            BBox::new(0.5, 0.5, 0.5, 0.5),
        ];
        assert!((union_area(&boxes) - 7.0).abs() < 1e-12);
        assert_eq!(union_area(&[]), 0.0);
    }

    #[test]
    fn union_intersection_of_families() {
        let sal = [BBox::new(0.0, 0.0, 4.0, 2.0)];
        let elems = [BBox::new(0.0, 0.0, 2.0, 2.0), BBox::new(1.0, 0.0, 2.0, 2.0)];
        assert!((union_intersection_area(&elems, &sal) - 6.0).abs() < 1e-12);
        assert_eq!(union_intersection_area(&elems, &[]), 0.0);
    }

    #[test]
    fn clamp_keeps_box_inside() {
        let b = BBox::new(-5.0, 90.0, 20.0, 20.0).clamp_to(100.0, 100.0);
        assert_eq!(b, BBox::new(0.0, 90.0, 15.0, 10.0));
        let outside = BBox::new(200.0, 200.0, 5.0, 5.0).clamp_to(100.0, 100.0);
        assert_eq!(area(&outside), 0.0);
    }
}
