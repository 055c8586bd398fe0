//! Brute-force area oracle: paint boxes onto a 1024×1024 grid laid over a
//! `width × height` extent, testing each cell's center, then count cells.

use posterlay::BBox;

pub const N: usize = 1024;

pub struct Raster {
    width: f64,
    height: f64,
}

pub struct Mask(Vec<bool>);

impl Raster {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }

    pub fn cell_area(&self) -> f64 {
        (self.width / N as f64) * (self.height / N as f64)
    }

    /// Cells whose center lies in at least one box (half-open on the right
    /// and bottom edges).
    pub fn paint(&self, boxes: &[BBox]) -> Mask {
        let (cw, ch) = (self.width / N as f64, self.height / N as f64);
        let mut cells = vec![false; N * N];
        for row in 0..N {
            let y = (row as f64 + 0.5) * ch;
            for b in boxes {
                if !(b.y <= y && y < b.y + b.h) {
                    continue;
                }
                for col in 0..N {
                    let x = (col as f64 + 0.5) * cw;
                    if b.x <= x && x < b.x + b.w {
                        cells[row * N + col] = true;
                    }
                }
            }
        }
        Mask(cells)
    }

    pub fn area(&self, m: &Mask) -> f64 {
        m.0.iter().filter(|&&c| c).count() as f64 * self.cell_area()
    }

    pub fn and_area(&self, a: &Mask, b: &Mask) -> f64 {
        a.0.iter().zip(&b.0).filter(|(x, y)| **x && **y).count() as f64 * self.cell_area()
    }

    pub fn or_area(&self, a: &Mask, b: &Mask) -> f64 {
        a.0.iter().zip(&b.0).filter(|(x, y)| **x || **y).count() as f64 * self.cell_area()
    }

    pub fn jaccard(&self, a: &BBox, b: &BBox) -> f64 {
        let (ma, mb) = (self.paint(&[*a]), self.paint(&[*b]));
        let union = self.or_area(&ma, &mb);
        if union == 0.0 {
            0.0
        } else {
            self.and_area(&ma, &mb) / union
        }
    }

    pub fn intersection_area(&self, a: &BBox, b: &BBox) -> f64 {
        self.and_area(&self.paint(&[*a]), &self.paint(&[*b]))
    }

    pub fn containment_ratio(&self, inner: &BBox, outer: &BBox) -> f64 {
        let mi = self.paint(&[*inner]);
        let a = self.area(&mi);
        if a == 0.0 {
            0.0
        } else {
            self.and_area(&mi, &self.paint(&[*outer])) / a
        }
    }

    /// Share of the saliency union covered by the element union.
    pub fn occlusion(&self, elements: &[BBox], saliency: &[BBox]) -> f64 {
        let s = self.paint(saliency);
        let denom = self.area(&s);
        if denom == 0.0 {
            0.0
        } else {
            self.and_area(&self.paint(elements), &s) / denom
        }
    }
}
