//! Bundled demo canvases and synthetic benchmark corpora.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{parse_dataset, DatasetFormat, DatasetRecord};
use crate::geometry::BBox;
use crate::layout::{Canvas, ElementCategory, Layout, SaliencyRegion};

const CANVAS_FILES: [(&str, &str); 3] = [
    ("poster-portrait", include_str!("../data/poster_portrait.json")),
    ("poster-landscape", include_str!("../data/poster_landscape.json")),
    ("poster-tall", include_str!("../data/poster_tall.json")),
];

/// `clean_corpus(50, 7)` as canonical NDJSON (coordinates rounded to 2 dp).
pub const CLEAN_CORPUS_NDJSON: &str = include_str!("../data/clean_corpus.ndjson");

pub fn bundled_clean_corpus() -> Vec<DatasetRecord> {
    parse_dataset(CLEAN_CORPUS_NDJSON, DatasetFormat::Canonical).expect("bundled corpus parses").records
}

/// Three five-element canvases with saliency regions.
pub fn canvases() -> Vec<Canvas> {
    CANVAS_FILES
        .iter()
        .map(|(_, text)| Canvas::from_json(text).expect("bundled canvases are valid"))
        .collect()
}

pub fn canvas(name: &str) -> Option<Canvas> {
    CANVAS_FILES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| Canvas::from_json(text).expect("bundled canvases are valid"))
}

pub fn canvas_json(name: &str) -> Option<&'static str> {
    CANVAS_FILES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// A well-designed poster layout: no collisions between content elements,
/// every underlay holding exactly one text, nothing on the salient band.
pub fn clean_record(index: usize, rng: &mut ChaCha8Rng) -> DatasetRecord {
    use ElementCategory::*;
    let w = rng.random_range(360.0..600.0f64).round();
    let h = rng.random_range(480.0..800.0f64).round();
    let jitter = |rng: &mut ChaCha8Rng| rng.random_range(-0.01..0.01);

    let sal_x = rng.random_range(0.15..0.35) * w;
    let saliency = BBox::new(sal_x, 0.40 * h, 0.5 * w, 0.25 * h);

    let dx = jitter(rng) * w;
    let mut items = vec![
        (Logo, BBox::new(0.05 * w + dx, 0.03 * h, 0.15 * w, 0.06 * h)),
        (Underlay, BBox::new(0.10 * w + dx, 0.13 * h, 0.80 * w, 0.12 * h)),
        (Text, BBox::new(0.15 * w + dx, 0.15 * h, 0.70 * w, 0.08 * h)),
        (Text, BBox::new(0.15 * w + jitter(rng) * w, 0.28 * h, 0.70 * w, 0.06 * h)),
        (Text, BBox::new(0.20 * w + jitter(rng) * w, 0.74 * h, 0.60 * w, 0.06 * h)),
    ];
    if rng.random_bool(0.5) {
        items.push((Embellishment, BBox::new(0.80 * w, 0.88 * h, 0.10 * w, 0.06 * h)));
    }
    let id = format!("clean-{index:03}");
    let canvas = Canvas::new(id.clone(), w, h, vec![SaliencyRegion::new(saliency)], items.iter().map(|(c, _)| *c).collect())
        .expect("generated canvases are valid");
    DatasetRecord { source_id: id.clone(), canvas, reference: Some(Layout::from_boxes(Some(id), items)) }
}

/// `n` clean records, deterministic in `seed`.
pub fn clean_corpus(n: usize, seed: u64) -> Vec<DatasetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| clean_record(i, &mut rng)).collect()
}

/// Damage a clean layout: the second text lands on the first, the underlay
/// is moved away from every text, and the last text covers the salient
/// region.
pub fn corrupt(record: &DatasetRecord) -> DatasetRecord {
    let mut out = record.clone();
    let canvas = &out.canvas;
    let sal = canvas.saliency.first().map(|s| s.bbox);
    let layout = out.reference.as_mut().expect("clean records carry a layout");
    let texts: Vec<usize> = layout
        .elements
        .iter()
        .enumerate()
        .filter(|(_, e)| e.category == ElementCategory::Text)
        .map(|(i, _)| i)
        .collect();
    if let [first, second, .., last] = texts[..] {
        let anchor = layout.elements[first].bbox;
        layout.elements[second].bbox = BBox::new(anchor.x + 0.1 * anchor.w, anchor.y + 0.2 * anchor.h, anchor.w, anchor.h);
        if let Some(s) = sal {
            layout.elements[last].bbox = BBox::new(s.x + 0.1 * s.w, s.y + 0.1 * s.h, 0.8 * s.w, 0.5 * s.h);
        }
    }
    for e in layout.elements.iter_mut().filter(|e| e.category == ElementCategory::Underlay) {
        e.bbox = BBox::new(0.02 * canvas.width, 0.90 * canvas.height, 0.10 * canvas.width, 0.05 * canvas.height);
    }
    out
}
