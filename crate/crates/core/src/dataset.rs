//! Dataset ingestion.
//!
//! Three on-disk layouts are understood:
//!
//! * `canonical`: newline-delimited JSON, one [`LayoutDocument`] per line
//!   (`id`, `canvas`, `saliency`, `elements`). Element geometry is optional;
//!   when every element carries it the record gets a reference layout.
//! * `pku_like`: newline-delimited JSON records with `id`, `width`,
//!   `height`, `cls_elem` (1 text, 2 logo, 3 underlay), `box_elem`
//!   (`[x1, y1, x2, y2]` per element) and optional `saliency` boxes in the
//!   same corner form.
//! * `cgl_like`: a single COCO-style JSON object with `images`,
//!   `annotations` (`bbox` as `[x, y, w, h]`) and `categories` (matched by
//!   name), plus optional per-image `saliency` boxes in `[x, y, w, h]` form.
//!
//! Records with categories that cannot be mapped are skipped and counted.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{DatasetError, LayoutError};
use crate::geometry::BBox;
use crate::layout::{Canvas, ElementCategory, Layout, LayoutDocument, SaliencyRegion};

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub source_id: String,
    pub canvas: Canvas,
    pub reference: Option<Layout>,
}

impl DatasetRecord {
    pub fn to_document(&self) -> LayoutDocument {
        let mut doc = match &self.reference {
            Some(layout) => LayoutDocument::from_layout(layout, Some(&self.canvas)),
            None => LayoutDocument::from_canvas(&self.canvas),
        };
        doc.id = Some(self.source_id.clone());
        doc
    }

    /// Build from a canonical document; `fallback_id` names records without an id.
    pub fn from_document(doc: &LayoutDocument, fallback_id: &str) -> Result<Self, LayoutError> {
        let source_id = doc.id.clone().unwrap_or_else(|| fallback_id.to_string());
        let mut canvas = doc.canvas()?;
        canvas.id = source_id.clone();
        let reference = if doc.has_geometry() {
            let mut layout = doc.layout()?;
            layout.canvas_ref = Some(source_id.clone());
            Some(layout)
        } else {
            None
        };
        Ok(Self { source_id, canvas, reference })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    Canonical,
    PkuLike,
    CglLike,
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "canonical" => Ok(Self::Canonical),
            "pku_like" | "pku" => Ok(Self::PkuLike),
            "cgl_like" | "cgl" => Ok(Self::CglLike),
            other => Err(format!("unknown dataset format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct LoadReport {
    pub loaded: usize,
    pub skipped: usize,
    /// One line per skipped record.
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub records: Vec<DatasetRecord>,
    pub report: LoadReport,
}

pub fn ingest_dataset(path: &Path, format: DatasetFormat) -> Result<LoadedDataset, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
    let loaded = parse_dataset(&text, format)?;
    if loaded.records.is_empty() {
        return Err(DatasetError::NoRecords { path: path.to_path_buf(), skipped: loaded.report.skipped });
    }
    Ok(loaded)
}

/// Parse dataset text. An empty result is not an error here.
pub fn parse_dataset(text: &str, format: DatasetFormat) -> Result<LoadedDataset, DatasetError> {
    let mut records = Vec::new();
    let mut report = LoadReport::default();
    let mut push = |id: String, result: Result<DatasetRecord, String>| match result {
        Ok(r) => {
            report.loaded += 1;
            records.push(r);
        }
        Err(reason) => {
            report.skipped += 1;
            report.reasons.push(format!("{id}: {reason}"));
        }
    };

    match format {
        DatasetFormat::Canonical => {
            for (lineno, line) in ndjson_lines(text) {
                let fallback = format!("line-{lineno}");
                let result = serde_json::from_str::<LayoutDocument>(line)
                    .map_err(|e| e.to_string())
                    .and_then(|doc| DatasetRecord::from_document(&doc, &fallback).map_err(|e| e.to_string()));
                push(fallback, result);
            }
        }
        DatasetFormat::PkuLike => {
            for (lineno, line) in ndjson_lines(text) {
                let fallback = format!("line-{lineno}");
                push(fallback.clone(), pku_record(line, &fallback));
            }
        }
        DatasetFormat::CglLike => {
            for (id, result) in cgl_records(text)? {
                push(id, result);
            }
        }
    }
    Ok(LoadedDataset { records, report })
}

fn ndjson_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

fn record(id: String, width: f64, height: f64, saliency: Vec<BBox>, elements: Vec<(ElementCategory, BBox)>) -> Result<DatasetRecord, String> {
    let manifest = elements.iter().map(|(c, _)| *c).collect();
    let canvas = Canvas::new(id.clone(), width, height, saliency.into_iter().map(SaliencyRegion::new).collect(), manifest)
        .map_err(|e| e.to_string())?;
    if let Some((_, b)) = elements.iter().find(|(_, b)| !b.is_valid()) {
        return Err(format!("invalid element box {b:?}"));
    }
    let reference = (!elements.is_empty()).then(|| Layout::from_boxes(Some(id.clone()), elements));
    Ok(DatasetRecord { source_id: id, canvas, reference })
}

fn corners(v: &Value) -> Option<BBox> {
    let a = v.as_array()?;
    let n: Vec<f64> = a.iter().filter_map(Value::as_f64).collect();
    (n.len() == 4 && a.len() == 4).then(|| BBox::from_corners(n[0], n[1], n[2], n[3]))
}

fn xywh(v: &Value) -> Option<BBox> {
    let a = v.as_array()?;
    let n: Vec<f64> = a.iter().filter_map(Value::as_f64).collect();
    (n.len() == 4 && a.len() == 4).then(|| BBox::new(n[0], n[1], n[2], n[3]))
}

fn pku_category(class: i64) -> Option<ElementCategory> {
    match class {
        1 => Some(ElementCategory::Text),
        2 => Some(ElementCategory::Logo),
        3 => Some(ElementCategory::Underlay),
        _ => None,
    }
}

fn pku_record(line: &str, fallback: &str) -> Result<DatasetRecord, String> {
    let v: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let id = match v.get("id") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => fallback.to_string(),
    };
    let dim = |k: &str| v.get(k).and_then(Value::as_f64).ok_or_else(|| format!("missing `{k}`"));
    let (width, height) = (dim("width")?, dim("height")?);
    let classes = v.get("cls_elem").and_then(Value::as_array).ok_or("missing `cls_elem`")?;
    let boxes = v.get("box_elem").and_then(Value::as_array).ok_or("missing `box_elem`")?;
    if classes.len() != boxes.len() {
        return Err(format!("{} classes but {} boxes", classes.len(), boxes.len()));
    }
    let mut elements = Vec::with_capacity(classes.len());
    for (c, b) in classes.iter().zip(boxes) {
        let class = c.as_i64().ok_or_else(|| format!("non-integer class {c}"))?;
        let cat = pku_category(class).ok_or_else(|| format!("unmappable class {class}"))?;
        elements.push((cat, corners(b).ok_or_else(|| format!("malformed box {b}"))?));
    }
    let saliency = match v.get("saliency").and_then(Value::as_array) {
        Some(items) => items.iter().map(|b| corners(b).ok_or_else(|| format!("malformed saliency box {b}"))).collect::<Result<_, _>>()?,
        None => Vec::new(),
    };
    record(id, width, height, saliency, elements)
}

fn cgl_records(text: &str) -> Result<Vec<(String, Result<DatasetRecord, String>)>, DatasetError> {
    let malformed = |message: String| DatasetError::Malformed { format: "cgl_like", message };
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let root: Value = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let array = |k: &str| root.get(k).and_then(Value::as_array).ok_or_else(|| malformed(format!("missing `{k}` array")));
    let images = array("images")?;
    let annotations = root.get("annotations").and_then(Value::as_array).cloned().unwrap_or_default();

    let mut categories: BTreeMap<i64, Option<ElementCategory>> = BTreeMap::new();
    for c in array("categories")? {
        if let Some(id) = c.get("id").and_then(Value::as_i64) {
            let name = c.get("name").and_then(Value::as_str).unwrap_or_default();
            categories.insert(id, name.parse().ok());
        }
    }

    let mut by_image: BTreeMap<i64, Vec<&Value>> = BTreeMap::new();
    for a in &annotations {
        if let Some(img) = a.get("image_id").and_then(Value::as_i64) {
            by_image.entry(img).or_default().push(a);
        }
    }

    let mut out = Vec::with_capacity(images.len());
    for img in images {
        let image_id = img.get("id").and_then(Value::as_i64);
        let id = img
            .get("file_name")
            .and_then(Value::as_str)
            .map(str::to_string)
            .or_else(|| image_id.map(|i| i.to_string()))
            .unwrap_or_else(|| format!("image-{}", out.len()));
        let result = (|| {
            let image_id = image_id.ok_or("image without `id`")?;
            let width = img.get("width").and_then(Value::as_f64).ok_or("image without `width`")?;
            let height = img.get("height").and_then(Value::as_f64).ok_or("image without `height`")?;
            let mut elements = Vec::new();
            for a in by_image.get(&image_id).map(Vec::as_slice).unwrap_or_default() {
                let cat_id = a.get("category_id").and_then(Value::as_i64).ok_or("annotation without `category_id`")?;
                let cat = categories
                    .get(&cat_id)
                    .copied()
                    .flatten()
                    .ok_or_else(|| format!("unmappable category id {cat_id}"))?;
                let bbox = a.get("bbox").and_then(xywh).ok_or("annotation with malformed `bbox`")?;
                elements.push((cat, bbox));
            }
            let saliency = match img.get("saliency").and_then(Value::as_array) {
                Some(items) => items.iter().map(|b| xywh(b).ok_or("malformed saliency box")).collect::<Result<_, _>>()?,
                None => Vec::new(),
            };
            record(id.clone(), width, height, saliency, elements)
        })();
        out.push((id, result.map_err(|e: String| e)));
    }
    Ok(out)
}

/// Canonical NDJSON for a set of records.
pub fn to_ndjson(records: &[DatasetRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&r.to_document()).expect("documents always serialize"));
        out.push('\n');
    }
    out
}
