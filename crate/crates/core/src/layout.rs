//! Domain types: canvases, elements, layouts and the canonical layout JSON
//! document shared by the protocol, dataset and CLI layers.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::LayoutError;
use crate::geometry::BBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementCategory {
    Text,
    Logo,
    Underlay,
    /// Only present in CGL-style data.
    Embellishment,
}

impl ElementCategory {
    pub const ALL: [ElementCategory; 4] = [Self::Text, Self::Logo, Self::Underlay, Self::Embellishment];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Text => "text",
            Self::Logo => "logo",
            Self::Underlay => "underlay",
            Self::Embellishment => "embellishment",
        }
    }
}

impl fmt::Display for ElementCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ElementCategory {
    type Err = LayoutError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" => Ok(Self::Text),
            "logo" => Ok(Self::Logo),
            "underlay" => Ok(Self::Underlay),
            "embellishment" => Ok(Self::Embellishment),
            other => Err(LayoutError::UnknownCategory(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub id: usize,
    pub category: ElementCategory,
    pub bbox: BBox,
}

impl Element {
    pub fn new(id: usize, category: ElementCategory, bbox: BBox) -> Self {
        Self { id, category, bbox }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyRegion {
    pub bbox: BBox,
    pub label: String,
}

impl SaliencyRegion {
    pub fn new(bbox: BBox) -> Self {
        Self { bbox, label: "salient".to_string() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Canvas {
    pub id: String,
    pub width: f64,
    pub height: f64,
    pub saliency: Vec<SaliencyRegion>,
    /// Element categories a generated layout must contain, as a multiset.
    pub manifest: Vec<ElementCategory>,
}

impl Canvas {
    /// Validates dimensions and clamps saliency boxes into the canvas.
    pub fn new(
        id: impl Into<String>,
        width: f64,
        height: f64,
        saliency: Vec<SaliencyRegion>,
        manifest: Vec<ElementCategory>,
    ) -> Result<Self, LayoutError> {
        if !(width.is_finite() && height.is_finite() && width > 0.0 && height > 0.0) {
            return Err(LayoutError::InvalidCanvas { width, height });
        }
        let mut saliency = saliency;
        for region in &mut saliency {
            if !region.bbox.is_valid() {
                return Err(LayoutError::InvalidBox(region.bbox));
            }
            region.bbox = region.bbox.clamp_to(width, height);
        }
        Ok(Self { id: id.into(), width, height, saliency, manifest })
    }

    pub fn bounds(&self) -> BBox {
        BBox::new(0.0, 0.0, self.width, self.height)
    }

    pub fn saliency_boxes(&self) -> Vec<BBox> {
        self.saliency.iter().map(|s| s.bbox).collect()
    }

    pub fn half_diagonal(&self) -> f64 {
        self.width.hypot(self.height) / 2.0
    }

    pub fn manifest_counts(&self) -> BTreeMap<ElementCategory, usize> {
        category_counts(self.manifest.iter().copied())
    }

    /// Parse a canvas from a canonical layout document. Element geometry is
    /// optional; only the categories are used to build the manifest.
    pub fn from_json(text: &str) -> Result<Self, LayoutError> {
        let doc: LayoutDocument = serde_json::from_str(text)?;
        doc.canvas()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Layout {
    pub canvas_ref: Option<String>,
    pub elements: Vec<Element>,
}

impl Layout {
    /// Builds a layout with ids assigned in order.
    pub fn from_boxes(canvas_ref: Option<String>, items: impl IntoIterator<Item = (ElementCategory, BBox)>) -> Self {
        let elements = items
            .into_iter()
            .enumerate()
            .map(|(id, (category, bbox))| Element::new(id, category, bbox))
            .collect();
        Self { canvas_ref, elements }
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn category_counts(&self) -> BTreeMap<ElementCategory, usize> {
        category_counts(self.elements.iter().map(|e| e.category))
    }

    pub fn matches_manifest(&self, manifest: &[ElementCategory]) -> bool {
        self.category_counts() == category_counts(manifest.iter().copied())
    }

    pub fn boxes(&self) -> Vec<BBox> {
        self.elements.iter().map(|e| e.bbox).collect()
    }

    pub fn of_category(&self, category: ElementCategory) -> impl Iterator<Item = &Element> {
        self.elements.iter().filter(move |e| e.category == category)
    }

    pub fn from_json(text: &str) -> Result<Self, LayoutError> {
        let doc: LayoutDocument = serde_json::from_str(text)?;
        doc.layout()
    }
}

pub fn category_counts(cats: impl Iterator<Item = ElementCategory>) -> BTreeMap<ElementCategory, usize> {
    let mut counts = BTreeMap::new();
    for c in cats {
        *counts.entry(c).or_insert(0) += 1;
    }
    counts
}

// ---------------------------------------------------------------------------
// Canonical JSON document
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanvasSize {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliencyDoc {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementDoc {
    pub category: ElementCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
}

impl ElementDoc {
    fn bbox(&self) -> Option<BBox> {
        Some(BBox::new(self.x?, self.y?, self.width?, self.height?))
    }
}

/// `{"id"?, "canvas"?: {"width","height"}, "saliency": [...], "elements": [...]}`
///
/// The same document describes a canvas (element geometry omitted), a layout,
/// or a dataset record carrying both.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LayoutDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canvas: Option<CanvasSize>,
    #[serde(default)]
    pub saliency: Vec<SaliencyDoc>,
    #[serde(default)]
    pub elements: Vec<ElementDoc>,
}

impl LayoutDocument {
    pub fn canvas(&self) -> Result<Canvas, LayoutError> {
        let size = self.canvas.ok_or(LayoutError::MissingCanvas)?;
        let saliency = self
            .saliency
            .iter()
            .map(|s| SaliencyRegion {
                bbox: BBox::new(s.x, s.y, s.width, s.height),
                label: s.label.clone().unwrap_or_else(|| "salient".to_string()),
            })
            .collect();
        Canvas::new(
            self.id.clone().unwrap_or_default(),
            size.width,
            size.height,
            saliency,
            self.elements.iter().map(|e| e.category).collect(),
        )
    }

    /// The layout described by the document; every element must carry geometry.
    pub fn layout(&self) -> Result<Layout, LayoutError> {
        let mut elements = Vec::with_capacity(self.elements.len());
        for (id, e) in self.elements.iter().enumerate() {
            let bbox = e.bbox().ok_or(LayoutError::MissingGeometry(id))?;
            if !bbox.is_valid() {
                return Err(LayoutError::InvalidBox(bbox));
            }
            elements.push(Element::new(id, e.category, bbox));
        }
        Ok(Layout { canvas_ref: self.id.clone(), elements })
    }

    pub fn has_geometry(&self) -> bool {
        !self.elements.is_empty() && self.elements.iter().all(|e| e.bbox().is_some())
    }

    pub fn from_layout(layout: &Layout, canvas: Option<&Canvas>) -> Self {
        Self {
            id: layout.canvas_ref.clone(),
            canvas: canvas.map(|c| CanvasSize { width: c.width, height: c.height }),
            saliency: canvas.map(saliency_docs).unwrap_or_default(),
            elements: layout
                .elements
                .iter()
                .map(|e| ElementDoc {
                    category: e.category,
                    x: Some(round2(e.bbox.x)),
                    y: Some(round2(e.bbox.y)),
                    width: Some(round2(e.bbox.w)),
                    height: Some(round2(e.bbox.h)),
                })
                .collect(),
        }
    }

    pub fn from_canvas(canvas: &Canvas) -> Self {
        Self {
            id: (!canvas.id.is_empty()).then(|| canvas.id.clone()),
            canvas: Some(CanvasSize { width: canvas.width, height: canvas.height }),
            saliency: saliency_docs(canvas),
            elements: canvas
                .manifest
                .iter()
                .map(|&category| ElementDoc { category, x: None, y: None, width: None, height: None })
                .collect(),
        }
    }
}

fn saliency_docs(canvas: &Canvas) -> Vec<SaliencyDoc> {
    canvas
        .saliency
        .iter()
        .map(|s| SaliencyDoc {
            x: round2(s.bbox.x),
            y: round2(s.bbox.y),
            width: round2(s.bbox.w),
            height: round2(s.bbox.h),
            label: (s.label != "salient").then(|| s.label.clone()),
        })
        .collect()
}

/// Round to two decimals, the precision of every serialized coordinate.
pub fn round2(v: f64) -> f64 {
    let r = (v * 100.0).round() / 100.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}
