//! Text contract between a canvas and a layout agent.
//!
//! The agent receives a prompt carrying the canvas, its saliency boxes and a
//! layout skeleton whose geometry fields are the literal token `[MASK]`. It
//! answers with a `<think>` block followed by an `<answer>` block holding a
//! JSON layout.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::LayoutError;
use crate::layout::{Canvas, Element, ElementCategory, Layout, LayoutDocument};

pub const MASK_TOKEN: &str = "[MASK]";

const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";
const ANSWER_OPEN: &str = "<answer>";
const ANSWER_CLOSE: &str = "</answer>";

/// Coordinates beyond this multiple of the larger canvas side are rejected.
pub const PLAUSIBLE_EXTENT: f64 = 2.0;

pub const SYSTEM_INSTRUCTIONS: &str = "You are a graphic layout designer. Place every requested element on the \
canvas so that elements do not collide with each other or with the salient regions, stay inside the canvas, \
are well aligned and evenly spaced, and every underlay sits behind exactly one text element. \
First reason step by step inside <think></think>. Then output the completed layout JSON inside \
<answer></answer>, with absolute pixel values for x, y, width and height of every element, keeping the \
element order and categories unchanged.";

pub const DEFAULT_TEMPLATE: &str = "Canvas and salient regions:\n{canvas_json}\n\n\
Elements to place: {element_list}\n\n\
Fill in the masked geometry of this layout:\n{masked_layout}\n";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CandidateResponse {
    pub raw: String,
    pub think: Option<String>,
    pub answer: Option<String>,
    /// Non-fatal anomalies such as duplicated blocks.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl CandidateResponse {
    pub fn has_both_blocks(&self) -> bool {
        self.think.is_some() && self.answer.is_some()
    }
}

/// Byte range of the body of the first `open ... close` pair at or after `from`.
fn find_block(raw: &str, open: &str, close: &str, from: usize) -> Option<(usize, usize)> {
    let start = raw.get(from..)?.find(open)? + from + open.len();
    let end = raw[start..].find(close)? + start;
    Some((start, end))
}

/// Extract the first well-formed `<think>` and `<answer>` blocks. Never fails;
/// a missing or unterminated block leaves the field empty.
pub fn parse_response(raw: &str) -> CandidateResponse {
    let mut warnings = Vec::new();
    let think = find_block(raw, THINK_OPEN, THINK_CLOSE, 0);
    // Prefer an answer after the reasoning so tags quoted inside it are skipped.
    let answer = think
        .and_then(|(_, end)| find_block(raw, ANSWER_OPEN, ANSWER_CLOSE, end + THINK_CLOSE.len()))
        .or_else(|| find_block(raw, ANSWER_OPEN, ANSWER_CLOSE, 0));

    for (name, open) in [("think", THINK_OPEN), ("answer", ANSWER_OPEN)] {
        let n = raw.matches(open).count();
        if n > 1 {
            warnings.push(format!("{n} `{name}` blocks found; using the first well-formed pair"));
        }
    }

    CandidateResponse {
        raw: raw.to_string(),
        think: think.map(|(s, e)| raw[s..e].to_string()),
        answer: answer.map(|(s, e)| raw[s..e].to_string()),
        warnings,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayoutParseFailure {
    /// Not JSON, no element list, or unusable geometry.
    Unparsable(String),
    /// Well-formed geometry whose categories disagree with the manifest.
    /// `layout` is kept when every category was recognized.
    ElementMismatch { detail: String, layout: Option<Layout> },
}

impl LayoutParseFailure {
    pub fn detail(&self) -> &str {
        match self {
            Self::Unparsable(d) => d,
            Self::ElementMismatch { detail, .. } => detail,
        }
    }
}

fn strip_code_fence(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    let rest = rest.trim_start_matches(|c: char| c.is_ascii_alphabetic());
    rest.strip_suffix("```").unwrap_or(rest).trim()
}

fn number_field(obj: &serde_json::Map<String, Value>, keys: &[&str], idx: usize) -> Result<f64, String> {
    let (key, value) = keys
        .iter()
        .find_map(|k| obj.get(*k).map(|v| (*k, v)))
        .ok_or_else(|| format!("element {idx} has no `{}`", keys[0]))?;
    let parsed = match value {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok(),
        _ => None,
    };
    match parsed {
        Some(v) if v.is_finite() => Ok(v),
        _ => Err(format!("element {idx} field `{key}` is not a number: {value}")),
    }
}

/// Parse an answer body into a layout for `canvas`, checking geometry
/// plausibility and the category multiset against the canvas manifest.
pub fn parse_layout_json(answer: &str, canvas: &Canvas) -> Result<Layout, LayoutParseFailure> {
    let body = strip_code_fence(answer);
    let value: Value = serde_json::from_str(body).map_err(|e| LayoutParseFailure::Unparsable(format!("invalid JSON: {e}")))?;

    let items = match &value {
        Value::Array(items) => items,
        Value::Object(obj) => match obj.get("elements").or_else(|| obj.get("layout")) {
            Some(Value::Array(items)) => items,
            _ => return Err(LayoutParseFailure::Unparsable("no `elements` array".into())),
        },
        _ => return Err(LayoutParseFailure::Unparsable("expected a JSON object or array".into())),
    };

    let limit = PLAUSIBLE_EXTENT * canvas.width.max(canvas.height);
    let mut geometry = Vec::with_capacity(items.len());
    let mut categories = Vec::with_capacity(items.len());
    for (idx, item) in items.iter().enumerate() {
        let obj = item
            .as_object()
            .ok_or_else(|| LayoutParseFailure::Unparsable(format!("element {idx} is not an object")))?;
        let x = number_field(obj, &["x"], idx).map_err(LayoutParseFailure::Unparsable)?;
        let y = number_field(obj, &["y"], idx).map_err(LayoutParseFailure::Unparsable)?;
        let w = number_field(obj, &["width", "w"], idx).map_err(LayoutParseFailure::Unparsable)?;
        let h = number_field(obj, &["height", "h"], idx).map_err(LayoutParseFailure::Unparsable)?;
        if w < 0.0 || h < 0.0 {
            return Err(LayoutParseFailure::Unparsable(format!("element {idx} has negative size")));
        }
        if [x, y, w, h, x + w, y + h].iter().any(|v| v.abs() > limit) {
            return Err(LayoutParseFailure::Unparsable(format!(
                "element {idx} geometry outside the plausible range ±{limit}"
            )));
        }
        geometry.push(crate::geometry::BBox::new(x, y, w, h));
        categories.push(["category", "type", "class"].iter().find_map(|k| obj.get(*k)).cloned());
    }

    let mut elements = Vec::with_capacity(items.len());
    for (idx, (bbox, cat)) in geometry.into_iter().zip(categories).enumerate() {
        let category = match cat {
            Some(Value::String(s)) => s.parse::<ElementCategory>().map_err(|e: LayoutError| e.to_string()),
            Some(other) => Err(format!("element {idx} category is not a string: {other}")),
            None => Err(format!("element {idx} has no category")),
        }
        .map_err(|detail| LayoutParseFailure::ElementMismatch { detail, layout: None })?;
        elements.push(Element::new(idx, category, bbox));
    }

    let layout = Layout { canvas_ref: (!canvas.id.is_empty()).then(|| canvas.id.clone()), elements };
    if !layout.matches_manifest(&canvas.manifest) {
        let detail = format!(
            "element categories {} do not match the required {}",
            describe_counts(&layout.category_counts()),
            describe_counts(&canvas.manifest_counts()),
        );
        return Err(LayoutParseFailure::ElementMismatch { detail, layout: Some(layout) });
    }
    Ok(layout)
}

fn describe_counts(counts: &BTreeMap<ElementCategory, usize>) -> String {
    let parts: Vec<String> = counts.iter().map(|(c, n)| format!("{n}x{c}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Canonical JSON for a layout: fixed key order, two-decimal coordinates.
pub fn serialize_layout(layout: &Layout) -> String {
    serde_json::to_string(&LayoutDocument::from_layout(layout, None)).expect("layout documents always serialize")
}

/// Canonical JSON including the canvas size and saliency boxes.
pub fn serialize_layout_with_canvas(layout: &Layout, canvas: &Canvas) -> String {
    serde_json::to_string(&LayoutDocument::from_layout(layout, Some(canvas)))
        .expect("layout documents always serialize")
}

fn masked_skeleton<'a>(categories: impl Iterator<Item = &'a ElementCategory>) -> String {
    let mut out = String::from("{\"elements\":[");
    for (i, c) in categories.enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "\n  {{\"category\":\"{c}\",\"x\":{m},\"y\":{m},\"width\":{m},\"height\":{m}}}",
            m = MASK_TOKEN
        );
    }
    out.push_str("\n]}");
    out
}

/// The layout with every geometry value replaced by `[MASK]`.
pub fn mask_layout(layout: &Layout) -> String {
    masked_skeleton(layout.elements.iter().map(|e| &e.category))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskedLayoutPrompt {
    pub canvas: Canvas,
    pub masked_json: String,
    /// System message.
    pub instructions: String,
    /// User message: the template with its placeholders filled.
    pub user: String,
}

/// Render the prompt for `canvas`. `template` may use the placeholders
/// `{canvas_json}`, `{masked_layout}` and `{element_list}`.
pub fn build_prompt(canvas: &Canvas, template: &str) -> Result<MaskedLayoutPrompt, LayoutError> {
    if canvas.manifest.is_empty() {
        return Err(LayoutError::EmptyManifest);
    }
    let masked_json = masked_skeleton(canvas.manifest.iter());

    let mut canvas_doc = LayoutDocument::from_canvas(canvas);
    canvas_doc.elements.clear();
    canvas_doc.id = None;
    let canvas_json = serde_json::to_string(&canvas_doc).expect("canvas documents always serialize");

    let element_list = canvas.manifest.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(", ");
    let user = template
        .replace("{canvas_json}", &canvas_json)
        .replace("{element_list}", &element_list)
        .replace("{masked_layout}", &masked_json);

    Ok(MaskedLayoutPrompt {
        canvas: canvas.clone(),
        masked_json,
        instructions: SYSTEM_INSTRUCTIONS.to_string(),
        user,
    })
}

/// Wrap a layout in a well-formed response. Used by the synthetic backends.
pub fn format_response(think: &str, layout: &Layout) -> String {
    format!("<think>{think}</think>\n<answer>{}</answer>", serialize_layout(layout))
}
