//! Python bindings. Canvases and layouts cross the boundary as canonical
//! layout-document JSON strings; structured results come back as dicts.

use posterlay::grpo::{self, AdvantageMode, GrpoConfig};
use posterlay::protocol;
use posterlay::reward::score_text;
use posterlay::toy::{self, TrainConfig};
use posterlay::{demo, metrics, render, Canvas, Layout, LayoutDocument, RewardConfig};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pythonize::{depythonize, pythonize};

fn invalid(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn canvas_of(json: &str) -> PyResult<Canvas> {
    Canvas::from_json(json).map_err(invalid)
}

fn layout_of(json: &str) -> PyResult<Layout> {
    Layout::from_json(json).map_err(invalid)
}

fn reward_config(json: Option<&str>) -> PyResult<RewardConfig> {
    json.map_or_else(|| Ok(RewardConfig::default()), |j| RewardConfig::from_json(j).map_err(invalid))
}

/// Split a raw model response into its think and answer blocks.
#[pyfunction]
fn parse_response<'py>(py: Python<'py>, raw: &str) -> PyResult<Bound<'py, PyAny>> {
    Ok(pythonize(py, &protocol::parse_response(raw))?)
}

/// Parse an answer body into a layout document dict, or raise ValueError.
#[pyfunction]
fn parse_layout<'py>(py: Python<'py>, answer: &str, canvas: &str) -> PyResult<Bound<'py, PyAny>> {
    let canvas = canvas_of(canvas)?;
    let layout = protocol::parse_layout_json(answer, &canvas).map_err(|e| invalid(e.detail()))?;
    Ok(pythonize(py, &LayoutDocument::from_layout(&layout, None))?)
}

/// Full reward breakdown for one response.
#[pyfunction]
#[pyo3(signature = (canvas, response, reference=None, config=None))]
fn score<'py>(
    py: Python<'py>,
    canvas: &str,
    response: &str,
    reference: Option<&str>,
    config: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let canvas = canvas_of(canvas)?;
    let reference = reference.map(layout_of).transpose()?;
    let config = reward_config(config)?;
    Ok(pythonize(py, &score_text(response, &canvas, reference.as_ref(), &config))?)
}

/// Ove/Und/Occ over `(canvas, layout)` pairs.
#[pyfunction]
#[pyo3(signature = (items, per_layout=false))]
fn layout_metrics<'py>(py: Python<'py>, items: Vec<(String, String)>, per_layout: bool) -> PyResult<Bound<'py, PyAny>> {
    let pairs = items
        .iter()
        .map(|(c, l)| Ok((layout_of(l)?, canvas_of(c)?)))
        .collect::<PyResult<Vec<_>>>()?;
    let mut report = metrics::report(&pairs).map_err(invalid)?;
    if !per_layout {
        report.per_layout = None;
    }
    Ok(pythonize(py, &report)?)
}

/// Group-relative advantages; `mode` is "mean_std" or "mean_only".
#[pyfunction]
#[pyo3(signature = (rewards, mode="mean_std"))]
fn group_advantages(rewards: Vec<f64>, mode: &str) -> PyResult<Vec<f64>> {
    let mode: AdvantageMode = serde_json::from_value(serde_json::Value::from(mode)).map_err(invalid)?;
    Ok(grpo::group_advantages(&rewards, &GrpoConfig::with_mode(mode)).map_err(invalid)?.advantages)
}

/// Train the toy Gaussian policy; `config` takes the same keys as the CLI's
/// training config (iterations, group_size, learning_rate, seed, ...).
#[pyfunction]
#[pyo3(signature = (canvas, config=None))]
fn train_toy<'py>(py: Python<'py>, canvas: &str, config: Option<Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyAny>> {
    let canvas = canvas_of(canvas)?;
    let cfg: TrainConfig = match config {
        Some(c) => depythonize(&c)?,
        None => TrainConfig::default(),
    };
    let trace = py
        .detach(|| toy::train(&canvas, &RewardConfig::default(), &cfg))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let summary = serde_json::json!({
        "steps": trace.steps,
        "initial_mean": trace.steps[0].mean_reward,
        "tail_mean": trace.tail_mean(10),
        "final_layout": LayoutDocument::from_layout(&trace.final_layout(), None),
    });
    Ok(pythonize(py, &summary)?)
}

/// Deterministic SVG preview of a layout.
#[pyfunction]
#[pyo3(signature = (layout, canvas=None))]
fn render_svg(layout: &str, canvas: Option<&str>) -> PyResult<String> {
    let canvas = canvas.map(canvas_of).transpose()?;
    Ok(render::render_svg(&layout_of(layout)?, canvas.as_ref()))
}

/// JSON of a bundled demo canvas.
#[pyfunction]
fn demo_canvas(name: &str) -> PyResult<&'static str> {
    demo::canvas_json(name).ok_or_else(|| invalid(format!("no bundled canvas named {name:?}")))
}

#[pymodule]
#[pyo3(name = "posterlay")]
fn posterlay_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(parse_response, m)?)?;
    m.add_function(wrap_pyfunction!(parse_layout, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(layout_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(group_advantages, m)?)?;
    m.add_function(wrap_pyfunction!(train_toy, m)?)?;
    m.add_function(wrap_pyfunction!(render_svg, m)?)?;
    m.add_function(wrap_pyfunction!(demo_canvas, m)?)?;
    Ok(())
}
