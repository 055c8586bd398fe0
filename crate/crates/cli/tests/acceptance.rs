//! Acceptance criteria AC-1..AC-9. Runs without the libtest harness so each
//! criterion prints exactly one PASS/FAIL line; exits non-zero on any failure.

#[path = "../../core/tests/support/raster.rs"]
mod raster;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Barrier};
use std::thread;
use std::time::{Duration, Instant};

use posterlay::geometry::{containment_ratio, intersection_area, jaccard, union_area};
use posterlay::grpo::{
    clipped_term, group_advantages, grpo_objective, kl_to_reference, AdvantageMode, GrpoConfig, TokenBatch, TokenLogProbs,
};
use posterlay::layout::SaliencyRegion;
use posterlay::metrics::{occlusion, report, MetricReport};
use posterlay::protocol::{format_response, parse_layout_json, parse_response, serialize_layout};
use posterlay::reward::{format_reward, hybrid_reward, FormatTier};
use posterlay::toy::{train, TrainConfig};
use posterlay::{demo, BBox, Canvas, ElementCategory, Layout, LayoutDocument, RewardConfig, RewardWeights};
use posterlay_service::{AppState, ServiceConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use raster::Raster;
use serde_json::{json, Value};

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn in_unit(v: f64) -> bool {
    v.is_finite() && (0.0..=1.0).contains(&v)
}

// ---------------------------------------------------------------------------
// AC-1 format tiers
// ---------------------------------------------------------------------------

fn ac1() -> Verdict {
    use ElementCategory::*;
    let canvas = demo::canvas("poster-portrait").unwrap();
    let good = [
        (Logo, BBox::new(10.0, 10.0, 60.0, 30.0)),
        (Text, BBox::new(40.0, 60.0, 300.0, 40.0)),
        (Text, BBox::new(40.0, 460.0, 300.0, 40.0)),
        (Underlay, BBox::new(30.0, 450.0, 320.0, 60.0)),
        (Text, BBox::new(60.0, 530.0, 200.0, 30.0)),
    ];
    let json_of = |items: &[(ElementCategory, BBox)]| serialize_layout(&Layout::from_boxes(None, items.iter().copied()));
    let wrap = |answer: &str| format!("<think>plan the poster</think>\n<answer>{answer}</answer>");
    let mut permuted = good;
    permuted.reverse();
    let mut swapped = good;
    swapped[0].0 = Embellishment;
    let mut extra = good.to_vec();
    extra.push((Text, BBox::new(5.0, 5.0, 5.0, 5.0)));

    let cases: Vec<(&str, String, f64)> = vec![
        ("think only", "<think>no answer here</think>".into(), 0.1),
        ("answer only", format!("<answer>{}</answer>", json_of(&good)), 0.1),
        ("empty response", String::new(), 0.1),
        ("broken json", wrap("{\"elements\": [ {\"category\": "), 0.2),
        ("prose answer", wrap("put the logo at the top left"), 0.2),
        ("non-numeric coordinate", wrap(r#"{"elements":[{"category":"text","x":"left","y":1,"width":2,"height":3}]}"#), 0.2),
        ("missing element", wrap(&json_of(&good[..4])), 0.5),
        ("wrong category", wrap(&json_of(&swapped)), 0.5),
        ("extra element", wrap(&json_of(&extra)), 0.5),
        ("exact match", wrap(&json_of(&good)), 1.0),
        ("permuted match", wrap(&json_of(&permuted)), 1.0),
        ("fenced match", wrap(&format!("```json\n{}\n```", json_of(&good))), 1.0),
    ];
    let mut per_tier = [0usize; 4];
    for (name, raw, expected) in &cases {
        let v = format_reward(&parse_response(raw), &canvas);
        ensure(v.score == *expected, || format!("{name}: got {} ({:?}, {}), expected {expected}", v.score, v.tier, v.detail))?;
        let idx = [FormatTier::MissingBlock, FormatTier::Unparsable, FormatTier::ElementMismatch, FormatTier::Valid]
            .iter()
            .position(|t| *t == v.tier)
            .unwrap();
        per_tier[idx] += 1;
    }
    ensure(per_tier == [3, 3, 3, 3], || format!("tier coverage {per_tier:?}"))?;
    Ok(format!("{} fixtures, 3 per tier, scores 0.1/0.2/0.5/1.0", cases.len()))
}

// ---------------------------------------------------------------------------
// AC-2 hybrid weights
// ---------------------------------------------------------------------------

/// Random canvas, a layout for it and a response carrying that layout,
/// possibly damaged.
fn random_case(rng: &mut ChaCha8Rng) -> (Canvas, Layout, String) {
    let (w, h) = (rng.random_range(50.0..1200.0), rng.random_range(50.0..1200.0));
    let n = rng.random_range(1..8);
    let items: Vec<(ElementCategory, BBox)> = (0..n)
        .map(|_| {
            let c = ElementCategory::ALL[rng.random_range(0..4)];
            let bw = rng.random_range(0.0..0.9) * w;
            let bh = rng.random_range(0.0..0.9) * h;
            (c, BBox::new(rng.random_range(-0.3..1.2) * w, rng.random_range(-0.3..1.2) * h, bw, bh))
        })
        .collect();
    let sal: Vec<SaliencyRegion> = (0..rng.random_range(0..3))
        .map(|_| SaliencyRegion::new(BBox::new(rng.random_range(0.0..w), rng.random_range(0.0..h), rng.random_range(0.0..w), rng.random_range(0.0..h))))
        .collect();
    let mut manifest: Vec<ElementCategory> = items.iter().map(|(c, _)| *c).collect();
    if rng.random_bool(0.2) {
        manifest.push(ElementCategory::Text);
    }
    let canvas = Canvas::new("fuzz", w, h, sal, manifest).unwrap();
    let layout = Layout::from_boxes(None, items);
    let mut raw = format_response("reasoning", &layout);
    match rng.random_range(0..10) {
        0 => raw.truncate(rng.random_range(0..raw.len())),
        1 => raw = raw.replace("<think>", ""),
        _ => {}
    }
    (canvas, layout, raw)
}

fn ac2() -> Verdict {
    let weights = RewardWeights::default();
    ensure((weights.lambda_f, weights.lambda_q, weights.lambda_u) == (0.1, 0.8, 0.1), || format!("defaults {weights:?}"))?;
    let cfg = RewardConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut triples = 0;
    while triples < 1000 {
        let (canvas, layout, raw) = random_case(&mut rng);
        // A reference of matching size keeps λ_u in play.
        let b = hybrid_reward(&parse_response(&raw), &canvas, Some(&layout), &cfg);
        let expected = 0.1 * b.format + 0.8 * b.quality + 0.1 * b.iou;
        worst = worst.max((b.hybrid - expected).abs());
        ensure(worst <= 1e-12, || format!("hybrid {} vs {expected} ({b:?})", b.hybrid))?;
        triples += 1;
    }
    Ok(format!("{triples} component triples, max |error| {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// AC-3 geometry vs rasterization
// ---------------------------------------------------------------------------

fn unit_box(rng: &mut ChaCha8Rng) -> BBox {
    let w = rng.random_range(0.1..0.6);
    let h = rng.random_range(0.1..0.6);
    BBox::new(rng.random_range(0.0..1.0 - w), rng.random_range(0.0..1.0 - h), w, h)
}

fn near(rng: &mut ChaCha8Rng, a: &BBox) -> BBox {
    let mut b = unit_box(rng);
    if rng.random_bool(0.7) {
        b.x = (a.x + rng.random_range(-0.2..0.2) * a.w).clamp(0.0, 1.0 - b.w);
        b.y = (a.y + rng.random_range(-0.2..0.2) * a.h).clamp(0.0, 1.0 - b.h);
    }
    b
}

fn ac3() -> Verdict {
    const N: usize = 200;
    let unit = Raster::new(1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = [0.0f64; 4];
    for _ in 0..N {
        let a = unit_box(&mut rng);
        let b = near(&mut rng, &a);
        worst[0] = worst[0].max((jaccard(&a, &b) - unit.jaccard(&a, &b)).abs());
        worst[1] = worst[1].max((intersection_area(&a, &b) - unit.intersection_area(&a, &b)).abs());
        worst[2] = worst[2].max((containment_ratio(&a, &b) - unit.containment_ratio(&a, &b)).abs());
    }
    for _ in 0..N {
        let (w, h) = (rng.random_range(200.0..800.0), rng.random_range(200.0..800.0));
        let scale = |b: BBox| BBox::new(b.x * w, b.y * h, b.w * w, b.h * h);
        let saliency: Vec<BBox> = (0..rng.random_range(1..4)).map(|_| scale(unit_box(&mut rng))).collect();
        let elements: Vec<BBox> = (0..rng.random_range(1..6)).map(|_| scale(unit_box(&mut rng))).collect();
        let canvas = Canvas::new("o", w, h, saliency.iter().copied().map(SaliencyRegion::new).collect(), vec![]).unwrap();
        let layout = Layout::from_boxes(None, elements.iter().map(|b| (ElementCategory::Text, *b)));
        let r = Raster::new(w, h);
        let union_err = (union_area(&saliency) - r.area(&r.paint(&saliency))).abs() / (w * h);
        let occ_err = (occlusion(&layout, &canvas) - r.occlusion(&elements, &saliency)).abs();
        worst[3] = worst[3].max(union_err.max(occ_err));
    }
    let names = ["jaccard", "intersection", "containment", "occlusion/union"];
    for (name, e) in names.iter().zip(worst) {
        ensure(e <= 0.01, || format!("{name}: max error {e:.4} > 0.01"))?;
    }
    Ok(format!(
        "{N} instances each on a 1024² grid; max errors {}",
        names.iter().zip(worst).map(|(n, e)| format!("{n} {e:.4}")).collect::<Vec<_>>().join(", ")
    ))
}

// ---------------------------------------------------------------------------
// AC-4 breakdown bounds
// ---------------------------------------------------------------------------

fn ac4() -> Verdict {
    let cfg = RewardConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = Vec::new();
    let mut tiers = [0usize; 4];
    for i in 0..10_000 {
        let (canvas, layout, raw) = random_case(&mut rng);
        let (_, other, _) = random_case(&mut rng);
        let reference = match i % 3 {
            0 => None,
            1 => Some(&layout),
            _ => Some(&other),
        };
        let b = hybrid_reward(&parse_response(&raw), &canvas, reference, &cfg);
        tiers[b.format_tier as usize] += 1;
        for (name, v) in b.numeric_fields() {
            if !in_unit(v) {
                violations.push(format!("case {i}: {name} = {v}"));
            }
        }
    }
    ensure(violations.is_empty(), || format!("{} violations, first: {}", violations.len(), violations[0]))?;
    Ok(format!("10000 cases, 0 violations; tiers missing/unparsable/mismatch/valid = {tiers:?}"))
}

// ---------------------------------------------------------------------------
// AC-5 learning demonstration
// ---------------------------------------------------------------------------

fn ac5() -> Verdict {
    let cfg = TrainConfig::default();
    ensure(cfg.seed == 42 && cfg.group_size == 8 && cfg.iterations == 500, || format!("defaults drifted: {cfg:?}"))?;
    let mut lines = Vec::new();
    let mut failed = None;
    for canvas in demo::canvases() {
        ensure(canvas.manifest.len() == 5, || format!("{} has {} elements", canvas.id, canvas.manifest.len()))?;
        let trace = train(&canvas, &RewardConfig::default(), &cfg).map_err(|e| e.to_string())?;
        let first = trace.steps[0].mean_reward;
        let last = trace.tail_mean(10);
        let rel = (last - first) / first;
        lines.push(format!("{} {first:.3}→{last:.3} ({:+.1}%)", canvas.id, 100.0 * rel));
        if rel < 0.30 && failed.is_none() {
            failed = Some(canvas.id.clone());
        }
    }
    match failed {
        Some(id) => Err(format!("{id} below +30%: {}", lines.join("; "))),
        None => Ok(lines.join("; ")),
    }
}

// ---------------------------------------------------------------------------
// AC-6 GRPO identities
// ---------------------------------------------------------------------------

fn random_batch(rng: &mut ChaCha8Rng, g: usize, same: bool) -> TokenBatch {
    TokenBatch::new(
        (0..g)
            .map(|_| {
                (0..rng.random_range(1..16))
                    .map(|_| {
                        let new = rng.random_range(-12.0..0.0);
                        if same {
                            TokenLogProbs { new, old: new, reference: new }
                        } else {
                            TokenLogProbs { new, old: rng.random_range(-12.0..0.0), reference: rng.random_range(-12.0..0.0) }
                        }
                    })
                    .collect()
            })
            .collect(),
    )
    .unwrap()
}

fn ac6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_sum: f64 = 0.0;
    for mode in [AdvantageMode::MeanOnly, AdvantageMode::MeanStd] {
        for _ in 0..1000 {
            let g = rng.random_range(2..33);
            let rewards: Vec<f64> = (0..g).map(|_| if rng.random_bool(0.2) { 0.5 } else { rng.random_range(0.0..1.0) }).collect();
            let adv = group_advantages(&rewards, &GrpoConfig::with_mode(mode)).map_err(|e| e.to_string())?;
            worst_sum = worst_sum.max(adv.advantages.iter().sum::<f64>().abs());
        }
    }
    ensure(worst_sum <= 1e-9, || format!("(a) advantage sum {worst_sum:e}"))?;

    let mut min_kl = f64::INFINITY;
    for _ in 0..10_000 {
        let g = rng.random_range(1..6);
        min_kl = min_kl.min(kl_to_reference(&random_batch(&mut rng, g, false)).map_err(|e| e.to_string())?);
    }
    ensure(min_kl >= 0.0, || format!("(b) negative KL {min_kl}"))?;

    let mut worst_obj: f64 = 0.0;
    let cfg = GrpoConfig::with_mode(AdvantageMode::MeanOnly);
    for _ in 0..1000 {
        let g = rng.random_range(2..9);
        let batch = random_batch(&mut rng, g, true);
        let rewards: Vec<f64> = (0..g).map(|_| rng.random_range(0.0..1.0)).collect();
        worst_obj = worst_obj.max(grpo_objective(&batch, &rewards, &cfg).map_err(|e| e.to_string())?.objective.abs());
    }
    ensure(worst_obj <= 1e-9, || format!("(c) objective {worst_obj:e}"))?;

    let cases = [(1.5, 1.0, 1.2), (0.5, -1.0, -0.8), (1.0, 0.7, 0.7), (1.0, -2.5, -2.5)];
    for (ratio, adv, expected) in cases {
        let got = clipped_term(ratio, adv, 0.2);
        ensure(got == expected, || format!("(d) clip({ratio}, {adv}) = {got}, expected {expected}"))?;
    }
    Ok(format!("|Σadv| ≤ {worst_sum:.1e}; min KL {min_kl:.2e}; |objective| ≤ {worst_obj:.1e}; clip cases exact"))
}

// ---------------------------------------------------------------------------
// AC-7 metrics pattern
// ---------------------------------------------------------------------------

fn metrics_of(records: &[posterlay::dataset::DatasetRecord]) -> MetricReport {
    let items: Vec<(Layout, Canvas)> = records.iter().map(|r| (r.reference.clone().unwrap(), r.canvas.clone())).collect();
    report(&items).unwrap()
}

fn ac7() -> Verdict {
    let clean = demo::bundled_clean_corpus();
    ensure(clean.len() == 50, || format!("bundled corpus has {} layouts", clean.len()))?;
    let corrupted: Vec<_> = clean.iter().map(demo::corrupt).collect();
    let (c, d) = (metrics_of(&clean), metrics_of(&corrupted));
    ensure(c.ove <= 0.01 && c.und == 1.0 && c.occ <= 0.05, || format!("clean Ove {:.4} Und {:.4} Occ {:.4}", c.ove, c.und, c.occ))?;
    ensure(d.ove > c.ove && d.und < c.und && d.occ > c.occ, || {
        format!("corrupted not worse: Ove {:.4} Und {:.4} Occ {:.4}", d.ove, d.und, d.occ)
    })?;
    Ok(format!(
        "clean Ove {:.4} / Und {:.4} / Occ {:.4}; corrupted {:.4} / {:.4} / {:.4}",
        c.ove, c.und, c.occ, d.ove, d.und, d.occ
    ))
}

// ---------------------------------------------------------------------------
// AC-8 protocol round trip and fuzz
// ---------------------------------------------------------------------------

fn mutate(rng: &mut ChaCha8Rng, seed: &[u8]) -> Vec<u8> {
    const TOKENS: [&[u8]; 8] = [b"<think>", b"</think>", b"<answer>", b"</answer>", b"{", b"]", b"\"", b"\xf0\x9f"];
    let mut out = seed.to_vec();
    for _ in 0..rng.random_range(1..8) {
        match rng.random_range(0..4) {
            0 if !out.is_empty() => {
                let i = rng.random_range(0..out.len());
                out[i] = rng.random();
            }
            1 if !out.is_empty() => {
                let i = rng.random_range(0..out.len());
                let j = rng.random_range(i..=out.len().min(i + 16));
                out.drain(i..j);
            }
            2 => {
                let i = rng.random_range(0..=out.len());
                let t = TOKENS[rng.random_range(0..TOKENS.len())];
                out.splice(i..i, t.iter().copied());
            }
            _ => out.extend((0..rng.random_range(0..8)).map(|_| rng.random::<u8>())),
        }
    }
    out
}

fn ac8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let (w, h) = (rng.random_range(100.0..2000.0), rng.random_range(100.0..2000.0));
        let items: Vec<(ElementCategory, BBox)> = (0..rng.random_range(1..10))
            .map(|_| {
                let c = ElementCategory::ALL[rng.random_range(0..4)];
                (c, BBox::new(rng.random_range(0.0..w), rng.random_range(0.0..h), rng.random_range(0.0..w), rng.random_range(0.0..h)))
            })
            .collect();
        let canvas = Canvas::new("rt", w, h, vec![], items.iter().map(|(c, _)| *c).collect()).unwrap();
        let layout = Layout::from_boxes(None, items);
        let parsed = parse_layout_json(&serialize_layout(&layout), &canvas).map_err(|e| format!("layout {i}: {}", e.detail()))?;
        ensure(parsed.len() == layout.len(), || format!("layout {i}: element count changed"))?;
        for (p, q) in parsed.elements.iter().zip(&layout.elements) {
            ensure(p.category == q.category, || format!("layout {i}: category changed"))?;
            for (u, v) in [(p.bbox.x, q.bbox.x), (p.bbox.y, q.bbox.y), (p.bbox.w, q.bbox.w), (p.bbox.h, q.bbox.h)] {
                worst = worst.max((u - v).abs());
            }
        }
    }
    ensure(worst <= 0.01, || format!("round-trip error {worst}"))?;

    let canvas = demo::canvas("poster-portrait").unwrap();
    let valid = format_response(
        "x",
        &Layout::from_boxes(None, canvas.manifest.iter().map(|c| (*c, BBox::new(10.0, 10.0, 50.0, 20.0)))),
    );
    let mut panics = 0;
    for i in 0..100_000 {
        let bytes: Vec<u8> = if i % 2 == 0 {
            mutate(&mut rng, valid.as_bytes())
        } else {
            (0..rng.random_range(0..200)).map(|_| rng.random()).collect()
        };
        let raw = String::from_utf8_lossy(&bytes);
        let ok = catch_unwind(AssertUnwindSafe(|| {
            let r = parse_response(&raw);
            in_unit(format_reward(&r, &canvas).score)
        }));
        if !matches!(ok, Ok(true)) {
            panics += 1;
        }
    }
    ensure(panics == 0, || format!("{panics} fuzz inputs failed"))?;
    Ok(format!("1000 round trips, max coordinate error {worst:.4}; 100000 fuzzed inputs, 0 failures"))
}

// ---------------------------------------------------------------------------
// AC-9 service determinism
// ---------------------------------------------------------------------------

fn mixed_requests() -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let canvases = demo::canvases();
    (0..64)
        .map(|i| {
            let canvas = &canvases[i % canvases.len()];
            let n = 1 + i % 6;
            let candidates: Vec<String> = (0..n)
                .map(|k| {
                    let layout = Layout::from_boxes(
                        None,
                        canvas.manifest.iter().map(|c| {
                            (*c, BBox::new(rng.random_range(0.0..canvas.width * 0.7), rng.random_range(0.0..canvas.height * 0.8), rng.random_range(20.0..150.0), rng.random_range(10.0..80.0)))
                        }),
                    );
                    let raw = format_response("layout plan", &layout);
                    match (i + k) % 5 {
                        0 => raw[..raw.len() / 2].to_string(),
                        1 => raw.replace("<think>", ""),
                        _ => raw,
                    }
                })
                .collect();
            let mut body = json!({"canvas": LayoutDocument::from_canvas(canvas), "candidates": candidates});
            if i % 4 == 1 {
                let reference = posterlay::backends::RandomBackend::sample_layout(&mut rng, canvas);
                body["reference"] = serde_json::to_value(LayoutDocument::from_layout(&reference, None)).unwrap();
            }
            if i % 4 == 2 {
                body["advantage_mode"] = json!("mean_only");
                body["weights"] = json!({"lambda_f": 0.2, "lambda_q": 0.6, "lambda_u": 0.2});
            }
            if i % 16 == 15 {
                body["candidates"] = json!([]);
            }
            body.to_string()
        })
        .collect()
}

fn post(agent: &ureq::Agent, url: &str, body: &str) -> Result<(u16, String), String> {
    let mut resp = agent
        .post(url)
        .header("Content-Type", "application/json")
        .send(body)
        .map_err(|e| e.to_string())?;
    let status = resp.status().as_u16();
    Ok((status, resp.body_mut().read_to_string().map_err(|e| e.to_string())?))
}

fn ac9() -> Verdict {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let state = AppState::new(ServiceConfig { request_log: false, max_concurrent: 8, ..Default::default() }).map_err(|e| e.to_string())?;
    let listener = runtime.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).map_err(|e| e.to_string())?;
    let url = format!("http://{}/v1/reward", listener.local_addr().unwrap());
    let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
    let server = runtime.spawn(posterlay_service::serve(listener, state, async {
        let _ = stop_rx.await;
    }));

    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(20)))
        .build()
        .into();
    let requests = mixed_requests();
    let serial: Vec<(u16, String)> = requests.iter().map(|b| post(&agent, &url, b)).collect::<Result<_, _>>()?;

    let barrier = Arc::new(Barrier::new(requests.len()));
    let concurrent: Vec<Result<(u16, String), String>> = thread::scope(|s| {
        let handles: Vec<_> = requests
            .iter()
            .map(|b| {
                let (barrier, agent, url) = (barrier.clone(), agent.clone(), url.clone());
                s.spawn(move || {
                    barrier.wait();
                    post(&agent, &url, b)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let _ = stop_tx.send(());
    let _ = runtime.block_on(server);

    let statuses: Vec<u16> = serial.iter().map(|(s, _)| *s).collect();
    let mut mismatches = 0;
    for (i, (c, s)) in concurrent.iter().zip(&serial).enumerate() {
        let c = c.as_ref().map_err(|e| format!("request {i}: {e}"))?;
        if c != s {
            mismatches += 1;
        }
    }
    ensure(mismatches == 0, || format!("{mismatches} of 64 responses differ from serial execution"))?;
    let ok = statuses.iter().filter(|s| **s == 200).count();
    let with_adv = serial.iter().filter(|(_, b)| serde_json::from_str::<Value>(b).map(|v| v.get("advantages").is_some()).unwrap_or(false)).count();
    Ok(format!("64 concurrent requests byte-identical to serial ({ok} ok, {} rejected, {with_adv} with advantages)", 64 - ok))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict, Duration); 9] = [
        ("AC-1 format tiers", ac1, Duration::from_secs(1)),
        ("AC-2 hybrid weights", ac2, Duration::from_secs(1)),
        ("AC-3 geometry oracle", ac3, Duration::from_secs(30)),
        ("AC-4 reward bounds fuzz", ac4, Duration::from_secs(60)),
        ("AC-5 learning demonstration", ac5, Duration::from_secs(60)),
        ("AC-6 GRPO identities", ac6, Duration::from_secs(10)),
        ("AC-7 metrics pattern", ac7, Duration::from_secs(10)),
        ("AC-8 protocol round trip", ac8, Duration::from_secs(30)),
        ("AC-9 service determinism", ac9, Duration::from_secs(30)),
    ];
    let mut failures = 0;
    for (name, run, budget) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => Err(format!("over time budget {budget:?}: {detail}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {name} [{:.2}s] {detail}", elapsed.as_secs_f64()),
            Err(reason) => {
                failures += 1;
                println!("FAIL {name} [{:.2}s] {reason}", elapsed.as_secs_f64());
            }
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 9 acceptance criteria passed");
}
