//! `posterlay` command-line front end.
//!
//! Exit codes: 0 ok, 2 bad input or flags, 3 bad reward config, 4 dataset /
//! prediction id mismatch, 5 policy backend unreachable, 6 training diverged,
//! 7 cannot bind the service port.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use posterlay::backends::{build_backend, evaluate_record, BackendKind, PolicyBackendConfig, RolloutLogRecord};
use posterlay::dataset::{ingest_dataset, to_ndjson, DatasetFormat};
use posterlay::grpo::{grpo_objective, AdvantageMode, GrpoConfig, TokenBatch};
use posterlay::metrics::{report_with, OverlapMeasure};
use posterlay::protocol::DEFAULT_TEMPLATE;
use posterlay::render::render_svg;
use posterlay::reward::score_text;
use posterlay::toy::{train_with, SigmaSchedule, ToyPolicy, TrainConfig};
use posterlay::{demo, Canvas, Layout, LayoutDocument, RewardConfig, RolloutError, TrainError};
use posterlay_service::{AppState, ServiceConfig, ServiceError};

const BAD_INPUT: u8 = 2;
const BAD_CONFIG: u8 = 3;
const ID_MISMATCH: u8 = 4;
const BACKEND_DOWN: u8 = 5;
const DIVERGED: u8 = 6;
const BIND_FAILED: u8 = 7;

#[derive(Parser)]
#[command(name = "posterlay", version, about = "Layout reward scoring, metrics, rollouts and a toy GRPO trainer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one model response against a canvas; prints the reward breakdown.
    Reward(RewardArgs),
    /// Overlay / underlay-effectiveness / occlusion over a prediction set.
    Bench(BenchArgs),
    /// Sample candidate groups from a policy backend and score them.
    Rollout(RolloutArgs),
    /// Train the Gaussian toy policy on one canvas.
    TrainToy(TrainArgs),
    /// Draw a layout as SVG.
    Render(RenderArgs),
    /// Run the HTTP reward service.
    Serve(ServeArgs),
    /// Audit a token batch: advantages, clipped surrogate, KL, objective.
    Objective(ObjectiveArgs),
    /// Emit bundled demo canvases and synthetic corpora.
    #[command(subcommand)]
    Demo(DemoCommand),
}

#[derive(Args)]
struct RewardArgs {
    canvas: PathBuf,
    /// Response text; `-` reads stdin.
    response: PathBuf,
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Overlap {
    Jaccard,
    Min,
}

#[derive(Args)]
struct BenchArgs {
    dataset: PathBuf,
    /// NDJSON layout documents, each with the `id` of its dataset record.
    predictions: PathBuf,
    #[arg(long, default_value = "canonical", value_parser = parse_format)]
    format: DatasetFormat,
    #[arg(long, value_enum, default_value = "jaccard")]
    overlap: Overlap,
    #[arg(long, default_value = "predictions")]
    label: String,
    /// Also write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct RolloutArgs {
    dataset: PathBuf,
    #[arg(long, value_parser = parse_backend)]
    backend: BackendKind,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    group_size: u64,
    /// Random backend seed; generated and printed when absent.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    /// Per-request deadline, seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    #[arg(long, default_value_t = 3)]
    max_retries: u32,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    parallelism: u64,
    #[arg(long, default_value = posterlay::backends::DEFAULT_API_KEY_ENV)]
    api_key_env: String,
    /// Rollout log to replay (replay backend).
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Prompt template with {canvas_json}, {element_list}, {masked_layout}.
    #[arg(long)]
    template: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "mean-std", value_parser = parse_mode)]
    advantage_mode: AdvantageMode,
    #[arg(long, default_value = "canonical", value_parser = parse_format)]
    format: DatasetFormat,
    /// Rollout log output (one line per candidate).
    #[arg(long, default_value = "rollouts.ndjson")]
    log: PathBuf,
    /// Group evaluations output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    canvas: PathBuf,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    iterations: u64,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(2..))]
    group_size: u64,
    /// Generated and printed when absent.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Starting sigma in pixels.
    #[arg(long)]
    sigma: Option<f64>,
    /// Per-iteration sigma decay rate; 0 keeps sigma fixed.
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long, default_value = "mean-std", value_parser = parse_mode)]
    advantage_mode: AdvantageMode,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "toy-run")]
    out_dir: PathBuf,
    /// Write an SVG of the mean layout every N iterations.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    svg_every: Option<u64>,
}

#[derive(Args)]
struct RenderArgs {
    layout: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    canvas: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    max_concurrent: Option<usize>,
    #[arg(long)]
    max_body_bytes: Option<usize>,
    #[arg(long)]
    max_candidates: Option<usize>,
    /// Disable NDJSON request logs.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct ObjectiveArgs {
    /// `{"batch": [[[new, old, ref], ...], ...], "rewards": [...], "config"?: {...}}`
    input: PathBuf,
}

#[derive(Subcommand)]
enum DemoCommand {
    /// Names of the bundled canvases.
    List,
    /// Print a bundled canvas document.
    Canvas { name: String },
    /// Print a clean synthetic corpus as canonical NDJSON.
    Corpus {
        #[arg(short, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Damage every layout (overlaps, orphaned underlays, covered saliency).
        #[arg(long)]
        corrupt: bool,
    },
}

fn parse_format(s: &str) -> Result<DatasetFormat, String> {
    s.parse()
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    s.parse()
}

fn parse_mode(s: &str) -> Result<AdvantageMode, String> {
    match s.replace('_', "-").as_str() {
        "mean-std" => Ok(AdvantageMode::MeanStd),
        "mean-only" => Ok(AdvantageMode::MeanOnly),
        other => Err(format!("unknown advantage mode `{other}` (expected mean-std or mean-only)")),
    }
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

type Outcome = Result<(), Failure>;

trait ExitWith<T> {
    fn exit_with(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ExitWith<T> for Result<T, E> {
    fn exit_with(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).context("reading stdin")?;
        return Ok(s);
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn reward_config(path: Option<&Path>) -> Result<RewardConfig, Failure> {
    let Some(path) = path else { return Ok(RewardConfig::default()) };
    let text = read_text(path).exit_with(BAD_CONFIG)?;
    RewardConfig::from_json(&text).map_err(|e| anyhow!("{}: {e}", path.display())).exit_with(BAD_CONFIG)
}

fn load_canvas(path: &Path) -> anyhow::Result<Canvas> {
    Canvas::from_json(&read_text(path)?).with_context(|| format!("parsing canvas {}", path.display()))
}

fn load_document(path: &Path) -> anyhow::Result<LayoutDocument> {
    serde_json::from_str(&read_text(path)?).with_context(|| format!("parsing layout document {}", path.display()))
}

fn reward(a: RewardArgs) -> Outcome {
    let rewards = reward_config(a.config.as_deref())?;
    let canvas = load_canvas(&a.canvas).exit_with(BAD_INPUT)?;
    let raw = read_text(&a.response).exit_with(BAD_INPUT)?;
    let reference = match &a.reference {
        Some(p) => Some(load_document(p).and_then(|d| Ok(d.layout()?)).exit_with(BAD_INPUT)?),
        None => None,
    };
    let breakdown = score_text(&raw, &canvas, reference.as_ref(), &rewards);
    println!("{}", serde_json::to_string_pretty(&breakdown).expect("breakdowns serialize"));
    Ok(())
}

fn bench(a: BenchArgs) -> Outcome {
    let dataset = ingest_dataset(&a.dataset, a.format).exit_with(BAD_INPUT)?;
    let text = read_text(&a.predictions).exit_with(BAD_INPUT)?;
    let mut predictions: BTreeMap<String, Layout> = BTreeMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let doc: LayoutDocument =
            serde_json::from_str(line).with_context(|| format!("predictions line {}", i + 1)).exit_with(BAD_INPUT)?;
        let id = doc.id.clone().ok_or_else(|| anyhow!("predictions line {} has no id", i + 1)).exit_with(ID_MISMATCH)?;
        let layout = doc.layout().with_context(|| format!("prediction {id}")).exit_with(BAD_INPUT)?;
        if predictions.insert(id.clone(), layout).is_some() {
            return Err(anyhow!("duplicate prediction id {id}")).exit_with(ID_MISMATCH);
        }
    }

    let mut items = Vec::with_capacity(dataset.records.len());
    let mut missing = Vec::new();
    for r in &dataset.records {
        match predictions.remove(&r.source_id) {
            Some(layout) => items.push((layout, r.canvas.clone())),
            None => missing.push(r.source_id.clone()),
        }
    }
    if !missing.is_empty() || !predictions.is_empty() {
        let extra: Vec<_> = predictions.into_keys().collect();
        return Err(anyhow!(
            "ids do not line up: {} record(s) without a prediction {:?}, {} prediction(s) without a record {:?}",
            missing.len(),
            missing.iter().take(5).collect::<Vec<_>>(),
            extra.len(),
            extra.iter().take(5).collect::<Vec<_>>()
        ))
        .exit_with(ID_MISMATCH);
    }

    let measure = match a.overlap {
        Overlap::Jaccard => OverlapMeasure::Jaccard,
        Overlap::Min => OverlapMeasure::IntersectionOverMin,
    };
    let report = report_with(&items, measure).exit_with(ID_MISMATCH)?;
    let json = serde_json::to_string(&report).expect("reports serialize");
    print!("{}", report.to_table(&a.label));
    println!("{json}");
    if let Some(path) = &a.json {
        write_text(path, &format!("{json}\n")).exit_with(BAD_INPUT)?;
    }
    Ok(())
}

fn announce_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>() >> 11;
        eprintln!("seed: {s}");
        s
    })
}

fn rollout(a: RolloutArgs) -> Outcome {
    let seed = match a.backend {
        BackendKind::Random => Some(announce_seed(a.seed)),
        _ => a.seed,
    };
    let cfg = PolicyBackendConfig {
        kind: a.backend,
        endpoint: a.endpoint,
        model_name: a.model,
        temperature: a.temperature,
        group_size: a.group_size as usize,
        timeout: a.timeout,
        max_retries: a.max_retries,
        seed,
        parallelism: a.parallelism as usize,
        api_key_env: a.api_key_env,
        replay_path: a.replay,
    };
    cfg.validate().exit_with(BAD_INPUT)?;
    let rewards = reward_config(a.config.as_deref())?;
    let template = match &a.template {
        Some(p) => read_text(p).exit_with(BAD_INPUT)?,
        None => DEFAULT_TEMPLATE.to_string(),
    };
    let dataset = ingest_dataset(&a.dataset, a.format).exit_with(BAD_INPUT)?;
    let backend = build_backend(&cfg).exit_with(BAD_INPUT)?;
    let grpo = GrpoConfig::with_mode(a.advantage_mode);

    let mut log = String::new();
    let mut evals = String::new();
    for record in &dataset.records {
        let group = match backend.rollout(&record.canvas, &template, cfg.group_size) {
            Ok(g) => g,
            Err(e @ RolloutError::AllFailed { .. }) => return Err(e).exit_with(BACKEND_DOWN),
            Err(e) => return Err(e).exit_with(BAD_INPUT),
        };
        let eval = evaluate_record(&group, &record.canvas, record.reference.as_ref(), &rewards, &grpo).exit_with(BAD_INPUT)?;
        for line in RolloutLogRecord::for_group(&group, Some(&eval.breakdowns)) {
            log.push_str(&serde_json::to_string(&line).expect("log records serialize"));
            log.push('\n');
        }
        evals.push_str(&serde_json::to_string(&eval).expect("evaluations serialize"));
        evals.push('\n');
    }
    write_text(&a.log, &log).exit_with(BAD_INPUT)?;
    match &a.out {
        Some(p) => write_text(p, &evals).exit_with(BAD_INPUT)?,
        None => io::stdout().write_all(evals.as_bytes()).exit_with(BAD_INPUT)?,
    }
    Ok(())
}

fn train_toy(a: TrainArgs) -> Outcome {
    let rewards = reward_config(a.config.as_deref())?;
    let canvas = load_canvas(&a.canvas).exit_with(BAD_INPUT)?;
    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        iterations: a.iterations as usize,
        group_size: a.group_size as usize,
        learning_rate: a.learning_rate.unwrap_or(defaults.learning_rate),
        initial_sigma: a.sigma,
        sigma_schedule: match a.decay {
            Some(rate) if rate == 0.0 => SigmaSchedule::Fixed,
            Some(rate) => SigmaSchedule::ExponentialDecay { rate },
            None => defaults.sigma_schedule,
        },
        seed: announce_seed(a.seed),
        advantage_mode: a.advantage_mode,
        ..defaults
    };
    cfg.validate().exit_with(BAD_INPUT)?;
    let initial = ToyPolicy::centered(canvas.clone(), cfg.sigma_for(&canvas)).exit_with(BAD_INPUT)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display())).exit_with(BAD_INPUT)?;

    let mut snapshots = Vec::new();
    let every = a.svg_every.map(|n| n as usize);
    let trace = train_with(initial, &rewards, &cfg, |stats, policy| {
        if every.is_some_and(|n| (stats.iteration + 1) % n == 0) {
            snapshots.push((stats.iteration + 1, render_svg(&policy.mean_layout(), Some(&canvas))));
        }
    })
    .map_err(|e| match e {
        TrainError::Diverged { .. } => Failure { code: DIVERGED, error: e.into() },
        other => Failure { code: BAD_INPUT, error: other.into() },
    })?;

    let out = |name: &str| a.out_dir.join(name);
    write_text(&out("trace.csv"), &trace.to_csv()).exit_with(BAD_INPUT)?;
    let final_doc = LayoutDocument::from_layout(&trace.final_layout(), Some(&canvas));
    write_text(&out("final_layout.json"), &serde_json::to_string_pretty(&final_doc).expect("documents serialize"))
        .exit_with(BAD_INPUT)?;
    for (iteration, svg) in snapshots {
        write_text(&out(&format!("mean_{iteration:05}.svg")), &svg).exit_with(BAD_INPUT)?;
    }
    let first = trace.steps[0].mean_reward;
    let last = trace.tail_mean(10);
    eprintln!(
        "mean quality: iteration 0 {first:.4}, last 10 iterations {last:.4} ({:+.1}%); outputs in {}",
        100.0 * (last - first) / first.max(f64::MIN_POSITIVE),
        a.out_dir.display()
    );
    Ok(())
}

fn render(a: RenderArgs) -> Outcome {
    let doc = load_document(&a.layout).exit_with(BAD_INPUT)?;
    let layout = doc.layout().with_context(|| format!("layout {}", a.layout.display())).exit_with(BAD_INPUT)?;
    let canvas = match &a.canvas {
        Some(p) => Some(load_canvas(p).exit_with(BAD_INPUT)?),
        None if doc.canvas.is_some() => Some(doc.canvas().exit_with(BAD_INPUT)?),
        None => None,
    };
    write_text(&a.output, &render_svg(&layout, canvas.as_ref())).exit_with(BAD_INPUT)
}

fn serve(a: ServeArgs) -> Outcome {
    let defaults = ServiceConfig::default();
    let config = ServiceConfig {
        bind: a.bind,
        port: a.port,
        max_concurrent: a.max_concurrent.unwrap_or(defaults.max_concurrent),
        reward_config_path: a.config,
        max_body_bytes: a.max_body_bytes.unwrap_or(defaults.max_body_bytes),
        max_candidates: a.max_candidates.unwrap_or(defaults.max_candidates),
        request_log: !a.quiet,
    }
    .with_env_overrides()
    .exit_with(BAD_INPUT)?;
    config.validate().exit_with(BAD_INPUT)?;
    let state = AppState::new(config.clone()).exit_with(BAD_CONFIG)?;
    let runtime = tokio::runtime::Runtime::new().context("starting async runtime").exit_with(BAD_INPUT)?;
    runtime.block_on(async {
        let listener = posterlay_service::bind(&config).await.exit_with(BIND_FAILED)?;
        eprintln!("listening on http://{}", listener.local_addr().exit_with(BIND_FAILED)?);
        posterlay_service::serve(listener, state.clone(), posterlay_service::shutdown_signal(state))
            .await
            .map_err(|e| match e {
                ServiceError::Bind { .. } => Failure { code: BIND_FAILED, error: e.into() },
                other => Failure { code: BAD_INPUT, error: other.into() },
            })
    })
}

fn objective(a: ObjectiveArgs) -> Outcome {
    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Input {
        batch: TokenBatch,
        rewards: Vec<f64>,
        #[serde(default)]
        config: GrpoConfig,
    }
    let text = read_text(&a.input).exit_with(BAD_INPUT)?;
    let input: Input = serde_json::from_str(&text).context("parsing objective input").exit_with(BAD_INPUT)?;
    let report = grpo_objective(&input.batch, &input.rewards, &input.config).exit_with(BAD_INPUT)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
    Ok(())
}

fn demo_cmd(c: DemoCommand) -> Outcome {
    match c {
        DemoCommand::List => {
            for c in demo::canvases() {
                println!("{}", c.id);
            }
        }
        DemoCommand::Canvas { name } => {
            let text = demo::canvas_json(&name).ok_or_else(|| anyhow!("no bundled canvas named {name}")).exit_with(BAD_INPUT)?;
            print!("{text}");
        }
        DemoCommand::Corpus { n, seed, corrupt } => {
            let mut records = demo::clean_corpus(n, seed);
            if corrupt {
                records = records.iter().map(demo::corrupt).collect();
            }
            print!("{}", to_ndjson(&records));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("POSTERLAY_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Reward(a) => reward(a),
        Command::Bench(a) => bench(a),
        Command::Rollout(a) => rollout(a),
        Command::TrainToy(a) => train_toy(a),
        Command::Render(a) => render(a),
        Command::Serve(a) => serve(a),
        Command::Objective(a) => objective(a),
        Command::Demo(c) => demo_cmd(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
