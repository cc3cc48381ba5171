//! The `kdvnet` command line: `generate`, `train`, `evaluate`, `plot`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use kdvnet_core::eval::{Predictor, Protocol};
use kdvnet_core::kdv::{GridSpec, PdeParams, DEFAULT_SUBSTEPS};
use kdvnet_core::training::{self, Checkpoint, HeadKind, History, OperatorKind, TrainingMode};

use crate::checkpoint::{self, CheckpointFile};
use crate::config::{self, Overrides, Preset};
use crate::error::{Error, IoContext, Result};
use crate::manifest::RunManifest;
use crate::report::{self, CurvePoint, MetricsRow, SnapshotPoint};
use crate::{dataset, evaluation, plot};

#[derive(Debug, Parser)]
#[command(name = "kdvnet", version, about = "KdV datasets, neural operators with recurrent heads, and their evaluation")]
pub struct Cli {
    /// Worker threads for generation and evaluation (0 = all cores).
    /// Training is single-threaded; results do not depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Root for default output paths.
    #[arg(long, global = true, env = "KDVNET_OUT", default_value = "runs")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate two-soliton trajectories and write a dataset file.
    Generate(GenerateArgs),
    /// Train an operator, optionally with a recurrent head.
    Train(TrainArgs),
    /// Evaluate a trained model on the test split.
    Evaluate(EvaluateArgs),
    /// Draw error curves and snapshot profiles from evaluation outputs.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub gamma: f64,
    /// Integrator steps per recorded interval.
    #[arg(long, default_value_t = DEFAULT_SUBSTEPS)]
    pub substeps: usize,
    #[arg(long, default_value_t = 50)]
    pub nx: usize,
    /// Recorded rows after t = 0.
    #[arg(long, default_value_t = 200)]
    pub nt: usize,
    #[arg(long, default_value_t = 0.025)]
    pub dt: f64,
    #[arg(long, default_value_t = 10.0)]
    pub period: f64,
    /// Output file [default: <out-dir>/dataset.kdvd]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PresetArg {
    Desk,
    Full,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OperatorArg {
    Deeponet,
    Fno,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HeadArg {
    None,
    Rnn,
    Gru,
    Lstm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    TwoStep,
    Simultaneous,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// TOML file with any subset of the training configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "desk")]
    pub preset: PresetArg,
    #[arg(long, value_enum)]
    pub operator: Option<OperatorArg>,
    #[arg(long, value_enum)]
    pub head: Option<HeadArg>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Predicted rows (200 for one-shot, 50 for chained rollouts).
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Operator (or joint) epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub head_epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Write `<out>.partial` every this many epochs.
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// Any configuration field, e.g. `--set fno.width=16 --set head_opt.lr=1e-3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Continue from an intermediate checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Output checkpoint [default: <out-dir>/<model>-h<horizon>-s<seed>.nock]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProtocolArg {
    /// One-shot prediction of the model's horizon.
    E1,
    /// Chained rollout of horizon-long chunks.
    E2,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "e1")]
    pub protocol: ProtocolArg,
    /// Rollout chunks for E2 [default: recorded rows / horizon]
    #[arg(long)]
    pub chunks: Option<usize>,
    /// Output directory [default: <out-dir>/eval/<model>-<protocol>]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Evaluation output directories; the first supplies the reference profiles.
    #[arg(long = "eval", required = true)]
    pub evals: Vec<PathBuf>,
    #[arg(long, default_value = "Per-timestep MAE")]
    pub title: String,
    /// Combined SVG [default: <out-dir>/figure.svg]; one `<stem>-t<time>.svg`
    /// per snapshot time is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub const METRICS_CSV: &str = "metrics.csv";
pub const CURVE_CSV: &str = "curve.csv";
pub const SNAPSHOTS_CSV: &str = "snapshots.csv";

fn manifest_path(artifact: &Path) -> PathBuf {
    let mut s = artifact.as_os_str().to_owned();
    s.push(".manifest.toml");
    PathBuf::from(s)
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => fs::create_dir_all(p).at(p),
        _ => Ok(()),
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs one command and returns the files it wrote, manifest last.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let pool = pool(cli.threads)?;
    let threads = pool.current_num_threads();
    pool.install(|| match cli.command {
        Command::Generate(a) => generate(a, &cli.out_dir, threads),
        Command::Train(a) => train(a, &cli.out_dir, threads),
        Command::Evaluate(a) => evaluate(a, &cli.out_dir, threads),
        Command::Plot(a) => plot_cmd(a, &cli.out_dir, threads),
    })
}

fn generate(a: GenerateArgs, out_dir: &Path, threads: usize) -> Result<Vec<PathBuf>> {
    let grid = GridSpec {
        period: a.period,
        nx: a.nx,
        dt_record: a.dt,
        nt_record: a.nt,
    };
    let pde = PdeParams::new(a.eta, a.gamma)?;
    let out = a.out.unwrap_or_else(|| out_dir.join("dataset.kdvd"));
    ensure_parent(&out)?;
    let mut m = RunManifest::start("generate", threads);
    let ds = m.time("simulate", || dataset::generate(a.n, &grid, &pde, a.seed, a.substeps))?;
    m.time("write", || dataset::save(&ds, &out))?;
    m.output(&out)?;
    m.detail("n", a.n as i64);
    m.detail("seed", a.seed as i64);
    m.detail("eta", a.eta);
    m.detail("gamma", a.gamma);
    m.detail("substeps", a.substeps as i64);
    log::info!("wrote {} samples to {}", a.n, out.display());
    let mp = m.write(&manifest_path(&out))?;
    Ok(vec![out, mp])
}

fn overrides(a: &TrainArgs) -> Overrides {
    Overrides {
        operator: a.operator.map(|o| match o {
            OperatorArg::Deeponet => OperatorKind::DeepOnet,
            OperatorArg::Fno => OperatorKind::Fno,
        }),
        head: a.head.map(|h| match h {
            HeadArg::None => HeadKind::None,
            HeadArg::Rnn => HeadKind::Rnn,
            HeadArg::Gru => HeadKind::Gru,
            HeadArg::Lstm => HeadKind::Lstm,
        }),
        mode: a.mode.map(|m| match m {
            ModeArg::TwoStep => TrainingMode::TwoStep,
            ModeArg::Simultaneous => TrainingMode::Simultaneous,
        }),
        horizon: a.horizon,
        seed: a.seed,
        epochs: a.epochs,
        head_epochs: a.head_epochs,
        batch_size: a.batch_size,
        lr: a.lr,
        checkpoint_every: a.checkpoint_every,
        set: a.set.clone(),
    }
}

fn history_table(h: &History) -> toml::Table {
    let mut t = toml::Table::new();
    t.insert("epochs".into(), (h.train_loss.len() as i64).into());
    if let Some(l) = h.train_loss.last() {
        t.insert("final_train_loss".into(), (*l).into());
    }
    t
}

fn train(a: TrainArgs, out_dir: &Path, threads: usize) -> Result<Vec<PathBuf>> {
    let mut m = RunManifest::start("train", threads);
    let ds = dataset::load(&a.data)?;
    m.input(&a.data)?;
    let resume = a.resume.as_deref().map(checkpoint::load).transpose()?;
    let file_text = match (&a.config, &resume) {
        (Some(p), _) => {
            m.input(p)?;
            Some(fs::read_to_string(p).at(p)?)
        }
        (None, Some(f)) => Some(config::to_toml(&f.config)?),
        (None, None) => None,
    };
    let preset = match a.preset {
        PresetArg::Desk => Preset::Desk,
        PresetArg::Full => Preset::Full,
    };
    let cfg = config::resolve(preset, file_text.as_deref(), &overrides(&a))?;
    if let Some(p) = &a.resume {
        m.input(p)?;
    }
    let out = a.out.clone().unwrap_or_else(|| {
        out_dir.join(format!("{}-h{}-s{}.nock", cfg.model_id(), cfg.horizon, cfg.seed))
    });
    ensure_parent(&out)?;
    let partial = out.with_extension("partial");

    let grid = ds.grid;
    let mut hook = |ck: &Checkpoint| -> kdvnet_core::Result<()> {
        let file = CheckpointFile::new(cfg.clone(), ck.clone(), &grid);
        checkpoint::save(&file, &partial).map_err(|e| kdvnet_core::Error::State(e.to_string()))
    };
    let outcome = m.time("train", || {
        training::train(&ds, &cfg, resume.as_ref().map(|f| &f.checkpoint), &mut hook)
    })?;
    let mut histories = vec![("operator", &outcome.operator_history)];
    if let Some(h) = &outcome.head_history {
        histories.push(("head", h));
    }
    let ck = outcome.model.to_checkpoint(&histories);
    checkpoint::save(&CheckpointFile::new(cfg.clone(), ck, &grid), &out)?;
    if partial.exists() {
        fs::remove_file(&partial).at(&partial)?;
    }
    m.output(&out)?;
    m.detail("model", cfg.model_id());
    m.detail("val_mae", outcome.val_mae);
    m.detail("operator_val_mae", outcome.operator_val_mae);
    m.detail("operator_history", history_table(&outcome.operator_history));
    if let Some(h) = &outcome.head_history {
        m.detail("head_history", history_table(h));
    }
    let cfg_table: toml::Table = config::to_toml(&cfg)?
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    m.detail("config", cfg_table);
    log::info!(
        "{}: validation MAE {:.6} -> {}",
        cfg.model_id(),
        outcome.val_mae,
        out.display()
    );
    let mp = m.write(&manifest_path(&out))?;
    Ok(vec![out, mp])
}

fn evaluate(a: EvaluateArgs, out_dir: &Path, threads: usize) -> Result<Vec<PathBuf>> {
    let mut m = RunManifest::start("evaluate", threads);
    let ds = dataset::load(&a.data)?;
    let file = checkpoint::load(&a.model)?;
    m.input(&a.data)?;
    m.input(&a.model)?;
    let model = file.model_for(&ds.grid)?;
    let horizon = model.horizon();
    let protocol = match a.protocol {
        ProtocolArg::E1 => Protocol::e1(),
        ProtocolArg::E2 => {
            let chunks = a.chunks.unwrap_or(ds.grid.nt_record / horizon);
            Protocol::chained(horizon, horizon * chunks)?
        }
    };
    let id = model.id();
    let dir = a
        .out
        .unwrap_or_else(|| out_dir.join("eval").join(format!("{id}-{}", protocol.tag().to_lowercase())));
    fs::create_dir_all(&dir).at(&dir)?;
    let ev = m.time("evaluate", || evaluation::evaluate(&model, &id, &ds, protocol))?;

    let files = [dir.join(METRICS_CSV), dir.join(CURVE_CSV), dir.join(SNAPSHOTS_CSV)];
    report::write_rows(&files[0], &[MetricsRow::from(&ev.report)])?;
    report::write_rows(&files[1], &ev.curve)?;
    report::write_rows(&files[2], &ev.snapshots)?;
    for f in &files {
        m.output(f)?;
    }
    m.detail("model", id.clone());
    m.detail("protocol", protocol.tag());
    m.detail("mae", ev.report.mae);
    m.detail("rmse", ev.report.rmse);
    m.detail("rse", ev.report.rse);
    m.detail("samples", ev.report.samples as i64);
    log::info!(
        "{id} {}: MAE {:.6}, RMSE {:.6}, RSE {:.6} over {} samples",
        protocol.tag(),
        ev.report.mae,
        ev.report.rmse,
        ev.report.rse,
        ev.report.samples
    );
    let mp = m.write(&dir.join("manifest.toml"))?;
    let mut out = files.to_vec();
    out.push(mp);
    Ok(out)
}

/// Reads the series written by `evaluate` into `dir`.
pub fn load_series(dir: &Path) -> Result<plot::Series> {
    let metrics: Vec<MetricsRow> = report::read_rows(&dir.join(METRICS_CSV))?;
    let label = metrics
        .first()
        .map(|r| format!("{} ({})", r.model, r.protocol))
        .unwrap_or_else(|| dir.display().to_string());
    Ok(plot::Series {
        label,
        curve: report::read_rows::<CurvePoint>(&dir.join(CURVE_CSV))?,
        snapshots: report::read_rows::<SnapshotPoint>(&dir.join(SNAPSHOTS_CSV))?,
    })
}

fn plot_cmd(a: PlotArgs, out_dir: &Path, threads: usize) -> Result<Vec<PathBuf>> {
    let mut m = RunManifest::start("plot", threads);
    let series = a.evals.iter().map(|d| load_series(d)).collect::<Result<Vec<_>>>()?;
    for d in &a.evals {
        for f in [METRICS_CSV, CURVE_CSV, SNAPSHOTS_CSV] {
            m.input(&d.join(f))?;
        }
    }
    let out = a.out.unwrap_or_else(|| out_dir.join("figure.svg"));
    ensure_parent(&out)?;
    plot::render(&series, &a.title, &out)?;
    let mut files = vec![out.clone()];
    files.extend(plot::render_snapshots(&series, &out)?);
    for f in &files {
        m.output(f)?;
    }
    let mp = m.write(&manifest_path(&out))?;
    files.push(mp);
    Ok(files)
}
