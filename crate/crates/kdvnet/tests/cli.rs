use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use clap::Parser;
use kdvnet::checkpoint;
use kdvnet::cli::{self, Cli};
use kdvnet::manifest::sha256_hex;
use kdvnet::report::{self, CurvePoint, MetricsRow};
use kdvnet::{dataset, Error};
use kdvnet_core::training::{HeadKind, OperatorKind};
use tempfile::TempDir;

fn run(args: &[&str]) -> kdvnet::Result<Vec<PathBuf>> {
    let argv = std::iter::once("kdvnet").chain(args.iter().copied());
    cli::run(Cli::parse_from(argv))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

// dt 0.25 over 20 rows spans t in [0, 5], so every snapshot time is on the record
const GRID: [&str; 8] = ["--nx", "16", "--nt", "20", "--dt", "0.25", "--substeps", "16"];

const TINY_FNO: [&str; 10] = [
    "--set",
    "fno.width=4",
    "--set",
    "fno.modes_t=4",
    "--set",
    "fno.modes_x=4",
    "--set",
    "fno.projection=8",
    "--set",
    "head_hidden=8",
];

fn generate(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let out = dir.join("data.kdvd");
    let (n, seed) = (n.to_string(), seed.to_string());
    let mut args = vec!["--threads", "1", "generate", "--n", &n, "--seed", &seed, "--out", p(&out)];
    args.extend(GRID);
    run(&args).unwrap();
    out
}

fn train(dir: &Path, data: &Path, name: &str, extra: &[&str]) -> kdvnet::Result<PathBuf> {
    let out = dir.join(name);
    let mut args = vec!["--threads", "1", "train", "--data", p(data), "--out", p(&out)];
    args.extend(TINY_FNO);
    args.extend(["--epochs", "2", "--head-epochs", "2", "--batch-size", "4"]);
    args.extend(extra);
    run(&args)?;
    Ok(out)
}

/// Generate, train FNO+LSTM, evaluate E1, plot; returns every file written.
fn pipeline(dir: &Path) -> Vec<PathBuf> {
    let data = generate(dir, 20, 4);
    let model = train(dir, &data, "fno-lstm.nock", &["--head", "lstm", "--horizon", "20"]).unwrap();
    let eval_dir = dir.join("eval");
    let mut files = vec![data.clone(), model.clone()];
    files.extend([data.with_extension("kdvd.manifest.toml"), model.with_extension("nock.manifest.toml")]);
    files.extend(
        run(&["--threads", "1", "evaluate", "--data", p(&data), "--model", p(&model), "--out", p(&eval_dir)]).unwrap(),
    );
    let fig = dir.join("fig.svg");
    files.extend(run(&["--threads", "1", "plot", "--eval", p(&eval_dir), "--out", p(&fig)]).unwrap());
    files
}

fn is_manifest(path: &Path) -> bool {
    path.to_str().unwrap().ends_with("manifest.toml")
}

fn hashes(root: &Path, files: &[PathBuf]) -> BTreeMap<PathBuf, String> {
    files
        .iter()
        .filter(|f| !is_manifest(f))
        .map(|f| (f.strip_prefix(root).unwrap().to_path_buf(), sha256_hex(&fs::read(f).unwrap())))
        .collect()
}

#[test]
fn generate_writes_a_loadable_dataset() {
    let dir = TempDir::new().unwrap();
    let out = generate(dir.path(), 10, 1);
    let ds = dataset::load(&out).unwrap();
    assert_eq!(ds.len(), 10);
    assert_eq!((ds.grid.nx, ds.grid.nt_record), (16, 20));
    assert_eq!(ds.trajectories[0].u.len(), 21 * 16);
    let manifest = fs::read_to_string(dir.path().join("data.kdvd.manifest.toml")).unwrap();
    assert!(manifest.contains(&sha256_hex(&fs::read(&out).unwrap())));
}

#[test]
fn full_pipeline_produces_every_artifact() {
    let dir = TempDir::new().unwrap();
    let files = pipeline(dir.path());
    for f in &files {
        assert!(f.exists(), "{} missing", f.display());
    }
    let eval_dir = dir.path().join("eval");
    let metrics: Vec<MetricsRow> = report::read_rows(&eval_dir.join(cli::METRICS_CSV)).unwrap();
    assert_eq!(metrics.len(), 1);
    assert_eq!(metrics[0].protocol, "E1");
    assert_eq!(metrics[0].n, 2);
    assert!(metrics[0].mae.is_finite() && metrics[0].mae > 0.0);
    let curve: Vec<CurvePoint> = report::read_rows(&eval_dir.join(cli::CURVE_CSV)).unwrap();
    assert_eq!(curve.len(), 20);
    assert!((curve[19].t - 5.0).abs() < 1e-12);

    let header = fs::read_to_string(eval_dir.join(cli::METRICS_CSV)).unwrap();
    assert!(header.starts_with("model,protocol,mae,rmse,rse,n"));

    let fig = fs::read_to_string(dir.path().join("fig.svg")).unwrap();
    assert!(fig.starts_with("<svg") && fig.contains("MAE"));
    for t in ["1.25", "2.5", "3.75", "5"] {
        let snap = fs::read_to_string(dir.path().join(format!("fig-t{t}.svg"))).unwrap();
        assert!(snap.contains(&format!("t = {t}")), "snapshot {t}");
    }
}

#[test]
fn reruns_reproduce_artifact_hashes() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let ha = hashes(a.path(), &pipeline(a.path()));
    let hb = hashes(b.path(), &pipeline(b.path()));
    assert_eq!(ha.len(), 10);
    assert_eq!(ha, hb);
}

#[test]
fn manifests_list_the_hashes_of_their_outputs() {
    let dir = TempDir::new().unwrap();
    let files = pipeline(dir.path());
    let manifests: Vec<_> = files.iter().filter(|f| is_manifest(f)).collect();
    assert_eq!(manifests.len(), 4);
    for m in manifests {
        let doc: toml::Table = fs::read_to_string(m).unwrap().parse().unwrap();
        let outputs = doc["outputs"].as_array().unwrap();
        assert!(!outputs.is_empty());
        for o in outputs {
            let path = Path::new(o["path"].as_str().unwrap());
            assert_eq!(o["sha256"].as_str().unwrap(), sha256_hex(&fs::read(path).unwrap()));
        }
        assert!(doc.contains_key("timings"));
    }
}

#[test]
fn e2_rolls_out_horizon_chunks_over_the_record() {
    let dir = TempDir::new().unwrap();
    let data = generate(dir.path(), 20, 2);
    let model = train(dir.path(), &data, "don.nock", &["--operator", "deeponet", "--head", "gru", "--horizon", "5"]).unwrap();
    let out = dir.path().join("e2");
    run(&["evaluate", "--data", p(&data), "--model", p(&model), "--protocol", "e2", "--out", p(&out)]).unwrap();
    let metrics: Vec<MetricsRow> = report::read_rows(&out.join(cli::METRICS_CSV)).unwrap();
    assert_eq!(metrics[0].protocol, "E2");
    assert!(metrics[0].rse.is_finite());
    let curve: Vec<CurvePoint> = report::read_rows(&out.join(cli::CURVE_CSV)).unwrap();
    assert_eq!(curve.len(), 20);

    let two = dir.path().join("e2-two");
    run(&["evaluate", "--data", p(&data), "--model", p(&model), "--protocol", "e2", "--chunks", "2", "--out", p(&two)]).unwrap();
    let curve: Vec<CurvePoint> = report::read_rows(&two.join(cli::CURVE_CSV)).unwrap();
    assert_eq!(curve.len(), 10);
}

#[test]
fn evaluation_on_another_grid_is_rejected() {
    let dir = TempDir::new().unwrap();
    let data = generate(dir.path(), 12, 0);
    let model = train(dir.path(), &data, "m.nock", &["--horizon", "20"]).unwrap();
    let other = dir.path().join("other.kdvd");
    run(&["generate", "--n", "12", "--nx", "16", "--nt", "20", "--dt", "0.125", "--substeps", "16", "--out", p(&other)]).unwrap();
    let err = run(&["evaluate", "--data", p(&other), "--model", p(&model)]).unwrap_err();
    assert!(err.to_string().contains("trained on"), "{err}");
}

#[test]
fn overrides_reach_the_checkpoint_config() {
    let dir = TempDir::new().unwrap();
    let data = generate(dir.path(), 12, 0);
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "operator = \"deeponet\"\nhead = \"rnn\"\n[deeponet]\nlatent = 12\nbranch_hidden = [10]\ntrunk_hidden = [9, 9]\n").unwrap();
    let model = train(
        dir.path(),
        &data,
        "m.nock",
        &["--config", p(&cfg), "--horizon", "20", "--seed", "7", "--lr", "0.004", "--set", "head_opt.lr=5e-4"],
    )
    .unwrap();
    let file = checkpoint::load(&model).unwrap();
    let c = &file.config;
    assert_eq!((c.operator, c.head), (OperatorKind::DeepOnet, HeadKind::Rnn));
    assert_eq!(c.deeponet.latent, 12);
    assert_eq!(c.deeponet.trunk_hidden, vec![9, 9]);
    assert_eq!((c.seed, c.horizon), (7, 20));
    assert_eq!(c.operator_opt.lr, 0.004);
    assert_eq!(c.head_opt.lr, 5e-4);
    assert_eq!(c.head_hidden, 8);
}

#[test]
fn flag_kinds_beat_the_config_file() {
    let dir = TempDir::new().unwrap();
    let data = generate(dir.path(), 12, 0);
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "operator = \"deeponet\"\n").unwrap();
    let model = train(dir.path(), &data, "m.nock", &["--config", p(&cfg), "--operator", "fno", "--horizon", "20"]).unwrap();
    assert_eq!(checkpoint::load(&model).unwrap().config.operator, OperatorKind::Fno);
}

#[test]
fn invalid_configurations_are_refused() {
    let dir = TempDir::new().unwrap();
    let data = generate(dir.path(), 12, 0);
    let cases: [&[&str]; 5] = [
        &["--mode", "simultaneous", "--head", "none"],
        &["--set", "fno.depth=3"],
        &["--set", "nonsense"],
        &["--horizon", "0"],
        &["--seed", "9223372036854775808"],
    ];
    for extra in cases {
        let err = train(dir.path(), &data, "bad.nock", extra).unwrap_err();
        assert!(matches!(err, Error::Config(_) | Error::Core(_)), "{extra:?}: {err}");
        assert!(!dir.path().join("bad.nock").exists());
    }
    let unknown = dir.path().join("unknown.toml");
    fs::write(&unknown, "[optimizer]\nlr = 1.0\n").unwrap();
    let err = train(dir.path(), &data, "bad.nock", &["--config", p(&unknown)]).unwrap_err();
    assert!(err.to_string().contains("optimizer"), "{err}");
}

#[test]
fn binary_exits_nonzero_on_errors_and_honours_the_output_root() {
    let exe = env!("CARGO_BIN_EXE_kdvnet");
    let dir = TempDir::new().unwrap();
    let status = Command::new(exe)
        .args(["generate", "--n", "0"])
        .env("KDVNET_OUT", dir.path())
        .output()
        .unwrap();
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("error"));

    let ok = Command::new(exe)
        .args(["generate", "--n", "2", "--nx", "16", "--nt", "4", "--substeps", "4"])
        .env("KDVNET_OUT", dir.path())
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join("dataset.kdvd").exists());
    assert!(dir.path().join("dataset.kdvd.manifest.toml").exists());

    let usage = Command::new(exe).args(["train", "--operator", "cnn"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
}
