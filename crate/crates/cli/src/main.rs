mod config;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bihyper::artifacts::{
    default_decisions, read_json, read_scores, write_json, write_scores, write_stamped_csv, Checkpoint, RunMetadata,
    RunStamp, ScoreRow,
};
use bihyper::detector::{train_do2hsc, train_dohsc, train_tabular, DetectorModel, Mode, ScoredPoint, TrainReport};
use bihyper::evalmetrics::{auc, export_distance_histogram, f1_at_contamination, F1Report, ScoredSet};
use bihyper::graphdata::{
    fixture_dataset, load_csv_table, one_class_split, parse_tu_dataset, split_indices, write_tu_dataset, GraphDataset,
    SplitIndices, TabularData,
};
use bihyper::soapbubble::{mixture_demo, quantile_table, sample_distances, MixtureSpec};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use config::{ResolvedRun, RunArgs, RunMode};

const CHECKPOINT: &str = "checkpoint.json";
const METADATA: &str = "metadata.json";
const LOSS: &str = "loss.csv";
const SPLIT: &str = "split.json";
const SCORES: &str = "scores.csv";
const EVAL: &str = "eval.json";
const HISTOGRAM: &str = "histogram.csv";

#[derive(Parser, Debug)]
#[command(name = "bihyper", version, about = "One-class anomaly detection with orthogonal (bi-)hypersphere boundaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a detector and write checkpoint, metadata, loss log and split.
    Train {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score the held-out split of a trained run.
    Score {
        /// Run directory written by `train`.
        #[arg(long)]
        out: PathBuf,
        /// Dataset location, if it moved since training.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// AUC, F1 and distance histogram for a scored run.
    Eval {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Gaussian distance quantiles, histograms and the mixture demonstration.
    Simulate {
        #[arg(long, value_delimiter = ',', default_value = "1,10,50,100,200,500")]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.25,0.5,0.75,0.99")]
        quantiles: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        bins: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the bundled two-class TU-format dataset.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "FIXTURE")]
        name: String,
    },
}

#[derive(Debug)]
pub enum CliError {
    Core(bihyper::Error),
    Usage(String),
    Ingest(String),
    RunMismatch(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn ingest(msg: impl Into<String>) -> Self {
        CliError::Ingest(msg.into())
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "usage",
            CliError::Ingest(_) => "ingest",
            CliError::RunMismatch(_) => "run_mismatch",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::Ingest(m) | CliError::RunMismatch(m) => f.write_str(m),
        }
    }
}

impl From<bihyper::Error> for CliError {
    fn from(e: bihyper::Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

/// One line, `key=value` pairs, message last so it may contain spaces.
fn report_failure(err: &CliError) {
    let msg = err.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("error kind={} msg={msg}", err.kind());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            report_failure(&CliError::usage(e.to_string()));
            return ExitCode::from(2);
        }
    };
    if let Err(e) = configure_threads() {
        report_failure(&e);
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_failure(&e);
            ExitCode::FAILURE
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("BIHYPER_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("BIHYPER_THREADS={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("thread pool: {e}")))
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Train { run, out } => train(&run, &out),
        Command::Score { out, dataset } => score(&out, dataset),
        Command::Eval { out, bins } => eval(&out, bins),
        Command::Simulate { dims, quantiles, samples, seed, bins, out } => {
            simulate(&dims, &quantiles, samples, seed, bins, &out)
        }
        Command::Fixture { out, name } => {
            write_tu_dataset(&fixture_dataset(), &out, &name)?;
            Ok(())
        }
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Core(bihyper::Error::Io { path: dir.into(), source: e }))
}

/// The held-out part of a run, written by `train` and read by `score`/`eval`.
#[derive(Debug, Serialize, Deserialize)]
struct SplitFile {
    stamp: RunStamp,
    dataset: PathBuf,
    name: String,
    mode: RunMode,
    indices: SplitIndices,
}

enum Data {
    Graphs(GraphDataset),
    Table(TabularData),
}

impl Data {
    fn load(path: &Path, name: &str, mode: RunMode) -> CliResult<Data> {
        Ok(if mode.is_tabular() {
            Data::Table(load_csv_table(path)?)
        } else {
            Data::Graphs(parse_tu_dataset(path, name)?)
        })
    }

    fn split(&self, normal_class: usize, seed: u64) -> CliResult<SplitIndices> {
        Ok(match self {
            Data::Graphs(ds) => one_class_split(ds, normal_class, seed)?.indices,
            Data::Table(t) => {
                if normal_class >= t.class_values.len() {
                    return Err(CliError::usage(format!(
                        "normal class {normal_class} not present ({} classes)",
                        t.class_values.len()
                    )));
                }
                split_indices(&t.labels, normal_class, seed)?
            }
        })
    }

    fn score(&self, model: &DetectorModel, indices: &[usize]) -> CliResult<Vec<ScoredPoint>> {
        Ok(match self {
            Data::Graphs(ds) => model.score_graphs(&ds.subset(indices))?,
            Data::Table(t) => model.score_rows(&t.features.select_rows(indices)?)?,
        })
    }

    fn describe(&self, split: &SplitIndices) -> serde_json::Value {
        let (kind, count, class_values, extra) = match self {
            Data::Graphs(ds) => (
                "graphs",
                ds.len(),
                &ds.class_values,
                serde_json::json!({ "feature_dim": ds.feature_dim, "features": format!("{:?}", ds.feature_kind) }),
            ),
            Data::Table(t) => ("table", t.labels.len(), &t.class_values, serde_json::json!({ "columns": t.features.cols() })),
        };
        serde_json::json!({
            "kind": kind,
            "instances": count,
            "class_values": class_values,
            "normal_label_value": class_values.get(split.normal_class),
            "train_size": split.train.len(),
            "test_size": split.test.len(),
            "test_anomalies": split.test_labels.iter().filter(|&&l| l == 1).count(),
            "details": extra,
        })
    }
}

fn fit(data: &Data, run: &ResolvedRun, split: &SplitIndices) -> CliResult<(DetectorModel, TrainReport)> {
    let mode = run.mode.detector_mode();
    Ok(match data {
        Data::Graphs(ds) => {
            let train = ds.subset(&split.train);
            match mode {
                Mode::Dohsc => train_dohsc(&train, &run.train)?,
                Mode::Do2hsc => train_do2hsc(&train, &run.train)?,
            }
        }
        Data::Table(t) => train_tabular(&t.features.select_rows(&split.train)?, &run.train, mode)?,
    })
}

fn train(args: &RunArgs, out: &Path) -> CliResult<()> {
    let (run, dataset) = args.resolve()?;
    create_dir(out)?;
    let stamp = RunStamp::for_config(&run, run.train.seed)?;
    let data = Data::load(&dataset, &run.name, run.mode)?;
    let split = data.split(run.normal_class, run.train.seed)?;
    let (model, report) = fit(&data, &run, &split)?;

    let mut warnings = split.warning.iter().cloned().collect::<Vec<_>>();
    warnings.extend(report.warnings.iter().cloned());
    let meta = RunMetadata {
        stamp: stamp.clone(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        dataset: run.name.clone(),
        mode: run.mode.as_str().to_string(),
        normal_class: Some(run.normal_class),
        config: run.train.clone(),
        inputs: serde_json::json!({
            "dataset_path": dataset,
            "data": data.describe(&split),
            "stale_refits": report.stale_refits,
            "stopped_early_at": report.stopped_early_at,
        }),
        decisions: default_decisions(),
        warnings,
    };
    write_stamped_csv(out.join(LOSS), &report.loss_csv(), &stamp)?;
    write_json(
        out.join(SPLIT),
        &SplitFile { stamp: stamp.clone(), dataset, name: run.name.clone(), mode: run.mode, indices: split },
    )?;
    write_json(out.join(METADATA), &meta)?;
    Checkpoint::new(stamp, run.train, model).save(out.join(CHECKPOINT))?;
    Ok(())
}

fn ensure_same_run(what: &str, expected: &RunStamp, found: &RunStamp) -> CliResult<()> {
    if expected != found {
        return Err(CliError::RunMismatch(format!(
            "{what} belongs to run {} but the checkpoint is run {}",
            found.run_id, expected.run_id
        )));
    }
    Ok(())
}

fn score(out: &Path, dataset: Option<PathBuf>) -> CliResult<()> {
    let ckpt = Checkpoint::load(out.join(CHECKPOINT))?;
    let split: SplitFile = read_json(out.join(SPLIT))?;
    ensure_same_run(SPLIT, &ckpt.stamp, &split.stamp)?;
    let data = Data::load(dataset.as_deref().unwrap_or(&split.dataset), &split.name, split.mode)?;
    let points = data.score(&ckpt.model, &split.indices.test)?;
    let rows: Vec<ScoreRow> = split
        .indices
        .test
        .iter()
        .zip(&split.indices.test_labels)
        .zip(points)
        .map(|((&graph_index, &label), p)| ScoreRow { graph_index, label, distance: p.distance, score: p.score })
        .collect();
    write_scores(out.join(SCORES), &rows, &ckpt.stamp)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvalReport {
    stamp: RunStamp,
    test_size: usize,
    anomalies: usize,
    auc: f64,
    /// Fraction of the test set flagged for F1: its true anomaly share.
    contamination: f64,
    f1: F1Report,
    histogram_bins: usize,
}

fn eval(out: &Path, bins: usize) -> CliResult<()> {
    let ckpt = Checkpoint::load(out.join(CHECKPOINT))?;
    let split: SplitFile = read_json(out.join(SPLIT))?;
    let (rows, score_stamp) = read_scores(out.join(SCORES))?;
    ensure_same_run(SCORES, &ckpt.stamp, &score_stamp)?;
    ensure_same_run(SPLIT, &ckpt.stamp, &split.stamp)?;
    let expected: Vec<(usize, u8)> =
        split.indices.test.iter().copied().zip(split.indices.test_labels.iter().copied()).collect();
    let found: Vec<(usize, u8)> = rows.iter().map(|r| (r.graph_index, r.label)).collect();
    if expected != found {
        return Err(CliError::RunMismatch(format!(
            "{SCORES} rows do not match the held-out instances and labels in {SPLIT}"
        )));
    }

    let labels: Vec<u8> = rows.iter().map(|r| r.label).collect();
    let set = ScoredSet::new(rows.iter().map(|r| r.score).collect(), labels.clone())?;
    let anomalies = labels.iter().filter(|&&l| l == 1).count();
    let contamination = anomalies as f64 / labels.len().max(1) as f64;
    let distances: Vec<f64> = rows.iter().map(|r| r.distance).collect();
    let report = EvalReport {
        stamp: ckpt.stamp.clone(),
        test_size: rows.len(),
        anomalies,
        auc: auc(&set)?,
        contamination,
        f1: f1_at_contamination(&set, contamination)?,
        histogram_bins: bins,
    };
    export_distance_histogram(&distances, &labels, bins, out.join(HISTOGRAM))?;
    write_json(bihyper::artifacts::sidecar_path(out.join(HISTOGRAM)), &ckpt.stamp)?;
    write_json(out.join(EVAL), &report)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SimulationConfig<'a> {
    dims: &'a [usize],
    quantiles: &'a [f64],
    samples: usize,
    bins: usize,
    mixture: MixtureSpec,
}

fn simulate(dims: &[usize], quantiles: &[f64], samples: usize, seed: u64, bins: usize, out: &Path) -> CliResult<()> {
    create_dir(out)?;
    let sim = SimulationConfig { dims, quantiles, samples, bins, mixture: MixtureSpec::default() };
    let stamp = RunStamp::for_config(&sim, seed)?;
    let table = quantile_table(dims, quantiles, samples, seed)?;
    write_stamped_csv(out.join("quantiles.csv"), &table.to_csv(), &stamp)?;
    for &d in dims {
        let sample = sample_distances(d, samples, seed)?;
        let path = out.join(format!("distances_d{d}.csv"));
        export_distance_histogram(&sample.distances, &vec![0; samples], bins, &path)?;
        write_json(bihyper::artifacts::sidecar_path(&path), &stamp)?;
    }
    let mixture = mixture_demo(&sim.mixture, seed)?;
    let path = out.join("mixture_histogram.csv");
    export_distance_histogram(&mixture.distances, &mixture.labels, bins, &path)?;
    write_json(bihyper::artifacts::sidecar_path(&path), &stamp)?;
    write_json(
        out.join("mixture.json"),
        &serde_json::json!({
            "stamp": stamp,
            "dimension": mixture.dimension,
            "nu": mixture.nu,
            "radius": mixture.radius,
            "r_min": mixture.r_min,
            "r_max": mixture.r_max,
            "normal_inside_fraction": mixture.normal_inside_fraction,
            "groups": mixture.groups,
        }),
    )?;
    Ok(())
}
