//! Run configuration: an optional JSON file, optionally pinned to the
//! reference hyperparameters, then overridden by individual flags.

use std::path::{Path, PathBuf};

use bihyper::detector::{MiSign, Mode, RefitSchedule, TrainConfig};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Dohsc,
    Do2hsc,
    TabularDohsc,
    TabularDo2hsc,
}

impl RunMode {
    pub fn detector_mode(self) -> Mode {
        match self {
            RunMode::Dohsc | RunMode::TabularDohsc => Mode::Dohsc,
            RunMode::Do2hsc | RunMode::TabularDo2hsc => Mode::Do2hsc,
        }
    }

    pub fn is_tabular(self) -> bool {
        matches!(self, RunMode::TabularDohsc | RunMode::TabularDo2hsc)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Dohsc => "dohsc",
            RunMode::Do2hsc => "do2hsc",
            RunMode::TabularDohsc => "tabular-dohsc",
            RunMode::TabularDo2hsc => "tabular-do2hsc",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Orthogonality {
    /// Closed-form SVD projection.
    #[default]
    Svd,
    /// Learned orthogonality penalty (not available).
    Penalty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MiSignArg {
    Maximize,
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RefitArg {
    PerEpoch,
    PerBatch,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub dataset: Option<PathBuf>,
    pub name: Option<String>,
    pub mode: Option<RunMode>,
    pub normal_class: Option<usize>,
    pub train: Option<TrainConfig>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::ingest(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::ingest(format!("{}: invalid config: {e}", path.display())))
    }
}

#[derive(Args, Clone, Debug, Default)]
pub struct RunArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset directory (TU format) or CSV file for tabular modes.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Dataset name, i.e. the `<name>_A.txt` file prefix.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<RunMode>,
    /// Index of the normal class among the sorted distinct label values.
    #[arg(long)]
    pub normal_class: Option<usize>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Joint-training epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, value_enum)]
    pub mi_sign: Option<MiSignArg>,
    #[arg(long, value_enum)]
    pub refit: Option<RefitArg>,
    #[arg(long, value_enum, default_value = "svd")]
    pub orthogonality: Orthogonality,
    /// Pin λ, k, k′, ν, epochs and depth to the reference values, over
    /// anything set in the config file.
    #[arg(long)]
    pub paper_defaults: bool,
}

/// Everything that determines a training run, and nothing else: it is what
/// the run stamp hashes, so output paths are deliberately left out.
#[derive(Clone, Debug, Serialize)]
pub struct ResolvedRun {
    pub name: String,
    pub mode: RunMode,
    pub normal_class: usize,
    pub train: TrainConfig,
}

fn pin_reference(cfg: &mut TrainConfig) {
    let r = TrainConfig::default();
    cfg.lambda = r.lambda;
    cfg.k = r.k;
    cfg.k_prime = r.k_prime;
    cfg.nu = r.nu;
    cfg.train_epochs = r.train_epochs;
    cfg.layers = r.layers;
}

impl RunArgs {
    /// Merge file, preset and flags; returns the run plus the dataset path.
    pub fn resolve(&self) -> Result<(ResolvedRun, PathBuf), CliError> {
        if self.orthogonality == Orthogonality::Penalty {
            return Err(bihyper::Error::NotImplemented(
                "learned orthogonality penalty; the projection is fitted in closed form",
            )
            .into());
        }
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let mut train = file.train.unwrap_or_default();
        if self.paper_defaults {
            pin_reference(&mut train);
        }
        macro_rules! flag {
            ($field:ident => $target:expr) => {
                if let Some(v) = self.$field {
                    $target = v;
                }
            };
        }
        flag!(nu => train.nu);
        flag!(lambda => train.lambda);
        flag!(epochs => train.train_epochs);
        flag!(seed => train.seed);
        flag!(learning_rate => train.learning_rate);
        flag!(batch_size => train.batch_size);
        if let Some(s) = self.mi_sign {
            train.mi_sign = match s {
                MiSignArg::Maximize => MiSign::Maximize,
                MiSignArg::Literal => MiSign::Literal,
            };
        }
        if let Some(r) = self.refit {
            train.refit = match r {
                RefitArg::PerEpoch => RefitSchedule::PerEpoch,
                RefitArg::PerBatch => RefitSchedule::PerBatch,
            };
        }
        train.validate()?;

        let dataset = self
            .dataset
            .clone()
            .or(file.dataset)
            .ok_or_else(|| CliError::usage("no dataset given (--dataset or config `dataset`)"))?;
        if !dataset.exists() {
            return Err(CliError::ingest(format!("dataset path {} does not exist", dataset.display())));
        }
        let mode = self.mode.or(file.mode).unwrap_or(RunMode::Dohsc);
        let name = match self.name.clone().or(file.name) {
            Some(n) => n,
            None if mode.is_tabular() => dataset
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            None => return Err(CliError::usage("no dataset name given (--name or config `name`)")),
        };
        let run = ResolvedRun {
            name,
            mode,
            normal_class: self.normal_class.or(file.normal_class).unwrap_or(0),
            train,
        };
        Ok((run, dataset))
    }
}
