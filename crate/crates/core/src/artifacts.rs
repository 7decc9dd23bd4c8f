//! On-disk formats: checkpoints, run metadata and scores.
//!
//! Every artifact carries a [`RunStamp`] (run id, config hash, seed). JSON
//! artifacts embed it directly; CSV artifacts keep a fixed header and get a
//! `<file>.meta.json` sidecar holding the stamp instead.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detector::{DetectorModel, TrainConfig};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
pub const SCORES_HEADER: &str = "graph_index,label,distance,score";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStamp {
    pub run_id: String,
    /// SHA-256 of the canonical JSON of the run configuration.
    pub config_hash: String,
    pub seed: u64,
}

impl RunStamp {
    /// Stamp derived from any serialisable run configuration. `serde_json`
    /// writes struct fields in declaration order, so equal configs hash equally.
    pub fn for_config(config: &impl Serialize, seed: u64) -> Result<RunStamp> {
        let canonical = serde_json::to_vec(config)?;
        let config_hash = hex::encode(Sha256::digest(&canonical));
        Ok(RunStamp {
            run_id: format!("run-{}-{seed}", &config_hash[..12]),
            config_hash,
            seed,
        })
    }
}

/// Versioned model checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub stamp: RunStamp,
    pub config: TrainConfig,
    pub model: DetectorModel,
}

impl Checkpoint {
    pub fn new(stamp: RunStamp, config: TrainConfig, model: DetectorModel) -> Checkpoint {
        Checkpoint {
            format_version: CHECKPOINT_VERSION,
            stamp,
            config,
            model,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
        let path = path.as_ref();
        let ckpt: Checkpoint = read_json(path)?;
        if ckpt.format_version != CHECKPOINT_VERSION {
            return Err(Error::ingest(
                path,
                format!(
                    "checkpoint format {} is not supported (expected {CHECKPOINT_VERSION})",
                    ckpt.format_version
                ),
            ));
        }
        Ok(ckpt)
    }
}

/// Choices that the method description leaves open, as recorded per run.
pub fn default_decisions() -> Vec<String> {
    [
        "optimizer: plain SGD with weight decay applied in the update",
        "learning rate default 1e-3 and weight decay default 1e-4 (not fixed by the method)",
        "MI term uses node and unprojected graph representations of the current mini-batch",
        "MI positives and negatives are fully enumerated per batch",
        "node and graph heads have independent parameters",
        "projection and center are refitted on the full training set after every epoch unless refit=per_batch",
        "unlabeled graphs use one-hot node degree features",
        "one nu sets both the sphere radius and the interval radii",
        "decision boundary radius is the (1 - nu) quantile of training distances",
    ]
    .into_iter()
    .map(String::from)
    .collect()
}

/// Per-run metadata written next to the checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub stamp: RunStamp,
    pub crate_version: String,
    pub dataset: String,
    pub mode: String,
    pub normal_class: Option<usize>,
    pub config: TrainConfig,
    /// Free-form description of inputs (feature construction, split sizes, …).
    pub inputs: serde_json::Value,
    pub decisions: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub graph_index: usize,
    pub label: u8,
    pub distance: f64,
    pub score: f64,
}

pub fn sidecar_path(path: impl AsRef<Path>) -> PathBuf {
    let path = path.as_ref();
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

pub fn write_json(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::ingest(path, format!("invalid JSON: {e}")))
}

/// Write a CSV body and its stamp sidecar.
pub fn write_stamped_csv(path: impl AsRef<Path>, body: &str, stamp: &RunStamp) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, body).map_err(|e| Error::io(path, e))?;
    write_json(sidecar_path(path), stamp)
}

pub fn read_stamp(csv_path: impl AsRef<Path>) -> Result<RunStamp> {
    read_json(sidecar_path(csv_path))
}

pub fn scores_csv(rows: &[ScoreRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Contract(format!("scores CSV: {e}")))?;
    }
    let body = w.into_inner().map_err(|e| Error::Contract(format!("scores CSV: {e}")))?;
    Ok(format!("{SCORES_HEADER}\n{}", String::from_utf8_lossy(&body)))
}

pub fn write_scores(path: impl AsRef<Path>, rows: &[ScoreRow], stamp: &RunStamp) -> Result<()> {
    write_stamped_csv(path, &scores_csv(rows)?, stamp)
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<(Vec<ScoreRow>, RunStamp)> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::ingest(path, e.to_string()))?;
    let header = reader
        .headers()
        .map_err(|e| Error::ingest(path, e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != SCORES_HEADER {
        return Err(Error::ingest(path, format!("unexpected header `{header}`")));
    }
    let rows = reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::ingest(path, format!("row {}: {e}", i + 1))))
        .collect::<Result<Vec<ScoreRow>>>()?;
    Ok((rows, read_stamp(path)?))
}
