//! Hypersphere (DOHSC) and bi-hypersphere (DO2HSC) one-class detectors.
//!
//! Training follows the same skeleton for both modes:
//!
//! 1. MI-only pretraining of the encoder (graph inputs only),
//! 2. fit the orthogonal projection on the whole training set and take the
//!    mean projected representation as the center,
//! 3. joint training of the contraction loss (DOHSC), or a short DOHSC
//!    warm-up, radii initialisation and the interval loss (DO2HSC),
//! 4. boundary estimation from training distances.
//!
//! The projection is refitted once per epoch by default (see
//! [`RefitSchedule`]), and the center is re-taken whenever the projection
//! changes. Within an epoch both are constants.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffcore::{clip_grad_norm, decay_penalty, grad_norm, sgd_step, Tape, Var};
use crate::encoder::{EncoderParams, EncoderShape, TabularEncoder, Trainable};
use crate::error::{Error, Result};
use crate::evalmetrics::empirical_quantile;
use crate::graphdata::{batch_order, GraphBatch, GraphDataset, Standardizer};
use crate::linalg::DenseMatrix;
use crate::miloss::jsd_mi;
use crate::projection::{apply_projection, apply_projection_var, fit_projection, ProjectionState};

/// Graphs per chunk when embedding a whole dataset. Fixed so that results do
/// not depend on the thread count.
const EMBED_CHUNK: usize = 64;
const EARLY_STOP_WINDOW: usize = 20;
const EARLY_STOP_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_GRAD_CLIP: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Dohsc,
    Do2hsc,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefitSchedule {
    /// Refit from the whole training set after every epoch.
    #[default]
    PerEpoch,
    /// Refit from each mini-batch before its loss is computed.
    PerBatch,
}

/// Direction of the MI term inside the joint loss.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiSign {
    /// Minimise `−λ·I`, i.e. maximise the MI estimate.
    #[default]
    Maximize,
    /// Minimise `+λ·I` as the joint objective is printed (ablation only).
    Literal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lambda: f64,
    /// Weight decay `μ`.
    pub mu: f64,
    pub learning_rate: f64,
    pub pretrain_epochs: usize,
    /// DOHSC warm-up epochs before the DO2HSC radii are initialised.
    pub radii_init_epochs: usize,
    pub train_epochs: usize,
    pub nu: f64,
    pub batch_size: usize,
    /// GIN depth.
    pub layers: usize,
    pub k: usize,
    pub k_prime: usize,
    pub seed: u64,
    pub refit: RefitSchedule,
    pub mi_sign: MiSign,
    pub early_stop: bool,
    /// Global gradient-norm cap applied before each update; `None` disables it.
    pub grad_clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 10.0,
            mu: 1e-4,
            learning_rate: 1e-3,
            pretrain_epochs: 1,
            radii_init_epochs: 5,
            train_epochs: 500,
            nu: 0.01,
            batch_size: 64,
            layers: 4,
            k: 16,
            k_prime: 8,
            seed: 0,
            refit: RefitSchedule::PerEpoch,
            mi_sign: MiSign::Maximize,
            early_stop: false,
            grad_clip: Some(DEFAULT_GRAD_CLIP),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Contract(msg));
        if !(self.nu > 0.0 && self.nu < 0.5) {
            return bad(format!("nu = {} must lie in (0, 0.5)", self.nu));
        }
        for (name, v) in [
            ("batch_size", self.batch_size),
            ("layers", self.layers),
            ("k", self.k),
            ("k_prime", self.k_prime),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.k_prime > self.k {
            return bad(format!("k_prime = {} exceeds k = {}", self.k_prime, self.k));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if !(self.lambda.is_finite() && self.mu.is_finite() && self.mu >= 0.0) {
            return bad("lambda must be finite and mu nonnegative".into());
        }
        if let Some(c) = self.grad_clip {
            if !(c.is_finite() && c > 0.0) {
                return bad(format!("gradient clip {c} must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    Sphere { radius: f64 },
    Shell { r_min: f64, r_max: f64 },
}

impl Boundary {
    pub fn score(&self, distance: f64) -> f64 {
        match *self {
            Boundary::Sphere { radius } => dohsc_score(distance, radius),
            Boundary::Shell { r_min, r_max } => do2hsc_score(distance, r_min, r_max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backbone {
    Graph(EncoderParams),
    Tabular {
        encoder: TabularEncoder,
        standardizer: Standardizer,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub mode: Mode,
    pub backbone: Backbone,
    pub projection: ProjectionState,
    pub center: Vec<f64>,
    pub boundary: Boundary,
}

/// Distance and score of one instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredPoint {
    pub distance: f64,
    pub score: f64,
}

impl DetectorModel {
    /// Projected graph-level representations for every graph of `ds`.
    pub fn project_graphs(&self, ds: &GraphDataset) -> Result<DenseMatrix> {
        let Backbone::Graph(encoder) = &self.backbone else {
            return Err(Error::Contract("model was trained on tabular data".into()));
        };
        apply_projection(&embed_dataset(encoder, ds)?, &self.projection)
    }

    pub fn project_rows(&self, rows: &DenseMatrix) -> Result<DenseMatrix> {
        let Backbone::Tabular {
            encoder,
            standardizer,
        } = &self.backbone
        else {
            return Err(Error::Contract("model was trained on graph data".into()));
        };
        apply_projection(&encoder.embed(&standardizer.apply(rows)?)?, &self.projection)
    }

    fn score_projected(&self, projected: &DenseMatrix) -> Vec<ScoredPoint> {
        distances_to(projected, &self.center)
            .into_iter()
            .map(|distance| ScoredPoint {
                distance,
                score: self.boundary.score(distance),
            })
            .collect()
    }

    pub fn score_graphs(&self, ds: &GraphDataset) -> Result<Vec<ScoredPoint>> {
        Ok(self.score_projected(&self.project_graphs(ds)?))
    }

    pub fn score_rows(&self, rows: &DenseMatrix) -> Result<Vec<ScoredPoint>> {
        Ok(self.score_projected(&self.project_rows(rows)?))
    }
}

/// Graph representations `H` of a whole dataset, embedded in fixed chunks.
pub fn embed_dataset(encoder: &EncoderParams, ds: &GraphDataset) -> Result<DenseMatrix> {
    let order: Vec<usize> = (0..ds.len()).collect();
    let parts = order
        .par_chunks(EMBED_CHUNK)
        .map(|chunk| encoder.embed_graphs(&GraphBatch::assemble(&ds.graphs, chunk)?))
        .collect::<Result<Vec<_>>>()?;
    DenseMatrix::vcat(&parts.iter().collect::<Vec<_>>())
}

/// Euclidean distance of every row to `center`.
pub fn distances_to(projected: &DenseMatrix, center: &[f64]) -> Vec<f64> {
    (0..projected.rows())
        .map(|r| {
            projected
                .row(r)
                .iter()
                .zip(center)
                .map(|(x, c)| (x - c) * (x - c))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Mean of the projected training representations.
pub fn init_center(projected: &DenseMatrix) -> Result<Vec<f64>> {
    if projected.rows() == 0 {
        return Err(Error::Contract("center of an empty set".into()));
    }
    Ok(projected.column_means())
}

/// The `(1 − ν)` empirical quantile of training distances.
pub fn compute_radius(distances: &[f64], nu: f64) -> Result<f64> {
    empirical_quantile(distances, 1.0 - nu)
}

/// `(r_min, r_max)` as the `ν` and `(1 − ν)` empirical quantiles.
pub fn init_radii(distances: &[f64], nu: f64) -> Result<(f64, f64)> {
    let mut sorted = distances.to_vec();
    if sorted.is_empty() {
        return Err(Error::Contract("radii of an empty sample".into()));
    }
    sorted.sort_by(f64::total_cmp);
    let lo = crate::evalmetrics::quantile_of_sorted(&sorted, nu);
    let hi = crate::evalmetrics::quantile_of_sorted(&sorted, 1.0 - nu);
    Ok((lo.min(hi), hi.max(lo)))
}

/// Like [`init_radii`], plus a warning when the interval is degenerate.
pub fn init_radii_checked(distances: &[f64], nu: f64) -> Result<(f64, f64, Option<String>)> {
    let (r_min, r_max) = init_radii(distances, nu)?;
    let warning = (r_min == r_max).then(|| {
        format!("r_min = r_max = {r_min}: the interval degenerates to a single shell")
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    Ok((r_min, r_max, warning))
}

/// `d² − r̂²`; positive means anomalous. Factored so that the sign is exact
/// even when `d` and `r̂` differ by one ulp.
pub fn dohsc_score(distance: f64, radius: f64) -> f64 {
    (distance - radius) * (distance + radius)
}

/// `(d − r_max)(d − r_min)`; positive outside `[r_min, r_max]`.
pub fn do2hsc_score(distance: f64, r_min: f64, r_max: f64) -> f64 {
    (distance - r_max) * (distance - r_min)
}

/// Tape handles for the pieces of one loss evaluation.
#[derive(Clone, Copy, Debug)]
pub struct LossParts {
    pub total: Var,
    /// Contraction (DOHSC) or interval (DO2HSC) term.
    pub decision: Var,
    pub mi: Option<Var>,
    pub decay: f64,
}

fn add_mi_and_decay(
    tape: &mut Tape,
    decision: Var,
    mi: Option<Var>,
    lambda: f64,
    sign: MiSign,
    decay: f64,
) -> Result<LossParts> {
    let mut total = decision;
    if let Some(mi) = mi {
        let factor = match sign {
            MiSign::Maximize => -lambda,
            MiSign::Literal => lambda,
        };
        let weighted = tape.scale(mi, factor);
        total = tape.add(total, weighted)?;
    }
    // The decay gradient is applied by sgd_step, so only its value enters here.
    let total = tape.add_scalar(total, decay);
    Ok(LossParts {
        total,
        decision,
        mi,
        decay,
    })
}

/// Mean squared distance to `center` + λ·MI term + `decay`.
pub fn dohsc_total_loss(
    tape: &mut Tape,
    projected: Var,
    center: &[f64],
    mi: Option<Var>,
    lambda: f64,
    sign: MiSign,
    decay: f64,
) -> Result<LossParts> {
    let sq = tape.row_squared_distance(projected, center)?;
    let contraction = tape.mean(sq)?;
    add_mi_and_decay(tape, contraction, mi, lambda, sign, decay)
}

/// Interval term `mean(max{d, r_max} − min{d, r_min})`, written as
/// `(r_max − r_min) + mean(relu(d − r_max) + relu(r_min − d))` so its value is
/// never below `r_max − r_min`, plus λ·MI term + `decay`.
#[allow(clippy::too_many_arguments)]
pub fn do2hsc_total_loss(
    tape: &mut Tape,
    distances: Var,
    r_min: f64,
    r_max: f64,
    mi: Option<Var>,
    lambda: f64,
    sign: MiSign,
    decay: f64,
) -> Result<LossParts> {
    if r_min > r_max {
        return Err(Error::Contract(format!("r_min {r_min} > r_max {r_max}")));
    }
    let above = tape.add_scalar(distances, -r_max);
    let above = tape.relu(above);
    let flipped = tape.scale(distances, -1.0);
    let below = tape.add_scalar(flipped, r_min);
    let below = tape.relu(below);
    let excess = tape.add(above, below)?;
    let excess = tape.mean(excess)?;
    let decision = tape.add_scalar(excess, r_max - r_min);
    add_mi_and_decay(tape, decision, mi, lambda, sign, decay)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub phase: String,
    pub loss: f64,
    pub decision: f64,
    pub mi: f64,
    pub decay: f64,
    /// Largest pre-clipping gradient norm seen in the epoch.
    pub max_grad_norm: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochLog>,
    /// Every interval-term value of the DO2HSC phase, step by step.
    pub decision_terms: Vec<f64>,
    /// `r_max − r_min` for the DO2HSC phase.
    pub decision_bound: Option<f64>,
    pub warnings: Vec<String>,
    pub stopped_early_at: Option<usize>,
    /// Epochs whose end-of-epoch refit was rank-deficient, so the previous
    /// projection and center were kept.
    pub stale_refits: Vec<usize>,
}

impl TrainReport {
    pub const CSV_HEADER: &'static str = "epoch,phase,loss,decision,mi,decay,max_grad_norm";

    pub fn loss_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                e.epoch, e.phase, e.loss, e.decision, e.mi, e.decay, e.max_grad_norm
            ));
        }
        out
    }
}

struct BatchForward {
    vars: Vec<Var>,
    big_h: Var,
    mi: Option<Var>,
    warning: Option<String>,
}

/// What the training loop needs from a representation learner.
trait Learner: Trainable {
    fn train_len(&self) -> usize;
    fn has_mi(&self) -> bool;
    fn forward(&self, tape: &mut Tape, members: &[usize]) -> Result<BatchForward>;
    fn embed_train(&self) -> Result<DenseMatrix>;
}

struct GraphLearner<'a> {
    data: &'a GraphDataset,
    encoder: EncoderParams,
}

impl Trainable for GraphLearner<'_> {
    fn parameters(&self) -> Vec<&crate::diffcore::Parameter> {
        self.encoder.parameters()
    }
    fn parameters_mut(&mut self) -> Vec<&mut crate::diffcore::Parameter> {
        self.encoder.parameters_mut()
    }
}

impl Learner for GraphLearner<'_> {
    fn train_len(&self) -> usize {
        self.data.len()
    }

    fn has_mi(&self) -> bool {
        true
    }

    fn forward(&self, tape: &mut Tape, members: &[usize]) -> Result<BatchForward> {
        let batch = GraphBatch::assemble(&self.data.graphs, members)?;
        let bound = self.encoder.bind(tape);
        let (h, big_h) = self.encoder.forward(tape, &bound, &batch)?;
        let mi = jsd_mi(tape, h, big_h, &batch.graph_indicator)?;
        Ok(BatchForward {
            vars: bound.vars,
            big_h,
            mi: Some(mi.value),
            warning: mi.warning,
        })
    }

    fn embed_train(&self) -> Result<DenseMatrix> {
        embed_dataset(&self.encoder, self.data)
    }
}

struct TabularLearner<'a> {
    rows: &'a DenseMatrix,
    encoder: TabularEncoder,
}

impl Trainable for TabularLearner<'_> {
    fn parameters(&self) -> Vec<&crate::diffcore::Parameter> {
        self.encoder.parameters()
    }
    fn parameters_mut(&mut self) -> Vec<&mut crate::diffcore::Parameter> {
        self.encoder.parameters_mut()
    }
}

impl Learner for TabularLearner<'_> {
    fn train_len(&self) -> usize {
        self.rows.rows()
    }

    fn has_mi(&self) -> bool {
        false
    }

    fn forward(&self, tape: &mut Tape, members: &[usize]) -> Result<BatchForward> {
        let vars = self.encoder.bind_all(tape);
        let x = tape.constant(self.rows.select_rows(members)?);
        let big_h = self.encoder.mlp.forward(tape, &vars, x)?;
        Ok(BatchForward {
            vars,
            big_h,
            mi: None,
            warning: None,
        })
    }

    fn embed_train(&self) -> Result<DenseMatrix> {
        self.encoder.embed(self.rows)
    }
}

/// Frame shared by all distances within an epoch.
struct Frame {
    projection: ProjectionState,
    center: Vec<f64>,
}

impl Frame {
    fn fit(h: &DenseMatrix, k_prime: usize) -> Result<Frame> {
        let projection = fit_projection(h, k_prime)?;
        let center = init_center(&apply_projection(h, &projection)?)?;
        Ok(Frame { projection, center })
    }
}

enum Objective {
    MiOnly,
    Contraction,
    Interval { r_min: f64, r_max: f64 },
}

impl Objective {
    fn phase(&self) -> &'static str {
        match self {
            Objective::MiOnly => "pretrain",
            Objective::Contraction => "dohsc",
            Objective::Interval { .. } => "do2hsc",
        }
    }
}

struct Trainer<'c, L: Learner> {
    learner: L,
    config: &'c TrainConfig,
    report: TrainReport,
    global_epoch: usize,
}

impl<L: Learner> Trainer<'_, L> {
    fn epoch_seed(&self) -> u64 {
        self.config
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(self.global_epoch as u64)
    }

    fn warn(&mut self, w: String) {
        if !self.report.warnings.contains(&w) {
            self.report.warnings.push(w);
        }
    }

    /// One pass over the training set. Returns the (possibly refitted) frame.
    fn epoch(&mut self, objective: &Objective, mut frame: Option<Frame>) -> Result<Option<Frame>> {
        let cfg = self.config;
        let batches = batch_order(self.learner.train_len(), cfg.batch_size, self.epoch_seed(), true)?;
        let mut sums = EpochLog {
            epoch: self.global_epoch,
            phase: objective.phase().to_string(),
            ..EpochLog::default()
        };
        for members in &batches {
            let mut tape = Tape::new();
            let fwd = self.learner.forward(&mut tape, members)?;
            if let Some(w) = fwd.warning {
                self.warn(w);
            }
            let decay = decay_penalty(self.learner.parameters(), cfg.mu);

            if cfg.refit == RefitSchedule::PerBatch && !matches!(objective, Objective::MiOnly) {
                if let Ok(f) = Frame::fit(tape.value(fwd.big_h), cfg.k_prime) {
                    frame = Some(f);
                }
            }

            let parts = match objective {
                Objective::MiOnly => {
                    let mi = fwd.mi.ok_or_else(|| Error::Contract("MI pretraining without an MI term".into()))?;
                    let decision = tape.constant(DenseMatrix::scalar(0.0));
                    add_mi_and_decay(&mut tape, decision, Some(mi), 1.0, cfg.mi_sign, decay)?
                }
                Objective::Contraction => {
                    let f = frame.as_ref().expect("frame fitted before joint training");
                    let projected = apply_projection_var(&mut tape, fwd.big_h, &f.projection)?;
                    dohsc_total_loss(&mut tape, projected, &f.center, fwd.mi, cfg.lambda, cfg.mi_sign, decay)?
                }
                Objective::Interval { r_min, r_max } => {
                    let f = frame.as_ref().expect("frame fitted before joint training");
                    let projected = apply_projection_var(&mut tape, fwd.big_h, &f.projection)?;
                    let sq = tape.row_squared_distance(projected, &f.center)?;
                    let d = tape.sqrt(sq)?;
                    let parts =
                        do2hsc_total_loss(&mut tape, d, *r_min, *r_max, fwd.mi, cfg.lambda, cfg.mi_sign, decay)?;
                    let value = tape.value(parts.decision).item()?;
                    // written negated so that a NaN term also trips the check
                    #[allow(clippy::neg_cmp_op_on_partial_ord)]
                    if !(value >= r_max - r_min) {
                        return Err(Error::Numeric(format!(
                            "interval term {value} fell below its bound {}",
                            r_max - r_min
                        )));
                    }
                    self.report.decision_terms.push(value);
                    parts
                }
            };

            let loss = tape.value(parts.total).item()?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch: self.global_epoch,
                    loss,
                });
            }
            sums.loss += loss;
            sums.decision += tape.value(parts.decision).item()?;
            sums.mi += parts.mi.map_or(0.0, |m| tape.value(m).values()[0]);
            sums.decay += decay;

            let grads = tape.backward(parts.total)?;
            self.learner.accumulate(&fwd.vars, &grads)?;
            let mut params = self.learner.parameters_mut();
            let norm = match cfg.grad_clip {
                Some(c) => clip_grad_norm(&mut params, c),
                None => grad_norm(&params),
            };
            sums.max_grad_norm = sums.max_grad_norm.max(norm);
            sgd_step(&mut params, cfg.learning_rate, cfg.mu);
        }
        let n = batches.len() as f64;
        sums.loss /= n;
        sums.decision /= n;
        sums.mi /= n;
        sums.decay /= n;
        log::debug!(
            "epoch {} [{}] loss {:.6} decision {:.6} mi {:.6}",
            sums.epoch,
            sums.phase,
            sums.loss,
            sums.decision,
            sums.mi
        );
        self.report.epochs.push(sums);
        self.global_epoch += 1;

        if matches!(objective, Objective::MiOnly) {
            return Ok(frame);
        }
        match (self.refit(), frame) {
            (Ok(fresh), _) => Ok(Some(fresh)),
            (Err(Error::RankDeficient { .. }), Some(previous)) => {
                self.report.stale_refits.push(self.global_epoch - 1);
                Ok(Some(previous))
            }
            (Err(e), _) => Err(e),
        }
    }

    fn refit(&self) -> Result<Frame> {
        Frame::fit(&self.learner.embed_train()?, self.config.k_prime)
    }

    fn converged(&self) -> bool {
        if !self.config.early_stop {
            return false;
        }
        let e = &self.report.epochs;
        if e.len() <= EARLY_STOP_WINDOW {
            return false;
        }
        let (now, then) = (e[e.len() - 1].loss, e[e.len() - 1 - EARLY_STOP_WINDOW].loss);
        ((now - then) / then.abs().max(f64::MIN_POSITIVE)).abs() < EARLY_STOP_TOLERANCE
    }

    fn joint(&mut self, objective: &Objective, epochs: usize, mut frame: Frame) -> Result<Frame> {
        for _ in 0..epochs {
            frame = self.epoch(objective, Some(frame))?.expect("joint epochs refit");
            if self.converged() {
                self.report.stopped_early_at = Some(self.global_epoch);
                break;
            }
        }
        Ok(frame)
    }

    fn distances(&self, frame: &Frame) -> Result<Vec<f64>> {
        let projected = apply_projection(&self.learner.embed_train()?, &frame.projection)?;
        Ok(distances_to(&projected, &frame.center))
    }

    fn run(mut self, mode: Mode) -> Result<(L, Frame, Boundary, TrainReport)> {
        self.config.validate()?;
        if self.learner.has_mi() {
            for _ in 0..self.config.pretrain_epochs {
                self.epoch(&Objective::MiOnly, None)?;
            }
        }
        let frame = self.refit()?;
        let (frame, boundary) = match mode {
            Mode::Dohsc => {
                let frame = self.joint(&Objective::Contraction, self.config.train_epochs, frame)?;
                let radius = compute_radius(&self.distances(&frame)?, self.config.nu)?;
                (frame, Boundary::Sphere { radius })
            }
            Mode::Do2hsc => {
                let frame = self.joint(&Objective::Contraction, self.config.radii_init_epochs, frame)?;
                let (r_min, r_max, warning) = init_radii_checked(&self.distances(&frame)?, self.config.nu)?;
                if let Some(w) = warning {
                    self.warn(w);
                }
                self.report.decision_bound = Some(r_max - r_min);
                let frame = self.joint(&Objective::Interval { r_min, r_max }, self.config.train_epochs, frame)?;
                (frame, Boundary::Shell { r_min, r_max })
            }
        };
        if let (Some(first), n) = (self.report.stale_refits.first(), self.report.stale_refits.len()) {
            let w = format!(
                "projection refit was rank-deficient after {n} epoch(s) (first: epoch {first}); the previous projection was kept each time"
            );
            log::warn!("{w}");
            self.warn(w);
        }
        Ok((self.learner, frame, boundary, self.report))
    }
}

fn train_graphs(ds: &GraphDataset, config: &TrainConfig, mode: Mode) -> Result<(DetectorModel, TrainReport)> {
    if ds.is_empty() {
        return Err(Error::Contract("empty training set".into()));
    }
    let shape = EncoderShape {
        input_dim: ds.feature_dim,
        layers: config.layers,
        hidden: config.k,
    };
    let trainer = Trainer {
        learner: GraphLearner {
            data: ds,
            encoder: EncoderParams::init(shape, config.seed),
        },
        config,
        report: TrainReport::default(),
        global_epoch: 0,
    };
    let (learner, frame, boundary, report) = trainer.run(mode)?;
    Ok((
        DetectorModel {
            mode,
            backbone: Backbone::Graph(learner.encoder),
            projection: frame.projection,
            center: frame.center,
            boundary,
        },
        report,
    ))
}

/// Hypersphere contraction on a training set of normal graphs.
pub fn train_dohsc(ds: &GraphDataset, config: &TrainConfig) -> Result<(DetectorModel, TrainReport)> {
    train_graphs(ds, config, Mode::Dohsc)
}

/// Bi-hypersphere compression on a training set of normal graphs.
pub fn train_do2hsc(ds: &GraphDataset, config: &TrainConfig) -> Result<(DetectorModel, TrainReport)> {
    train_graphs(ds, config, Mode::Do2hsc)
}

/// Either detector on numeric rows with an MLP encoder and no MI term.
/// Columns are standardised with the training statistics.
pub fn train_tabular(rows: &DenseMatrix, config: &TrainConfig, mode: Mode) -> Result<(DetectorModel, TrainReport)> {
    train_tabular_with(rows, config, mode, None)
}

pub(crate) fn train_tabular_with(
    rows: &DenseMatrix,
    config: &TrainConfig,
    mode: Mode,
    encoder: Option<TabularEncoder>,
) -> Result<(DetectorModel, TrainReport)> {
    if rows.rows() == 0 {
        return Err(Error::Contract("empty training set".into()));
    }
    let standardizer = Standardizer::fit(rows);
    let standardized = standardizer.apply(rows)?;
    let encoder = encoder.unwrap_or_else(|| TabularEncoder::init(rows.cols(), config.k, config.seed));
    let trainer = Trainer {
        learner: TabularLearner {
            rows: &standardized,
            encoder,
        },
        config,
        report: TrainReport::default(),
        global_epoch: 0,
    };
    let (learner, frame, boundary, report) = trainer.run(mode)?;
    Ok((
        DetectorModel {
            mode,
            backbone: Backbone::Tabular {
                encoder: learner.encoder,
                standardizer,
            },
            projection: frame.projection,
            center: frame.center,
            boundary,
        },
        report,
    ))
}
