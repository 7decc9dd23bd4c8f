//! Distances of isotropic Gaussian samples from their mean.
//!
//! In high dimension nearly all of the mass of `N(0, I_d)` sits in a thin
//! shell of radius about `√d`, so a ball around the center is mostly empty.
//! This module samples those distances, tabulates their quantiles, checks
//! the concentration lower bound
//!
//! ```text
//! P(‖z‖ ≥ √(d − 2√(d t))) ≥ 1 − e^{−t}
//! ```
//!
//! and builds a mixture where one anomaly group sits *inside* the normal
//! shell, which a single sphere cannot flag but an interval can.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{do2hsc_score, dohsc_score};
use crate::error::{Error, Result};
use crate::evalmetrics::{auc, distance_histogram, quantile_of_sorted, HistogramBin, ScoredSet};

/// Vectors drawn per RNG chunk; chunk `c` uses ChaCha stream `c`.
const CHUNK: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSample {
    pub dimension: usize,
    pub seed: u64,
    pub distances: Vec<f64>,
}

/// Standard normal pairs by Box–Muller.
fn normals(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for pair in out.chunks_mut(2) {
        // 1 − U lies in (0, 1], so the log is finite
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        pair[0] = r * (TAU * u2).cos();
        if let Some(second) = pair.get_mut(1) {
            *second = r * (TAU * u2).sin();
        }
    }
}

/// `n` standard normal vectors in `d` dimensions, each mapped through `f`.
fn sample_map<T: Send>(
    d: usize,
    n: usize,
    seed: u64,
    f: impl Fn(&[f64]) -> T + Sync,
) -> Vec<T> {
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            let mut z = vec![0.0; d];
            (0..len)
                .map(|_| {
                    normals(&mut rng, &mut z);
                    f(&z)
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

fn check_counts(d: usize, n: usize) -> Result<()> {
    if d == 0 || n == 0 {
        return Err(Error::Contract(format!("need d >= 1 and n >= 1, got d = {d}, n = {n}")));
    }
    Ok(())
}

/// Euclidean norms of `n` standard normal vectors in `d` dimensions.
pub fn sample_distances(d: usize, n: usize, seed: u64) -> Result<GaussianSample> {
    check_counts(d, n)?;
    let distances = sample_map(d, n, seed, |z| z.iter().map(|x| x * x).sum::<f64>().sqrt());
    Ok(GaussianSample {
        dimension: d,
        seed,
        distances,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    pub dims: Vec<usize>,
    pub quantiles: Vec<f64>,
    /// `values[i][j]`: quantile `j` of the distances in dimension `i`.
    pub values: Vec<Vec<f64>>,
}

impl QuantileTable {
    pub fn get(&self, d: usize, q: f64) -> Option<f64> {
        let i = self.dims.iter().position(|&x| x == d)?;
        let j = self.quantiles.iter().position(|&x| x == q)?;
        Some(self.values[i][j])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("dimension");
        for q in &self.quantiles {
            out.push_str(&format!(",q{q}"));
        }
        out.push('\n');
        for (d, row) in self.dims.iter().zip(&self.values) {
            out.push_str(&d.to_string());
            for v in row {
                out.push_str(&format!(",{v:.4}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Empirical distance quantiles for every dimension in `dims`.
pub fn quantile_table(dims: &[usize], quantiles: &[f64], n: usize, seed: u64) -> Result<QuantileTable> {
    if let Some(q) = quantiles.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
        return Err(Error::Contract(format!("quantile {q} outside (0, 1)")));
    }
    let values = dims
        .iter()
        .map(|&d| {
            let mut s = sample_distances(d, n, seed)?.distances;
            s.sort_by(f64::total_cmp);
            Ok(quantiles.iter().map(|&q| quantile_of_sorted(&s, q)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(QuantileTable {
        dims: dims.to_vec(),
        quantiles: quantiles.to_vec(),
        values,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub d: usize,
    pub t: f64,
    pub bound: f64,
    /// `1 − e^{−t}`
    pub required: f64,
    pub empirical_fraction: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Monte-Carlo check of the shell lower bound for one `(d, t)`.
///
/// When `d − 2√(dt) < 0` the bound is taken as 0, which every sample meets.
pub fn check_prop1(d: usize, t: f64, n: usize, seed: u64) -> Result<BoundCheck> {
    check_counts(d, n)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Contract(format!("t = {t} must be finite and nonnegative")));
    }
    let df = d as f64;
    let bound = (df - 2.0 * (df * t).sqrt()).max(0.0).sqrt();
    let required = 1.0 - (-t).exp();
    let distances = sample_distances(d, n, seed)?.distances;
    let fraction = distances.iter().filter(|&&x| x >= bound).count() as f64 / n as f64;
    let slack = 3.0 * (required * (1.0 - required) / n as f64).sqrt();
    Ok(BoundCheck {
        d,
        t,
        bound,
        required,
        empirical_fraction: fraction,
        slack,
        holds: fraction >= required - slack,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureGroup {
    pub name: String,
    pub count: usize,
    /// Isotropic variance of the group.
    pub variance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupResult {
    pub name: String,
    pub mean_distance: f64,
    /// Fraction with a positive sphere score (`d > r̂`).
    pub sphere_detection_rate: f64,
    /// Fraction with a positive interval score (`d` outside `[r_min, r_max]`).
    pub interval_detection_rate: f64,
    pub sphere_auc: f64,
    pub interval_auc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureReport {
    pub dimension: usize,
    pub nu: f64,
    pub radius: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// Fraction of normals inside `[r_min, r_max]`.
    pub normal_inside_fraction: f64,
    pub groups: Vec<GroupResult>,
    pub sphere_scores: ScoredSet,
    pub interval_scores: ScoredSet,
    /// Distances of all points (normals first), for histogram export.
    pub distances: Vec<f64>,
    pub labels: Vec<u8>,
}

impl MixtureReport {
    pub fn histogram(&self, bins: usize) -> Result<Vec<HistogramBin>> {
        distance_histogram(&self.distances, &self.labels, bins)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub dimension: usize,
    pub normals: usize,
    pub groups: Vec<MixtureGroup>,
    pub nu: f64,
}

impl Default for MixtureSpec {
    /// 10,000 standard normals in 16 dimensions against three shifted groups
    /// with variances 1/10, 1 and 5.
    fn default() -> Self {
        let group = |name: &str, count, variance| MixtureGroup {
            name: name.into(),
            count,
            variance,
        };
        MixtureSpec {
            dimension: 16,
            normals: 10_000,
            groups: vec![
                group("shrunk", 1000, 0.1),
                group("unit", 500, 1.0),
                group("wide", 2000, 5.0),
            ],
            nu: 0.05,
        }
    }
}

/// Score the mixture with the true center 0 and radii taken from the normals.
pub fn mixture_demo(spec: &MixtureSpec, seed: u64) -> Result<MixtureReport> {
    check_counts(spec.dimension, spec.normals)?;
    if !(spec.nu > 0.0 && spec.nu < 0.5) {
        return Err(Error::Contract(format!("nu = {} must lie in (0, 0.5)", spec.nu)));
    }
    let d = spec.dimension;
    let normal = sample_distances(d, spec.normals, seed)?.distances;
    let mut sorted = normal.clone();
    sorted.sort_by(f64::total_cmp);
    let radius = quantile_of_sorted(&sorted, 1.0 - spec.nu);
    let (r_min, r_max) = (quantile_of_sorted(&sorted, spec.nu), radius);

    let mut distances = normal.clone();
    let mut labels = vec![0u8; normal.len()];
    let mut groups = Vec::new();
    for (g, group) in spec.groups.iter().enumerate() {
        // each group gets its own mean and its own sampling seed
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX - g as u64);
        let mu: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let sd = group.variance.sqrt();
        let group_seed = seed.wrapping_add(0x5851_F42D_4C95_7F2D_u64.wrapping_mul(g as u64 + 1));
        let dist = sample_map(d, group.count, group_seed, |z| {
            z.iter()
                .zip(&mu)
                .map(|(x, m)| (m + sd * x).powi(2))
                .sum::<f64>()
                .sqrt()
        });

        let rate = |f: &dyn Fn(f64) -> f64| dist.iter().filter(|&&x| f(x) > 0.0).count() as f64 / dist.len() as f64;
        let scored = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
            let scores = normal.iter().chain(&dist).map(|&x| f(x)).collect();
            let labels = std::iter::repeat_n(0u8, normal.len()).chain(std::iter::repeat_n(1u8, dist.len())).collect();
            auc(&ScoredSet::new(scores, labels)?)
        };
        let sphere = |x: f64| dohsc_score(x, radius);
        let interval = |x: f64| do2hsc_score(x, r_min, r_max);
        groups.push(GroupResult {
            name: group.name.clone(),
            mean_distance: dist.iter().sum::<f64>() / dist.len().max(1) as f64,
            sphere_detection_rate: rate(&sphere),
            interval_detection_rate: rate(&interval),
            sphere_auc: scored(&sphere)?,
            interval_auc: scored(&interval)?,
        });
        labels.extend(std::iter::repeat_n(1u8, dist.len()));
        distances.extend(dist);
    }

    let inside = normal.iter().filter(|&&x| x >= r_min && x <= r_max).count() as f64 / normal.len() as f64;
    let sphere_scores = ScoredSet::new(distances.iter().map(|&x| dohsc_score(x, radius)).collect(), labels.clone())?;
    let interval_scores = ScoredSet::new(
        distances.iter().map(|&x| do2hsc_score(x, r_min, r_max)).collect(),
        labels.clone(),
    )?;
    Ok(MixtureReport {
        dimension: d,
        nu: spec.nu,
        radius,
        r_min,
        r_max,
        normal_inside_fraction: inside,
        groups,
        sphere_scores,
        interval_scores,
        distances,
        labels,
    })
}
