#![allow(dead_code)]

use bihyper::diffcore::{Tape, Var};
use bihyper::DenseMatrix;
use rand::Rng;

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    DenseMatrix::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Entries uniform in ±[margin, 1 + margin], i.e. bounded away from zero.
pub fn away_from_zero(rows: usize, cols: usize, margin: f64, rng: &mut impl Rng) -> DenseMatrix {
    random_matrix(rows, cols, rng).map(|v| v + margin * v.signum())
}

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4)
}

/// Five-point central difference of `f` at 0 with step `h`.
pub fn central_difference(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h)
}

pub const FD_STEP: f64 = 1e-5;

/// Largest relative error between reverse-mode gradients of `build` and
/// central differences, over every entry of every input.
pub fn max_gradient_error(inputs: &[DenseMatrix], build: impl Fn(&mut Tape, &[Var]) -> Var) -> f64 {
    let eval = |mats: &[DenseMatrix]| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = mats.iter().map(|m| tape.param(m.clone())).collect();
        let out = build(&mut tape, &vars);
        tape.value(out).item().unwrap()
    };
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|m| tape.param(m.clone())).collect();
    let out = build(&mut tape, &vars);
    let grads = tape.backward(out).unwrap();

    let mut worst = 0.0f64;
    for (i, input) in inputs.iter().enumerate() {
        let zero = DenseMatrix::zeros(input.rows(), input.cols());
        let analytic = grads.get(vars[i]).unwrap_or(&zero);
        for j in 0..input.values().len() {
            let numeric = central_difference(
                |step| {
                    let mut shifted = inputs.to_vec();
                    shifted[i].values_mut()[j] += step;
                    eval(&shifted)
                },
                FD_STEP,
            );
            worst = worst.max(rel_err(analytic.values()[j], numeric));
        }
    }
    worst
}

/// O(n²) pairwise AUC: P(anomalous score > normal score), ties count 1/2.
pub fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                if si > sj {
                    wins += 1.0;
                } else if si == sj {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Smallest sample value whose empirical CDF reaches `q`, by brute force.
pub fn brute_quantile(values: &[f64], q: f64) -> f64 {
    let n = values.len() as f64;
    values
        .iter()
        .copied()
        .filter(|&v| values.iter().filter(|&&x| x <= v).count() as f64 / n >= q)
        .fold(f64::INFINITY, f64::min)
}
