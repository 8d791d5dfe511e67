#![allow(dead_code)]

use std::collections::BTreeSet;

use hierclass::{FeatureMatrix, LabelMatrix};
use hierclass::learner::loss_and_gradient;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn animals() -> (FeatureMatrix, LabelMatrix) {
    (
        FeatureMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap(),
        LabelMatrix::new([
            ["Animal", "Mammal", "Cat"],
            ["Animal", "Reptile", "Turtle"],
        ])
        .unwrap(),
    )
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random label rows with trailing missing cells.
///
/// Labels are drawn from `labels_per_level` symbols per level; with
/// probability `p_missing` a row stops early (but never before level 1).
pub fn random_labels(
    rng: &mut impl Rng,
    n_samples: usize,
    n_levels: usize,
    labels_per_level: usize,
    p_missing: f64,
) -> LabelMatrix {
    let rows: Vec<Vec<String>> = (0..n_samples)
        .map(|_| {
            let depth = if rng.random_bool(p_missing) {
                rng.random_range(1..=n_levels)
            } else {
                n_levels
            };
            (0..n_levels)
                .map(|k| {
                    if k < depth {
                        format!("{}", (b'a' + rng.random_range(0..labels_per_level) as u8) as char)
                    } else {
                        String::new()
                    }
                })
                .collect()
        })
        .collect();
    LabelMatrix::with_levels(rows, n_levels).unwrap()
}

pub fn random_features(rng: &mut impl Rng, n_samples: usize, n_features: usize) -> FeatureMatrix {
    let rows: Vec<Vec<f64>> = (0..n_samples)
        .map(|_| (0..n_features).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect();
    FeatureMatrix::from_rows_with_width(&rows, n_features).unwrap()
}

/// Features loosely tied to the label path so learners have something to fit.
pub fn informative_features(rng: &mut impl Rng, labels: &LabelMatrix, n_features: usize) -> FeatureMatrix {
    let rows: Vec<Vec<f64>> = labels
        .rows()
        .iter()
        .map(|row| {
            (0..n_features)
                .map(|j| {
                    let signal: f64 = row
                        .iter()
                        .enumerate()
                        .filter(|(_, l)| !l.is_empty())
                        .map(|(k, l)| (l.as_bytes()[0] as f64 - 98.0) * ((j + k) % 3) as f64)
                        .sum();
                    signal + rng.random_range(-0.5..0.5)
                })
                .collect()
        })
        .collect();
    FeatureMatrix::from_rows_with_width(&rows, n_features).unwrap()
}

/// Explicit ancestor-closed set of a row: every non-empty prefix, as owned vectors.
pub fn materialize(row: &[String]) -> BTreeSet<Vec<String>> {
    let depth = row.iter().position(String::is_empty).unwrap_or(row.len());
    (1..=depth).map(|d| row[..d].to_vec()).collect()
}

/// Brute-force micro totals `(sum |a ∩ b|, sum |a|, sum |b|)`.
pub fn brute_force_totals(truth: &LabelMatrix, pred: &LabelMatrix) -> (usize, usize, usize) {
    let mut totals = (0, 0, 0);
    for i in 0..truth.n_samples() {
        let beta = materialize(truth.row(i));
        let alpha = materialize(pred.row(i));
        totals.0 += alpha.intersection(&beta).count();
        totals.1 += alpha.len();
        totals.2 += beta.len();
    }
    totals
}

/// Mean cross-entropy plus `l2/2 ||W||^2`, written with plain loops.
fn naive_loss(w: &Array2<f64>, b: &Array1<f64>, z: &Array2<f64>, t: &[usize], l2: f64) -> f64 {
    let (k, d) = w.dim();
    let mut total = 0.0;
    for (i, &ti) in t.iter().enumerate() {
        let logits: Vec<f64> = (0..k)
            .map(|c| b[c] + (0..d).map(|j| w[[c, j]] * z[[i, j]]).sum::<f64>())
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        total += lse - logits[ti];
    }
    let reg: f64 = w.iter().map(|v| v * v).sum();
    total / t.len() as f64 + 0.5 * l2 * reg
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm_a: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_b: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm_a.max(norm_b).max(1e-12)
}

/// Returns the worst relative error over `instances` random 5x3x3 problems.
pub fn gradient_check(instances: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..instances {
        let mut rng = rng(1000 + seed);
        let (n, d, k) = (5, 3, 3);
        let z = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
        let w = Array2::from_shape_fn((k, d), |_| rng.random_range(-1.0..1.0));
        let b = Array1::from_shape_fn(k, |_| rng.random_range(-1.0..1.0));
        let t: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let l2 = rng.random_range(0.0..0.5);

        let analytic = loss_and_gradient(&w, &b, z.view(), &t, l2);
        let h = 1e-6;
        let mut numeric_w = Vec::new();
        for c in 0..k {
            for j in 0..d {
                let (mut wp, mut wm) = (w.clone(), w.clone());
                wp[[c, j]] += h;
                wm[[c, j]] -= h;
                numeric_w.push((naive_loss(&wp, &b, &z, &t, l2) - naive_loss(&wm, &b, &z, &t, l2)) / (2.0 * h));
            }
        }
        let mut numeric_b = Vec::new();
        for c in 0..k {
            let (mut bp, mut bm) = (b.clone(), b.clone());
            bp[c] += h;
            bm[c] -= h;
            numeric_b.push((naive_loss(&w, &bp, &z, &t, l2) - naive_loss(&w, &bm, &z, &t, l2)) / (2.0 * h));
        }
        assert!((analytic.loss - naive_loss(&w, &b, &z, &t, l2)).abs() < 1e-12);
        let mut a: Vec<f64> = analytic.weights.iter().copied().collect();
        a.extend(analytic.bias.iter());
        let mut num = numeric_w;
        num.extend(numeric_b);
        worst = worst.max(relative_error(&a, &num));
    }
    worst
}
