//! Synthetic hierarchical blobs and the flat-vs-local comparison harness.
//!
//! Every node of a full `branching`-ary tree of the given depth receives a
//! random offset; a leaf's center is the sum of the offsets along its path.
//! Offsets shrink by `level_scale` per level going down, so parents are
//! further apart than their children. Samples are isotropic Gaussians around
//! the leaf centers.

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataio::model_to_string;
use crate::error::{Error, Result};
use crate::hierarchy::{build_hierarchy, LabelMatrix};
use crate::learner::{FeatureMatrix, LearnerSpec};
use crate::memory;
use crate::metrics::evaluate;
use crate::strategies::{fit, Strategy};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub depth: usize,
    pub branching: usize,
    pub samples_per_leaf: usize,
    pub n_features: usize,
    /// Typical distance between sibling leaves.
    pub leaf_separation: f64,
    /// Factor by which offsets grow per level towards the root.
    pub level_scale: f64,
    /// Noise standard deviation as a fraction of `leaf_separation`.
    pub overlap: f64,
    /// Fraction of samples held out for evaluation. When that leaves no test
    /// samples (0, or a single sample in total) scoring uses the training data.
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            depth: 2,
            branching: 3,
            samples_per_leaf: 200,
            n_features: 4,
            leaf_separation: 4.0,
            level_scale: 3.0,
            overlap: 0.15,
            test_fraction: 0.25,
            seed: 42,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.depth == 0 {
            return bad("depth must be at least 1");
        }
        if self.branching == 0 {
            return bad("branching must be at least 1");
        }
        if self.samples_per_leaf == 0 {
            return bad("samples per leaf must be at least 1");
        }
        if self.n_features == 0 {
            return bad("n_features must be at least 1");
        }
        if !(self.leaf_separation.is_finite() && self.leaf_separation > 0.0) {
            return bad("leaf separation must be positive");
        }
        if !(self.level_scale.is_finite() && self.level_scale >= 1.0) {
            return bad("level scale must be at least 1");
        }
        if !(self.overlap.is_finite() && self.overlap >= 0.0) {
            return bad("overlap must be non-negative");
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return bad("test fraction must lie in [0, 1)");
        }
        let leaves = self.branching.checked_pow(self.depth as u32);
        if leaves.and_then(|l| l.checked_mul(self.samples_per_leaf)).is_none_or(|n| n > 10_000_000) {
            return bad("dataset would exceed 10 million samples");
        }
        Ok(())
    }

    pub fn n_leaves(&self) -> usize {
        self.branching.pow(self.depth as u32)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub x_train: FeatureMatrix,
    pub y_train: LabelMatrix,
    pub x_test: FeatureMatrix,
    pub y_test: LabelMatrix,
}

fn label(level: usize, index: usize) -> String {
    format!("L{level}-{index}")
}

/// Generates the dataset; identical configs give identical data.
pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    // breadth-first: (path, center) for every node of the current level
    let mut frontier: Vec<(Vec<String>, Vec<f64>)> = vec![(Vec::new(), vec![0.0; cfg.n_features])];
    for level in 1..=cfg.depth {
        let scale = cfg.leaf_separation * cfg.level_scale.powi((cfg.depth - level) as i32);
        let mut next = Vec::with_capacity(frontier.len() * cfg.branching);
        for (path, center) in &frontier {
            for b in 0..cfg.branching {
                let mut p = path.clone();
                p.push(label(level, b));
                let c: Vec<f64> = center.iter().map(|v| v + scale * unit.sample(&mut rng)).collect();
                next.push((p, c));
            }
        }
        frontier = next;
    }

    let noise = cfg.overlap * cfg.leaf_separation;
    let mut samples: Vec<(Vec<f64>, Vec<String>)> = Vec::with_capacity(cfg.n_leaves() * cfg.samples_per_leaf);
    for (path, center) in &frontier {
        for _ in 0..cfg.samples_per_leaf {
            let x = center.iter().map(|c| c + noise * unit.sample(&mut rng)).collect();
            samples.push((x, path.clone()));
        }
    }
    samples.shuffle(&mut rng);

    let n = samples.len();
    let n_test = if n < 2 {
        0
    } else {
        ((n as f64 * cfg.test_fraction).round() as usize).clamp(usize::from(cfg.test_fraction > 0.0), n - 1)
    };
    let (test, train) = samples.split_at(n_test);
    let to_matrices = |part: &[(Vec<f64>, Vec<String>)]| -> Result<(FeatureMatrix, LabelMatrix)> {
        let xs: Vec<Vec<f64>> = part.iter().map(|(x, _)| x.clone()).collect();
        let ys: Vec<Vec<String>> = part.iter().map(|(_, y)| y.clone()).collect();
        Ok((
            FeatureMatrix::from_rows_with_width(&xs, cfg.n_features)?,
            LabelMatrix::with_levels(ys, cfg.depth)?,
        ))
    };
    let (x_train, y_train) = to_matrices(train)?;
    let (x_test, y_test) = if test.is_empty() {
        (x_train.clone(), y_train.clone())
    } else {
        to_matrices(test)?
    };
    Ok(SyntheticData {
        x_train,
        y_train,
        x_test,
        y_test,
    })
}

/// Accuracy of a nearest-centroid classifier over full label paths, with
/// centroids from the training split and accuracy on the test split.
pub fn nearest_centroid_accuracy(data: &SyntheticData) -> f64 {
    let mut classes: Vec<&[String]> = data.y_train.paths().collect();
    classes.sort();
    classes.dedup();
    let d = data.x_train.n_features();
    let mut sums = vec![vec![0.0; d]; classes.len()];
    let mut counts = vec![0usize; classes.len()];
    for (i, path) in data.y_train.paths().enumerate() {
        let c = classes.binary_search(&path).expect("class from training labels");
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(data.x_train.row(i)) {
            *s += v;
        }
    }
    let centroids: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &k)| s.into_iter().map(|v| v / k as f64).collect())
        .collect();

    let n = data.x_test.n_samples();
    let correct = (0..n)
        .filter(|&i| {
            let x = data.x_test.row(i);
            let dist = |c: &Vec<f64>| c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            let best = (0..centroids.len())
                .min_by(|&a, &b| dist(&centroids[a]).total_cmp(&dist(&centroids[b])))
                .expect("at least one class");
            classes[best] == data.y_test.path(i)
        })
        .count();
    correct as f64 / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub strategy: Strategy,
    pub h_fscore: f64,
    /// Allocation high-water during fitting, above the pre-fit baseline.
    pub peak_memory_bytes: usize,
    pub model_bytes: usize,
    pub train_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub train_samples: usize,
    pub test_samples: usize,
    pub centroid_accuracy: f64,
    pub rows: Vec<BenchmarkRow>,
}

pub const TABLE_COLUMNS: [&str; 5] = ["strategy", "hF", "peak_mem_bytes", "model_bytes", "train_ms"];

impl BenchmarkReport {
    /// Fixed-width table; column order is [`TABLE_COLUMNS`].
    pub fn render_table(&self) -> String {
        let mut out = format!(
            "{:<10} {:>10} {:>16} {:>12} {:>12}\n",
            TABLE_COLUMNS[0], TABLE_COLUMNS[1], TABLE_COLUMNS[2], TABLE_COLUMNS[3], TABLE_COLUMNS[4]
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<10} {:>10.6} {:>16} {:>12} {:>12.3}",
                r.strategy.tag(),
                r.h_fscore,
                r.peak_memory_bytes,
                r.model_bytes,
                r.train_seconds * 1e3
            );
        }
        out
    }
}

/// Generates the data, then fits and scores flat, LCPN, LCPPN and LCPL.
pub fn run_benchmark(cfg: &SyntheticConfig, spec: &LearnerSpec, workers: usize) -> Result<BenchmarkReport> {
    let data = generate(cfg)?;
    let centroid_accuracy = nearest_centroid_accuracy(&data);
    let h = build_hierarchy(&data.y_train)?;

    let mut rows = Vec::with_capacity(Strategy::ALL.len());
    for strategy in Strategy::ALL {
        let baseline = memory::reset_peak();
        let start = Instant::now();
        let model = fit(strategy, &h, &data.x_train, &data.y_train, spec.clone(), workers)?;
        let train_seconds = start.elapsed().as_secs_f64();
        let peak_memory_bytes = memory::peak_bytes().saturating_sub(baseline);

        let pred = model.predict(&data.x_test)?;
        let report = evaluate(&data.y_test, &pred)?;
        rows.push(BenchmarkRow {
            strategy,
            h_fscore: report.h_fscore,
            peak_memory_bytes,
            model_bytes: model_to_string(&model).len(),
            train_seconds,
        });
    }
    Ok(BenchmarkReport {
        train_samples: data.x_train.n_samples(),
        test_samples: data.x_test.n_samples(),
        centroid_accuracy,
        rows,
    })
}
