//! The base-learner contract and the built-in learners.
//!
//! Every local classifier in a hierarchical model is produced by an
//! [`Estimator`] and consumed through the [`Classifier`] trait, so any
//! learner exposing `fit`, `predict` and `predict_proba` can be plugged in.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Dense `n_samples x n_features` matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(Array2<f64>);

impl FeatureMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if let Some(((row, column), _)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { row, column });
        }
        Ok(Self(data))
    }

    /// Builds from row vectors. An empty slice yields a `0 x 0` matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        Self::from_rows_with_width(rows, width)
    }

    pub fn from_rows_with_width(rows: &[Vec<f64>], width: usize) -> Result<Self> {
        if let Some(found) = rows.iter().map(Vec::len).find(|&l| l != width) {
            return Err(Error::FeatureDimensionMismatch {
                expected: width,
                found,
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((rows.len(), width), flat)
            .expect("row lengths were checked");
        Self::new(data)
    }

    pub fn n_samples(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.0.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.0.row(i)
    }

    /// Rows at the given indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix(self.0.select(Axis(0), indices))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LearnerKind {
    LogisticRegression,
    Constant,
}

impl LearnerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::LogisticRegression => "logistic_regression",
            LearnerKind::Constant => "constant",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic_regression" => Ok(LearnerKind::LogisticRegression),
            "constant" => Ok(LearnerKind::Constant),
            other => Err(Error::InvalidLearnerSpec(format!("unknown learner kind {other:?}"))),
        }
    }
}

/// Learner kind plus hyperparameters.
///
/// `seed` is carried for reproducibility bookkeeping; the built-in learners
/// are fully deterministic (full-batch, zero-initialized) and do not draw
/// random numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2_penalty: f64,
    pub seed: u64,
}

impl Default for LearnerSpec {
    fn default() -> Self {
        Self {
            kind: LearnerKind::LogisticRegression,
            learning_rate: 0.1,
            epochs: 500,
            l2_penalty: 0.0,
            seed: 0,
        }
    }
}

impl LearnerSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidLearnerSpec(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidLearnerSpec("epochs must be at least 1".into()));
        }
        if !(self.l2_penalty.is_finite() && self.l2_penalty >= 0.0) {
            return Err(Error::InvalidLearnerSpec(format!(
                "l2_penalty must be non-negative, got {}",
                self.l2_penalty
            )));
        }
        Ok(())
    }
}

/// A trained classifier.
pub trait Classifier {
    /// Class labels in lexicographic order; column order of `predict_proba`.
    fn classes(&self) -> &[String];

    fn n_features(&self) -> usize;

    fn predict_proba(&self, x: &FeatureMatrix) -> Result<Array2<f64>>;

    /// Argmax of `predict_proba`, ties going to the lexicographically smallest class.
    fn predict(&self, x: &FeatureMatrix) -> Result<Vec<String>> {
        let proba = self.predict_proba(x)?;
        let classes = self.classes();
        Ok(proba
            .rows()
            .into_iter()
            .map(|row| classes[argmax(row)].clone())
            .collect())
    }
}

/// Something that fits a [`Classifier`] from features and string targets.
pub trait Estimator: Sync {
    type Model: Classifier + Send + Sync;

    fn fit(&self, x: &FeatureMatrix, y: &[String]) -> Result<Self::Model>;

    /// A model that always predicts `class` with probability 1.
    fn constant(&self, class: &str, n_features: usize) -> Self::Model;

    /// Checked once before any local learner is fitted.
    fn validate(&self) -> Result<()> {
        Ok(())
    }
}

/// Index of the first maximum.
pub fn argmax(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn check_width(expected: usize, x: &FeatureMatrix) -> Result<()> {
    if x.n_samples() > 0 && x.n_features() != expected {
        return Err(Error::FeatureDimensionMismatch {
            expected,
            found: x.n_features(),
        });
    }
    Ok(())
}

/// Fixed class probabilities, independent of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantModel {
    classes: Vec<String>,
    probabilities: Vec<f64>,
    n_features: usize,
}

impl ConstantModel {
    pub fn single(class: &str, n_features: usize) -> Self {
        Self {
            classes: vec![class.to_string()],
            probabilities: vec![1.0],
            n_features,
        }
    }

    /// Class priors from observed targets.
    pub fn priors(y: &[String], n_features: usize) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for c in y {
            *counts.entry(c).or_default() += 1;
        }
        let n = y.len() as f64;
        Self {
            classes: counts.keys().map(|c| c.to_string()).collect(),
            probabilities: counts.values().map(|&k| k as f64 / n).collect(),
            n_features,
        }
    }

    pub fn from_parts(classes: Vec<String>, probabilities: Vec<f64>, n_features: usize) -> Result<Self> {
        if classes.is_empty() || classes.len() != probabilities.len() {
            return Err(Error::CorruptModel("constant model class/probability mismatch".into()));
        }
        if !classes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::CorruptModel("constant model classes are not sorted".into()));
        }
        Ok(Self {
            classes,
            probabilities,
            n_features,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }
}

impl Classifier for ConstantModel {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &FeatureMatrix) -> Result<Array2<f64>> {
        check_width(self.n_features, x)?;
        let row = ArrayView1::from(&self.probabilities);
        let mut out = Array2::zeros((x.n_samples(), self.classes.len()));
        out.rows_mut().into_iter().for_each(|mut r| r.assign(&row));
        Ok(out)
    }
}

/// Multinomial logistic regression over standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    classes: Vec<String>,
    mean: Array1<f64>,
    scale: Array1<f64>,
    /// `n_classes x n_features`
    weights: Array2<f64>,
    bias: Array1<f64>,
}

impl LogisticModel {
    pub fn from_parts(
        classes: Vec<String>,
        mean: Array1<f64>,
        scale: Array1<f64>,
        weights: Array2<f64>,
        bias: Array1<f64>,
    ) -> Result<Self> {
        let (k, d) = weights.dim();
        if classes.len() != k || bias.len() != k || mean.len() != d || scale.len() != d {
            return Err(Error::CorruptModel("logistic model parameter shapes disagree".into()));
        }
        if !classes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::CorruptModel("logistic model classes are not sorted".into()));
        }
        if scale.iter().any(|&s| s <= 0.0 || !s.is_finite()) {
            return Err(Error::CorruptModel("logistic model has a non-positive scale".into()));
        }
        Ok(Self {
            classes,
            mean,
            scale,
            weights,
            bias,
        })
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn scale(&self) -> &Array1<f64> {
        &self.scale
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    fn standardize(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        (&x - &self.mean) / &self.scale
    }

    fn fit(classes: Vec<String>, x: &FeatureMatrix, targets: &[usize], spec: &LearnerSpec) -> Self {
        let x = x.view();
        let n = x.nrows() as f64;
        let mean = x.sum_axis(Axis(0)) / n;
        let var = x
            .rows()
            .into_iter()
            .fold(Array1::zeros(x.ncols()), |acc: Array1<f64>, r| {
                acc + (&r - &mean).mapv(|v| v * v)
            })
            / n;
        let scale = var.mapv(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 });
        let z = (&x - &mean) / &scale;

        let k = classes.len();
        let mut weights = Array2::zeros((k, x.ncols()));
        let mut bias = Array1::zeros(k);
        for _ in 0..spec.epochs {
            let grad = loss_and_gradient(&weights, &bias, z.view(), targets, spec.l2_penalty);
            weights.scaled_add(-spec.learning_rate, &grad.weights);
            bias.scaled_add(-spec.learning_rate, &grad.bias);
        }
        Self {
            classes,
            mean,
            scale,
            weights,
            bias,
        }
    }
}

impl Classifier for LogisticModel {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn n_features(&self) -> usize {
        self.mean.len()
    }

    fn predict_proba(&self, x: &FeatureMatrix) -> Result<Array2<f64>> {
        check_width(self.n_features(), x)?;
        if x.n_samples() == 0 {
            return Ok(Array2::zeros((0, self.classes.len())));
        }
        let z = self.standardize(x.view());
        let mut logits = z.dot(&self.weights.t()) + &self.bias;
        softmax_rows(&mut logits);
        Ok(logits)
    }
}

/// In-place numerically stable row-wise softmax.
pub fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

#[derive(Debug, Clone)]
pub struct Gradient {
    pub loss: f64,
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Mean cross-entropy plus `l2/2 * ||W||^2` (bias unpenalized), and its gradient.
pub fn loss_and_gradient(
    weights: &Array2<f64>,
    bias: &Array1<f64>,
    z: ArrayView2<'_, f64>,
    targets: &[usize],
    l2: f64,
) -> Gradient {
    let n = z.nrows() as f64;
    let mut proba = z.dot(&weights.t()) + bias;
    softmax_rows(&mut proba);
    let mut loss = 0.0;
    for (i, &t) in targets.iter().enumerate() {
        loss -= proba[[i, t]].max(f64::MIN_POSITIVE).ln();
        proba[[i, t]] -= 1.0;
    }
    loss = loss / n + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    // proba now holds (P - onehot)
    let residual = proba / n;
    let mut grad_w = residual.t().dot(&z);
    grad_w.scaled_add(l2, weights);
    let grad_b = residual.sum_axis(Axis(0));
    Gradient {
        loss,
        weights: grad_w,
        bias: grad_b,
    }
}

/// Output of the built-in estimators.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedLearner {
    Constant(ConstantModel),
    Logistic(LogisticModel),
}

impl Classifier for TrainedLearner {
    fn classes(&self) -> &[String] {
        match self {
            TrainedLearner::Constant(m) => m.classes(),
            TrainedLearner::Logistic(m) => m.classes(),
        }
    }

    fn n_features(&self) -> usize {
        match self {
            TrainedLearner::Constant(m) => m.n_features(),
            TrainedLearner::Logistic(m) => m.n_features(),
        }
    }

    fn predict_proba(&self, x: &FeatureMatrix) -> Result<Array2<f64>> {
        match self {
            TrainedLearner::Constant(m) => m.predict_proba(x),
            TrainedLearner::Logistic(m) => m.predict_proba(x),
        }
    }
}

impl Estimator for LearnerSpec {
    type Model = TrainedLearner;

    fn fit(&self, x: &FeatureMatrix, y: &[String]) -> Result<TrainedLearner> {
        self.validate()?;
        if y.len() != x.n_samples() {
            return Err(Error::Alignment {
                left: x.n_samples(),
                right: y.len(),
            });
        }
        if y.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let mut classes: Vec<String> = y.to_vec();
        classes.sort();
        classes.dedup();
        if classes.len() == 1 {
            return Ok(self.constant(&classes[0], x.n_features()));
        }
        match self.kind {
            LearnerKind::Constant => Ok(TrainedLearner::Constant(ConstantModel::priors(
                y,
                x.n_features(),
            ))),
            LearnerKind::LogisticRegression => {
                let targets: Vec<usize> = y
                    .iter()
                    .map(|c| classes.binary_search(c).expect("class list built from y"))
                    .collect();
                Ok(TrainedLearner::Logistic(LogisticModel::fit(
                    classes, x, &targets, self,
                )))
            }
        }
    }

    fn constant(&self, class: &str, n_features: usize) -> TrainedLearner {
        TrainedLearner::Constant(ConstantModel::single(class, n_features))
    }

    fn validate(&self) -> Result<()> {
        LearnerSpec::validate(self)
    }
}
