//! Hierarchical precision, recall and F-score.
//!
//! For sample `i`, let `alpha_i` be the predicted node and all of its
//! ancestors and `beta_i` the true node and all of its ancestors. Then
//!
//! ```text
//! hP = sum_i |alpha_i ∩ beta_i| / sum_i |alpha_i|
//! hR = sum_i |alpha_i ∩ beta_i| / sum_i |beta_i|
//! hF = 2 * hP * hR / (hP + hR)
//! ```
//!
//! Sums run over all samples before the single division (micro averaging).
//! Nodes are path-identified and the root is excluded, so `alpha_i` is the
//! set of non-empty prefixes of the predicted row and the intersection size
//! is the length of the common prefix of the two rows.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hierarchy::{check_suffix, non_missing_prefix, LabelMatrix, NodeId};

/// A node together with all of its non-root ancestors.
pub type PathSet = BTreeSet<NodeId>;

/// All non-empty prefixes of `row`, as nodes.
pub fn path_set<S: AsRef<str>>(row: &[S], separator: &str) -> Result<PathSet> {
    if let Err(column) = check_suffix(row) {
        return Err(Error::MalformedRow(format!(
            "label in column {column} follows a missing label"
        )));
    }
    let path = non_missing_prefix(row);
    (1..=path.len())
        .map(|d| NodeId::new(&path[..d], separator))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    #[serde(rename = "hP")]
    pub h_precision: f64,
    #[serde(rename = "hR")]
    pub h_recall: f64,
    #[serde(rename = "hF")]
    pub h_fscore: f64,
    pub intersection_total: usize,
    pub alpha_total: usize,
    pub beta_total: usize,
    /// Set when a denominator was zero and the affected metric was reported as 0.
    pub zero_denominator: bool,
}

impl MetricsReport {
    pub fn from_totals(intersection_total: usize, alpha_total: usize, beta_total: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let h_precision = ratio(intersection_total, alpha_total);
        let h_recall = ratio(intersection_total, beta_total);
        let h_fscore = if h_precision + h_recall > 0.0 {
            2.0 * h_precision * h_recall / (h_precision + h_recall)
        } else {
            0.0
        };
        Self {
            h_precision,
            h_recall,
            h_fscore,
            intersection_total,
            alpha_total,
            beta_total,
            zero_denominator: alpha_total == 0 || beta_total == 0,
        }
    }
}

/// `key=value` lines, one per field.
impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "hP={:?}", self.h_precision)?;
        writeln!(f, "hR={:?}", self.h_recall)?;
        writeln!(f, "hF={:?}", self.h_fscore)?;
        writeln!(f, "intersection_total={}", self.intersection_total)?;
        writeln!(f, "alpha_total={}", self.alpha_total)?;
        writeln!(f, "beta_total={}", self.beta_total)?;
        write!(f, "zero_denominator={}", self.zero_denominator)
    }
}

/// Computes hP, hR and hF for index-aligned truth and prediction rows.
pub fn evaluate(truth: &LabelMatrix, pred: &LabelMatrix) -> Result<MetricsReport> {
    if truth.n_samples() != pred.n_samples() {
        return Err(Error::Alignment {
            left: truth.n_samples(),
            right: pred.n_samples(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyEvaluationSet);
    }
    let (mut inter, mut alpha, mut beta) = (0, 0, 0);
    for (t, p) in truth.paths().zip(pred.paths()) {
        inter += t.iter().zip(p).take_while(|(a, b)| a == b).count();
        alpha += p.len();
        beta += t.len();
    }
    Ok(MetricsReport::from_totals(inter, alpha, beta))
}

pub fn h_precision(truth: &LabelMatrix, pred: &LabelMatrix) -> Result<f64> {
    evaluate(truth, pred).map(|r| r.h_precision)
}

pub fn h_recall(truth: &LabelMatrix, pred: &LabelMatrix) -> Result<f64> {
    evaluate(truth, pred).map(|r| r.h_recall)
}

pub fn h_fscore(truth: &LabelMatrix, pred: &LabelMatrix) -> Result<f64> {
    evaluate(truth, pred).map(|r| r.h_fscore)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::DEFAULT_SEPARATOR;

    fn m(rows: &[&[&str]]) -> LabelMatrix {
        LabelMatrix::new(rows.iter().map(|r| r.iter().copied())).unwrap()
    }

    #[test]
    fn path_sets() {
        let names = |s: PathSet| s.into_iter().map(|n| n.name().to_string()).collect::<Vec<_>>();
        assert_eq!(
            names(path_set(&["Animal", "Mammal", "Cat"], DEFAULT_SEPARATOR).unwrap()),
            ["Animal", "Animal://Mammal", "Animal://Mammal://Cat"]
        );
        assert_eq!(names(path_set(&["A", "", ""], DEFAULT_SEPARATOR).unwrap()), ["A"]);
        assert_eq!(
            names(path_set(&["A", "B", ""], DEFAULT_SEPARATOR).unwrap()),
            ["A", "A://B"]
        );
        assert!(matches!(
            path_set(&["A", "", "C"], DEFAULT_SEPARATOR),
            Err(Error::MalformedRow(_))
        ));
    }

    #[test]
    fn perfect_prediction() {
        let y = m(&[&["Animal", "Mammal", "Cat"], &["Animal", "Reptile", "Turtle"]]);
        let r = evaluate(&y, &y).unwrap();
        assert_eq!((r.h_precision, r.h_recall, r.h_fscore), (1.0, 1.0, 1.0));
        assert!(!r.zero_denominator);
    }

    #[test]
    fn hand_cases() {
        let r = evaluate(&m(&[&["A", "B", "C"]]), &m(&[&["A", "B", "D"]])).unwrap();
        assert_eq!((r.intersection_total, r.alpha_total, r.beta_total), (2, 3, 3));
        assert!((r.h_fscore - 2.0 / 3.0).abs() < 1e-12);

        let r = evaluate(&m(&[&["A", "B", "C"]]), &m(&[&["A", "B", ""]])).unwrap();
        assert_eq!(r.h_precision, 1.0);
        assert!((r.h_recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.h_fscore - 0.8).abs() < 1e-12);
    }

    #[test]
    fn zero_denominators_and_errors() {
        let truth = m(&[&["A"]]);
        let empty_pred = LabelMatrix::new([[""]]).unwrap();
        let r = evaluate(&truth, &empty_pred).unwrap();
        assert!(r.zero_denominator);
        assert_eq!(r.h_fscore, 0.0);

        assert!(matches!(
            evaluate(&LabelMatrix::empty(1), &LabelMatrix::empty(1)),
            Err(Error::EmptyEvaluationSet)
        ));
        assert!(matches!(
            evaluate(&truth, &m(&[&["A"], &["B"]])),
            Err(Error::Alignment { left: 1, right: 2 })
        ));
    }

    #[test]
    fn same_label_in_other_subtree_does_not_count() {
        // X under A and X under B are distinct nodes
        let r = evaluate(&m(&[&["A", "X"]]), &m(&[&["B", "X"]])).unwrap();
        assert_eq!(r.intersection_total, 0);
    }

    #[test]
    fn key_value_rendering() {
        let y = m(&[&["A"]]);
        let text = evaluate(&y, &y).unwrap().to_string();
        assert!(text.lines().any(|l| l == "hF=1.0"));
    }
}
