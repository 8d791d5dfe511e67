//! Local hierarchical classification.
//!
//! Labels are root-to-leaf paths ([`LabelMatrix`]) from which a rooted
//! [`Hierarchy`] is built. Three local strategies train one base learner
//! per node, per parent node, or per level; a flat leaf-only baseline is
//! included for comparison. Prediction always walks the hierarchy from the
//! top, so predicted rows are valid paths. Hierarchical precision, recall
//! and F-score live in [`metrics`].
//!
//! ```
//! use hierclass::{build_hierarchy, fit_lcpn, metrics, FeatureMatrix, LabelMatrix, LearnerSpec};
//!
//! let x = FeatureMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
//! let y = LabelMatrix::new([
//!     ["Animal", "Mammal", "Cat"],
//!     ["Animal", "Reptile", "Turtle"],
//! ])
//! .unwrap();
//! let h = build_hierarchy(&y).unwrap();
//! let model = fit_lcpn(&h, &x, &y, LearnerSpec::default(), 1).unwrap();
//! let pred = model.predict(&x).unwrap();
//! assert_eq!(metrics::h_fscore(&y, &pred).unwrap(), 1.0);
//! ```

pub mod benchmark;
pub mod dataio;
pub mod error;
pub mod hierarchy;
pub mod learner;
pub mod memory;
pub mod metrics;
pub mod strategies;

pub use error::{Error, Result};
pub use hierarchy::{build_hierarchy, Hierarchy, LabelMatrix, NodeId, ValidationReport, DEFAULT_SEPARATOR, MISSING};
pub use learner::{
    Classifier, ConstantModel, Estimator, FeatureMatrix, LearnerKind, LearnerSpec, LogisticModel, TrainedLearner,
};
pub use metrics::{evaluate, MetricsReport};
pub use strategies::{
    fit, fit_flat, fit_lcpl, fit_lcpn, fit_lcppn, HierModel, Locus, PredictionMatrix, Strategy,
};
