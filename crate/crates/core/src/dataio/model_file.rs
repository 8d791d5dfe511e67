//! Versioned text model files.
//!
//! Layout:
//!
//! ```text
//! hierclass-model
//! version: 1
//! checksum: sha256:<64 hex digits of the body>
//! <JSON body>
//! ```
//!
//! Every real number in the body is a string holding 17 significant digits
//! in scientific notation, which reads back to the identical `f64`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, NodeId};
use crate::learner::{Classifier, ConstantModel, LearnerSpec, LogisticModel, TrainedLearner};
use crate::strategies::{HierModel, Locus, Strategy};

pub const MAGIC: &str = "hierclass-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dec(f64);

impl Serialize for Dec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{:.16e}", self.0))
    }
}

impl<'de> Deserialize<'de> for Dec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse::<f64>()
            .map(Dec)
            .map_err(|e| serde::de::Error::custom(format!("bad decimal {text:?}: {e}")))
    }
}

fn decs<'a>(v: impl IntoIterator<Item = &'a f64>) -> Vec<Dec> {
    v.into_iter().copied().map(Dec).collect()
}

fn floats(v: &[Dec]) -> Vec<f64> {
    v.iter().map(|d| d.0).collect()
}

#[derive(Serialize, Deserialize)]
struct Body {
    strategy: String,
    separator: String,
    n_features: usize,
    learner: SpecDto,
    /// Node paths in canonical order.
    nodes: Vec<Vec<String>>,
    /// `(parent, child)` canonical names; `null` parent is the root.
    edges: Vec<(Option<String>, String)>,
    learners: Vec<Entry>,
}

#[derive(Serialize, Deserialize)]
struct SpecDto {
    kind: String,
    learning_rate: Dec,
    epochs: usize,
    l2_penalty: Dec,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum LocusDto {
    Root,
    Node(String),
    Level(usize),
}

#[derive(Serialize, Deserialize)]
struct Entry {
    locus: LocusDto,
    model: LearnedDto,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LearnedDto {
    Constant {
        classes: Vec<String>,
        probabilities: Vec<Dec>,
        n_features: usize,
    },
    Logistic {
        classes: Vec<String>,
        mean: Vec<Dec>,
        scale: Vec<Dec>,
        weights: Vec<Vec<Dec>>,
        bias: Vec<Dec>,
    },
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptModel(msg.into())
}

fn checksum(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

/// Canonical serialization; equal models produce identical text.
pub fn model_to_string(model: &HierModel<LearnerSpec>) -> String {
    let h = model.hierarchy();
    let spec = model.estimator();
    let body = Body {
        strategy: model.strategy().tag().to_string(),
        separator: h.separator().to_string(),
        n_features: model.n_features(),
        learner: SpecDto {
            kind: spec.kind.as_str().to_string(),
            learning_rate: Dec(spec.learning_rate),
            epochs: spec.epochs,
            l2_penalty: Dec(spec.l2_penalty),
            seed: spec.seed,
        },
        nodes: h.nodes().iter().map(|n| n.path().to_vec()).collect(),
        edges: h
            .edges()
            .into_iter()
            .map(|(p, c)| (p.map(|p| p.name().to_string()), c.name().to_string()))
            .collect(),
        learners: model
            .learners()
            .iter()
            .map(|(locus, learner)| Entry {
                locus: match locus {
                    Locus::Root => LocusDto::Root,
                    Locus::Node(n) => LocusDto::Node(n.name().to_string()),
                    Locus::Level(k) => LocusDto::Level(*k),
                },
                model: match learner {
                    TrainedLearner::Constant(m) => LearnedDto::Constant {
                        classes: m.classes().to_vec(),
                        probabilities: decs(m.probabilities()),
                        n_features: m.n_features(),
                    },
                    TrainedLearner::Logistic(m) => LearnedDto::Logistic {
                        classes: m.classes().to_vec(),
                        mean: decs(m.mean()),
                        scale: decs(m.scale()),
                        weights: m.weights().rows().into_iter().map(decs).collect(),
                        bias: decs(m.bias()),
                    },
                },
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&body).expect("model body is always serializable");
    text.push('\n');
    format!(
        "{MAGIC}\nversion: {FORMAT_VERSION}\nchecksum: sha256:{}\n{text}",
        checksum(&text)
    )
}

pub fn model_from_str(text: &str) -> Result<HierModel<LearnerSpec>> {
    let mut parts = text.splitn(4, '\n');
    let mut header = |what: &str| parts.next().ok_or_else(|| corrupt(format!("missing {what}")));
    if header("magic")? != MAGIC {
        return Err(corrupt("not a hierclass model file"));
    }
    let version = header("version")?
        .strip_prefix("version: ")
        .and_then(|v| v.trim().parse::<u32>().ok())
        .ok_or_else(|| corrupt("unreadable version line"))?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let expected = header("checksum")?
        .strip_prefix("checksum: sha256:")
        .ok_or_else(|| corrupt("unreadable checksum line"))?
        .to_string();
    let body = parts.next().ok_or_else(|| corrupt("missing body"))?;
    if checksum(body) != expected {
        return Err(corrupt("checksum mismatch"));
    }
    let body: Body = serde_json::from_str(body).map_err(|e| corrupt(e.to_string()))?;
    decode(body)
}

fn decode(body: Body) -> Result<HierModel<LearnerSpec>> {
    let strategy: Strategy = body.strategy.parse()?;
    let sep = body.separator.as_str();
    let nodes: BTreeMap<String, NodeId> = body
        .nodes
        .iter()
        .map(|p| NodeId::new(p, sep).map(|n| (n.name().to_string(), n)))
        .collect::<Result<_>>()?;
    let lookup = |name: &str| {
        nodes
            .get(name)
            .cloned()
            .ok_or_else(|| corrupt(format!("edge refers to unknown node {name:?}")))
    };
    let edges = body
        .edges
        .iter()
        .map(|(p, c)| Ok((p.as_deref().map(lookup).transpose()?, lookup(c)?)))
        .collect::<Result<Vec<_>>>()?;
    let hierarchy = Hierarchy::from_edges(sep, edges);
    let report = hierarchy.validate();
    if !report.is_ok() || hierarchy.len() != nodes.len() {
        return Err(corrupt(format!("invalid hierarchy: {}", report.failures.join("; "))));
    }

    let spec = LearnerSpec {
        kind: body.learner.kind.parse().map_err(|e: Error| corrupt(e.to_string()))?,
        learning_rate: body.learner.learning_rate.0,
        epochs: body.learner.epochs,
        l2_penalty: body.learner.l2_penalty.0,
        seed: body.learner.seed,
    };

    let mut learners = BTreeMap::new();
    for entry in body.learners {
        let locus = match entry.locus {
            LocusDto::Root => Locus::Root,
            LocusDto::Node(name) => Locus::Node(lookup(&name)?),
            LocusDto::Level(k) => Locus::Level(k),
        };
        let learner = match entry.model {
            LearnedDto::Constant {
                classes,
                probabilities,
                n_features,
            } => TrainedLearner::Constant(ConstantModel::from_parts(classes, floats(&probabilities), n_features)?),
            LearnedDto::Logistic {
                classes,
                mean,
                scale,
                weights,
                bias,
            } => {
                let d = mean.len();
                if weights.iter().any(|r| r.len() != d) {
                    return Err(corrupt("ragged weight matrix"));
                }
                let flat: Vec<f64> = weights.iter().flat_map(|r| floats(r)).collect();
                let w = Array2::from_shape_vec((weights.len(), d), flat)
                    .map_err(|e| corrupt(e.to_string()))?;
                TrainedLearner::Logistic(LogisticModel::from_parts(
                    classes,
                    Array1::from(floats(&mean)),
                    Array1::from(floats(&scale)),
                    w,
                    Array1::from(floats(&bias)),
                )?)
            }
        };
        if learners.insert(locus, learner).is_some() {
            return Err(corrupt("duplicate learner locus"));
        }
    }
    HierModel::from_parts(strategy, hierarchy, spec, learners, body.n_features)
        .map_err(|e| corrupt(e.to_string()))
}

pub fn save_model(model: &HierModel<LearnerSpec>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_string(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<HierModel<LearnerSpec>> {
    let bytes = fs::read(path)?;
    let text = String::from_utf8(bytes).map_err(|_| corrupt("model file is not UTF-8"))?;
    model_from_str(&text)
}
