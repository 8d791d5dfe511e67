//! Local hierarchical classifiers: per node, per parent node, per level,
//! plus the flat leaf-only baseline.
//!
//! Training assembles one independent training set per locus and fits them
//! on a worker pool; results are keyed by locus in a sorted map, so the
//! fitted model does not depend on worker count or scheduling. Prediction
//! walks the hierarchy top-down, so every output row is a root path.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, LabelMatrix, NodeId, Vertex};
use crate::learner::{argmax, Classifier, Estimator, FeatureMatrix, LearnerSpec};

/// Target label of LCPN samples that pass through the node.
pub const POSITIVE: &str = "positive";
/// Target label of LCPN samples that pass through a sibling.
pub const NEGATIVE: &str = "negative";

/// Predictions use the same padded row layout as training labels.
pub type PredictionMatrix = LabelMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// One multi-class learner over full-depth leaves.
    Flat,
    /// One binary learner per non-root node (LCPN).
    PerNode,
    /// One multi-class learner per non-leaf node, root included (LCPPN).
    PerParentNode,
    /// One multi-class learner per level (LCPL).
    PerLevel,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Flat,
        Strategy::PerNode,
        Strategy::PerParentNode,
        Strategy::PerLevel,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Strategy::Flat => "flat",
            Strategy::PerNode => "lcpn",
            Strategy::PerParentNode => "lcppn",
            Strategy::PerLevel => "lcpl",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.tag() == s)
            .ok_or_else(|| Error::StrategyMismatch(format!("unknown strategy tag {s:?}")))
    }
}

/// Where a local learner sits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Locus {
    /// The synthetic root: LCPPN's top learner, or the flat learner.
    Root,
    /// A hierarchy node: LCPN's binary learner, or an LCPPN parent.
    Node(NodeId),
    /// A 0-based level index (LCPL).
    Level(usize),
}

impl fmt::Display for Locus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Locus::Root => f.write_str("<root>"),
            Locus::Node(n) => write!(f, "{n}"),
            Locus::Level(k) => write!(f, "level {k}"),
        }
    }
}

/// A trained hierarchical model.
pub struct HierModel<E: Estimator = LearnerSpec> {
    strategy: Strategy,
    hierarchy: Hierarchy,
    estimator: E,
    learners: BTreeMap<Locus, E::Model>,
    n_features: usize,
}

impl<E: Estimator + fmt::Debug> fmt::Debug for HierModel<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HierModel")
            .field("strategy", &self.strategy)
            .field("nodes", &self.hierarchy.len())
            .field("estimator", &self.estimator)
            .field("learners", &self.learners.keys().collect::<Vec<_>>())
            .field("n_features", &self.n_features)
            .finish()
    }
}

impl<E: Estimator> HierModel<E> {
    /// Reassembles a model from its parts, e.g. after loading from disk.
    pub fn from_parts(
        strategy: Strategy,
        hierarchy: Hierarchy,
        estimator: E,
        learners: BTreeMap<Locus, E::Model>,
        n_features: usize,
    ) -> Result<Self> {
        for (locus, learner) in &learners {
            let known = match (strategy, locus) {
                (Strategy::Flat | Strategy::PerParentNode, Locus::Root) => true,
                (Strategy::PerNode | Strategy::PerParentNode, Locus::Node(n)) => hierarchy.contains(n),
                (Strategy::PerLevel, Locus::Level(k)) => *k < hierarchy.n_levels(),
                _ => false,
            };
            if !known {
                return Err(Error::StrategyMismatch(format!(
                    "locus {locus} is not valid for a {strategy} model"
                )));
            }
            if learner.n_features() != n_features {
                return Err(Error::FeatureDimensionMismatch {
                    expected: n_features,
                    found: learner.n_features(),
                });
            }
        }
        Ok(Self {
            strategy,
            hierarchy,
            estimator,
            learners,
            n_features,
        })
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn estimator(&self) -> &E {
        &self.estimator
    }

    pub fn learners(&self) -> &BTreeMap<Locus, E::Model> {
        &self.learners
    }

    pub fn learner(&self, locus: &Locus) -> Option<&E::Model> {
        self.learners.get(locus)
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Top-down prediction; rows are padded to the hierarchy's level count.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<PredictionMatrix> {
        let n_levels = self.hierarchy.n_levels();
        if x.n_samples() == 0 {
            return Ok(LabelMatrix::empty(n_levels));
        }
        if x.n_features() != self.n_features {
            return Err(Error::FeatureDimensionMismatch {
                expected: self.n_features,
                found: x.n_features(),
            });
        }

        let mut reached = vec![Vertex::Root; x.n_samples()];
        if self.strategy == Strategy::Flat {
            if let Some(learner) = self.learners.get(&Locus::Root) {
                for (i, class) in learner.predict(x)?.iter().enumerate() {
                    if let Some(j) = self.hierarchy.node_by_name(class).and_then(|n| self.hierarchy.index_of(n)) {
                        reached[i] = Vertex::Node(j);
                    }
                }
            }
        } else {
            let mut frontier: BTreeMap<Vertex, Vec<usize>> =
                BTreeMap::from([(Vertex::Root, (0..x.n_samples()).collect())]);
            while !frontier.is_empty() {
                let mut next: BTreeMap<Vertex, Vec<usize>> = BTreeMap::new();
                for (at, samples) in frontier {
                    let steps = self.step(at, &x.select(&samples))?;
                    for (s, step) in samples.into_iter().zip(steps) {
                        if let Some(child) = step {
                            reached[s] = Vertex::Node(child);
                            next.entry(Vertex::Node(child)).or_default().push(s);
                        }
                    }
                }
                frontier = next;
            }
        }

        let rows = reached
            .into_iter()
            .map(|v| match v {
                Vertex::Root => Vec::new(),
                Vertex::Node(i) => self.hierarchy.node_at(i).path().to_vec(),
            })
            .collect();
        LabelMatrix::with_levels(rows, n_levels)
    }

    /// Chooses the next child for each row of `x`, or `None` to stop there.
    fn step(&self, at: Vertex, x: &FeatureMatrix) -> Result<Vec<Option<usize>>> {
        let h = &self.hierarchy;
        let children = h.child_indices(at);
        let stop = vec![None; x.n_samples()];
        if children.is_empty() {
            return Ok(stop);
        }
        match self.strategy {
            Strategy::Flat => Ok(stop),
            Strategy::PerParentNode => {
                let locus = match at {
                    Vertex::Root => Locus::Root,
                    Vertex::Node(i) => Locus::Node(h.node_at(i).clone()),
                };
                let Some(learner) = self.learners.get(&locus) else {
                    return Ok(stop);
                };
                Ok(learner
                    .predict(x)?
                    .iter()
                    .map(|class| {
                        children
                            .iter()
                            .copied()
                            .find(|&c| h.node_at(c).name() == class)
                    })
                    .collect())
            }
            Strategy::PerNode => {
                // one score column per child that has a learner
                let mut scored = Vec::new();
                let mut columns = Vec::new();
                for &c in children {
                    let Some(learner) = self.learners.get(&Locus::Node(h.node_at(c).clone())) else {
                        continue;
                    };
                    let positive = learner.classes().iter().position(|k| k == POSITIVE);
                    let column = match positive {
                        Some(p) => learner.predict_proba(x)?.column(p).to_owned(),
                        None => ndarray::Array1::zeros(x.n_samples()),
                    };
                    scored.push(c);
                    columns.push(column);
                }
                if scored.is_empty() {
                    return Ok(stop);
                }
                Ok((0..x.n_samples())
                    .map(|i| {
                        let row = ndarray::Array1::from_iter(columns.iter().map(|col| col[i]));
                        Some(scored[argmax(row.view())])
                    })
                    .collect())
            }
            Strategy::PerLevel => {
                let level = match at {
                    Vertex::Root => 0,
                    Vertex::Node(i) => h.node_at(i).depth(),
                };
                let Some(learner) = self.learners.get(&Locus::Level(level)) else {
                    return Ok(stop);
                };
                // mask the level learner to the current node's children
                let classes = learner.classes();
                let allowed: Vec<(usize, usize)> = children
                    .iter()
                    .filter_map(|&c| {
                        let name = h.node_at(c).name();
                        classes.iter().position(|k| k == name).map(|col| (c, col))
                    })
                    .collect();
                if allowed.is_empty() {
                    return Ok(stop);
                }
                let proba = learner.predict_proba(x)?;
                Ok(proba
                    .rows()
                    .into_iter()
                    .map(|row| {
                        let masked = ndarray::Array1::from_iter(allowed.iter().map(|&(_, col)| row[col]));
                        Some(allowed[argmax(masked.view())].0)
                    })
                    .collect())
            }
        }
    }
}

/// One local training problem.
struct Task {
    locus: Locus,
    samples: Vec<usize>,
    targets: Vec<String>,
    /// Class of the constant learner used when `samples` is empty.
    fallback: String,
}

/// Fits `strategy` on `(x, y)` over hierarchy `h` using `workers` threads.
pub fn fit<E: Estimator>(
    strategy: Strategy,
    h: &Hierarchy,
    x: &FeatureMatrix,
    y: &LabelMatrix,
    estimator: E,
    workers: usize,
) -> Result<HierModel<E>> {
    if workers == 0 {
        return Err(Error::InvalidConfig("workers must be at least 1".into()));
    }
    if x.n_samples() != y.n_samples() {
        return Err(Error::Alignment {
            left: x.n_samples(),
            right: y.n_samples(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    estimator.validate()?;
    let members = memberships(h, y)?;

    let tasks = match strategy {
        Strategy::PerNode => per_node_tasks(h, &members),
        Strategy::PerParentNode => per_parent_tasks(h, &members),
        Strategy::PerLevel => per_level_tasks(h, &members),
        Strategy::Flat => flat_tasks(h, y)?,
    };
    let learners = fit_tasks(&tasks, x, &estimator, workers)?;
    HierModel::from_parts(strategy, h.clone(), estimator, learners, x.n_features())
}

pub fn fit_lcpn<E: Estimator>(
    h: &Hierarchy,
    x: &FeatureMatrix,
    y: &LabelMatrix,
    estimator: E,
    workers: usize,
) -> Result<HierModel<E>> {
    fit(Strategy::PerNode, h, x, y, estimator, workers)
}

pub fn fit_lcppn<E: Estimator>(
    h: &Hierarchy,
    x: &FeatureMatrix,
    y: &LabelMatrix,
    estimator: E,
    workers: usize,
) -> Result<HierModel<E>> {
    fit(Strategy::PerParentNode, h, x, y, estimator, workers)
}

pub fn fit_lcpl<E: Estimator>(
    h: &Hierarchy,
    x: &FeatureMatrix,
    y: &LabelMatrix,
    estimator: E,
    workers: usize,
) -> Result<HierModel<E>> {
    fit(Strategy::PerLevel, h, x, y, estimator, workers)
}

pub fn fit_flat<E: Estimator>(
    h: &Hierarchy,
    x: &FeatureMatrix,
    y: &LabelMatrix,
    estimator: E,
    workers: usize,
) -> Result<HierModel<E>> {
    fit(Strategy::Flat, h, x, y, estimator, workers)
}

/// For every node index, the ascending list of samples whose path passes through it.
fn memberships(h: &Hierarchy, y: &LabelMatrix) -> Result<Vec<Vec<usize>>> {
    let mut members = vec![Vec::new(); h.len()];
    for (i, path) in y.paths().enumerate() {
        if !h.is_root_path(path) {
            return Err(Error::UnknownNode(path.join(h.separator())));
        }
        for d in 1..=path.len() {
            let n = h.index_of_path(&path[..d]).expect("checked by is_root_path");
            members[n].push(i);
        }
    }
    Ok(members)
}

fn union_of(members: &[Vec<usize>], nodes: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = nodes
        .iter()
        .flat_map(|&n| members[n].iter().map(move |&s| (s, n)))
        .collect();
    out.sort_unstable();
    out.dedup_by_key(|(s, _)| *s);
    out
}

fn per_node_tasks(h: &Hierarchy, members: &[Vec<usize>]) -> Vec<Task> {
    (0..h.len())
        .map(|n| {
            let node = h.node_at(n);
            let mut siblings: Vec<usize> = h
                .parents(node)
                .expect("node comes from the hierarchy")
                .into_iter()
                .flat_map(|p| {
                    let v = match p {
                        None => Vertex::Root,
                        Some(p) => Vertex::Node(h.index_of(p).expect("parent is in hierarchy")),
                    };
                    h.child_indices(v).iter().copied()
                })
                .filter(|&s| s != n)
                .collect();
            siblings.sort_unstable();
            siblings.dedup();

            let positives = &members[n];
            let mut labelled: Vec<(usize, &str)> = positives.iter().map(|&s| (s, POSITIVE)).collect();
            labelled.extend(
                union_of(members, &siblings)
                    .into_iter()
                    .filter(|(s, _)| positives.binary_search(s).is_err())
                    .map(|(s, _)| (s, NEGATIVE)),
            );
            labelled.sort_unstable();
            Task {
                locus: Locus::Node(node.clone()),
                samples: labelled.iter().map(|&(s, _)| s).collect(),
                targets: labelled.iter().map(|&(_, t)| t.to_string()).collect(),
                fallback: NEGATIVE.to_string(),
            }
        })
        .collect()
}

fn per_parent_tasks(h: &Hierarchy, members: &[Vec<usize>]) -> Vec<Task> {
    let parents = std::iter::once(Vertex::Root).chain((0..h.len()).map(Vertex::Node));
    parents
        .filter_map(|p| {
            let children = h.child_indices(p);
            let first = *children.first()?;
            let pairs = union_of(members, children);
            Some(Task {
                locus: match p {
                    Vertex::Root => Locus::Root,
                    Vertex::Node(i) => Locus::Node(h.node_at(i).clone()),
                },
                samples: pairs.iter().map(|&(s, _)| s).collect(),
                targets: pairs.iter().map(|&(_, c)| h.node_at(c).name().to_string()).collect(),
                fallback: h.node_at(first).name().to_string(),
            })
        })
        .collect()
}

fn per_level_tasks(h: &Hierarchy, members: &[Vec<usize>]) -> Vec<Task> {
    (0..h.n_levels())
        .filter_map(|k| {
            let nodes = h.level_indices(k);
            let first = *nodes.first()?;
            let pairs = union_of(members, nodes);
            Some(Task {
                locus: Locus::Level(k),
                samples: pairs.iter().map(|&(s, _)| s).collect(),
                targets: pairs.iter().map(|&(_, n)| h.node_at(n).name().to_string()).collect(),
                fallback: h.node_at(first).name().to_string(),
            })
        })
        .collect()
}

fn flat_tasks(h: &Hierarchy, y: &LabelMatrix) -> Result<Vec<Task>> {
    let depth = h.n_levels();
    let (samples, targets): (Vec<usize>, Vec<String>) = y
        .paths()
        .enumerate()
        .filter(|(_, p)| p.len() == depth && depth > 0)
        .map(|(i, p)| (i, p.join(h.separator())))
        .unzip();
    if samples.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    Ok(vec![Task {
        locus: Locus::Root,
        fallback: targets[0].clone(),
        samples,
        targets,
    }])
}

fn fit_tasks<E: Estimator>(
    tasks: &[Task],
    x: &FeatureMatrix,
    estimator: &E,
    workers: usize,
) -> Result<BTreeMap<Locus, E::Model>> {
    let run = |task: &Task| -> Result<(Locus, E::Model)> {
        let model = if task.samples.is_empty() {
            estimator.constant(&task.fallback, x.n_features())
        } else {
            estimator.fit(&x.select(&task.samples), &task.targets)?
        };
        Ok((task.locus.clone(), model))
    };
    let fitted: Vec<Result<(Locus, E::Model)>> = if workers == 1 {
        tasks.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::WorkerPool(e.to_string()))?;
        pool.install(|| tasks.par_iter().map(run).collect())
    };
    fitted.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{build_hierarchy, DEFAULT_SEPARATOR};
    use crate::learner::TrainedLearner;

    fn animals() -> (FeatureMatrix, LabelMatrix) {
        (
            FeatureMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap(),
            LabelMatrix::new([
                ["Animal", "Mammal", "Cat"],
                ["Animal", "Reptile", "Turtle"],
            ])
            .unwrap(),
        )
    }

    fn node(path: &[&str]) -> Locus {
        Locus::Node(NodeId::new(path, DEFAULT_SEPARATOR).unwrap())
    }

    #[test]
    fn lcpn_siblings_policy_tasks() {
        let (_, y) = animals();
        let h = build_hierarchy(&y).unwrap();
        let members = memberships(&h, &y).unwrap();
        let tasks = per_node_tasks(&h, &members);
        assert_eq!(tasks.len(), 5);
        let mammal = tasks.iter().find(|t| t.locus == node(&["Animal", "Mammal"])).unwrap();
        assert_eq!(mammal.samples, [0, 1]);
        assert_eq!(mammal.targets, [POSITIVE, NEGATIVE]);
        let animal = tasks.iter().find(|t| t.locus == node(&["Animal"])).unwrap();
        assert_eq!(animal.targets, [POSITIVE, POSITIVE]);
    }

    #[test]
    fn lcpn_animals_model() {
        let (x, y) = animals();
        let h = build_hierarchy(&y).unwrap();
        let m = fit_lcpn(&h, &x, &y, LearnerSpec::default(), 1).unwrap();
        assert_eq!(m.learners().len(), 5);
        let animal = m.learner(&node(&["Animal"])).unwrap();
        assert!(matches!(animal, TrainedLearner::Constant(_)));
        assert_eq!(animal.classes(), [POSITIVE]);
        assert_eq!(m.predict(&x).unwrap(), y);
    }

    #[test]
    fn missing_labels_are_excluded() {
        let x = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let y = LabelMatrix::new([["A", "B", ""], ["A", "B", "C"]]).unwrap();
        let h = build_hierarchy(&y).unwrap();

        let m = fit_lcpn(&h, &x, &y, LearnerSpec::default(), 1).unwrap();
        let c = m.learner(&node(&["A", "B", "C"])).unwrap();
        assert_eq!(c.classes(), [POSITIVE]);

        let members = memberships(&h, &y).unwrap();
        let tasks = per_parent_tasks(&h, &members);
        let ab = tasks.iter().find(|t| t.locus == node(&["A", "B"])).unwrap();
        assert_eq!(ab.samples, [1]);
        let m = fit_lcppn(&h, &x, &y, LearnerSpec::default(), 1).unwrap();
        assert_eq!(m.learner(&node(&["A", "B"])).unwrap().classes(), ["A://B://C"]);

        let tasks = per_level_tasks(&h, &members);
        assert_eq!(tasks[2].samples, [1]);

        let tasks = flat_tasks(&h, &y).unwrap();
        assert_eq!(tasks[0].samples, [1]);
    }

    #[test]
    fn lcppn_and_lcpl_animals_shapes() {
        let (x, y) = animals();
        let h = build_hierarchy(&y).unwrap();
        let m = fit_lcppn(&h, &x, &y, LearnerSpec::default(), 1).unwrap();
        let loci: Vec<&Locus> = m.learners().keys().collect();
        assert_eq!(
            loci,
            [
                &Locus::Root,
                &node(&["Animal"]),
                &node(&["Animal", "Mammal"]),
                &node(&["Animal", "Reptile"])
            ]
        );
        assert_eq!(
            m.learner(&node(&["Animal"])).unwrap().classes(),
            ["Animal://Mammal", "Animal://Reptile"]
        );

        let m = fit_lcpl(&h, &x, &y, LearnerSpec::default(), 1).unwrap();
        assert_eq!(m.learners().len(), 3);
        assert_eq!(
            m.learner(&Locus::Level(1)).unwrap().classes(),
            ["Animal://Mammal", "Animal://Reptile"]
        );
    }

    #[test]
    fn flat_expands_leaf_to_full_path() {
        let (x, y) = animals();
        let h = build_hierarchy(&y).unwrap();
        let m = fit_flat(&h, &x, &y, LearnerSpec::default(), 1).unwrap();
        assert_eq!(
            m.learner(&Locus::Root).unwrap().classes(),
            ["Animal://Mammal://Cat", "Animal://Reptile://Turtle"]
        );
        assert_eq!(m.predict(&x).unwrap().row(0), ["Animal", "Mammal", "Cat"]);
    }

    #[test]
    fn single_chain_predicts_the_chain() {
        let x = FeatureMatrix::from_rows(&[vec![0.5]]).unwrap();
        let y = LabelMatrix::new([["A", "B"]]).unwrap();
        let h = build_hierarchy(&y).unwrap();
        let probe = FeatureMatrix::from_rows(&[vec![-100.0], vec![3.0], vec![1e6]]).unwrap();
        for s in Strategy::ALL {
            let m = fit(s, &h, &x, &y, LearnerSpec::default(), 1).unwrap();
            let p = m.predict(&probe).unwrap();
            assert!(p.rows().iter().all(|r| r == &["A", "B"]), "{s}");
        }
    }

    #[test]
    fn depth_one_is_flat() {
        let x = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let y = LabelMatrix::new([["A"], ["B"]]).unwrap();
        let h = build_hierarchy(&y).unwrap();
        let m = fit_lcppn(&h, &x, &y, LearnerSpec::default(), 1).unwrap();
        assert_eq!(m.learners().len(), 1);
        assert_eq!(m.learner(&Locus::Root).unwrap().classes(), ["A", "B"]);
    }

    #[test]
    fn errors() {
        let (x, y) = animals();
        let h = build_hierarchy(&y).unwrap();
        let short = FeatureMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(
            fit_lcpn(&h, &short, &y, LearnerSpec::default(), 1),
            Err(Error::Alignment { .. })
        ));
        assert!(matches!(
            fit_lcpn(&h, &x, &y, LearnerSpec::default(), 0),
            Err(Error::InvalidConfig(_))
        ));
        let m = fit_lcpn(&h, &x, &y, LearnerSpec::default(), 1).unwrap();
        let wide = FeatureMatrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(
            m.predict(&wide),
            Err(Error::FeatureDimensionMismatch { expected: 2, found: 3 })
        ));
        let other = LabelMatrix::new([["Plant"], ["Animal"]]).unwrap();
        assert!(matches!(
            fit_lcpn(&h, &x, &other, LearnerSpec::default(), 1),
            Err(Error::UnknownNode(_))
        ));
        assert!("global".parse::<Strategy>().is_err());
    }
}
