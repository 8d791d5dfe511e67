//! Label matrices and the rooted label hierarchy built from them.
//!
//! Every node is identified by its full path from the first level down
//! (`NodeId`), so the same label string under two different parents yields
//! two distinct nodes. Canonical node names join the path segments with a
//! reserved separator (`"://"` unless configured otherwise).

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Separator used to join path segments into canonical node names.
pub const DEFAULT_SEPARATOR: &str = "://";

/// Marker for a missing label cell.
pub const MISSING: &str = "";

/// Per-sample label paths, one column per hierarchy level.
///
/// Rows shorter than `n_levels` are padded with [`MISSING`]. Missing cells
/// may only form a suffix of a row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    rows: Vec<Vec<String>>,
    n_levels: usize,
}

impl LabelMatrix {
    /// Builds a matrix whose width is the longest row.
    pub fn new<R, S>(rows: impl IntoIterator<Item = R>) -> Result<Self>
    where
        R: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let rows: Vec<Vec<String>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(Into::into).collect())
            .collect();
        let n_levels = rows.iter().map(Vec::len).max().unwrap_or(0);
        Self::with_levels(rows, n_levels)
    }

    /// Builds a matrix with an explicit width; needed for zero-row matrices.
    pub fn with_levels(mut rows: Vec<Vec<String>>, n_levels: usize) -> Result<Self> {
        for (i, row) in rows.iter_mut().enumerate() {
            if row.len() > n_levels {
                return Err(Error::InvalidSchema(format!(
                    "row {i} has {} labels but the matrix has {n_levels} levels",
                    row.len()
                )));
            }
            check_suffix(row).map_err(|column| Error::MalformedLabelMatrix { row: i, column })?;
            row.resize(n_levels, MISSING.to_string());
        }
        Ok(Self { rows, n_levels })
    }

    pub fn empty(n_levels: usize) -> Self {
        Self {
            rows: Vec::new(),
            n_levels,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.rows.len()
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    /// Full padded row `i`.
    pub fn row(&self, i: usize) -> &[String] {
        &self.rows[i]
    }

    /// Non-missing prefix of row `i`.
    pub fn path(&self, i: usize) -> &[String] {
        non_missing_prefix(&self.rows[i])
    }

    pub fn paths(&self) -> impl Iterator<Item = &[String]> + '_ {
        self.rows.iter().map(|r| non_missing_prefix(r))
    }
}

/// Returns the index of the first non-missing cell that follows a missing one.
pub(crate) fn check_suffix<S: AsRef<str>>(row: &[S]) -> Result<(), usize> {
    let mut seen_missing = false;
    for (j, cell) in row.iter().enumerate() {
        if cell.as_ref().is_empty() {
            seen_missing = true;
        } else if seen_missing {
            return Err(j);
        }
    }
    Ok(())
}

pub(crate) fn non_missing_prefix<S: AsRef<str>>(row: &[S]) -> &[S] {
    let depth = row
        .iter()
        .position(|c| c.as_ref().is_empty())
        .unwrap_or(row.len());
    &row[..depth]
}

/// Path-identified hierarchy node.
///
/// Ordering is lexicographic on the canonical name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeId {
    name: String,
    path: Vec<String>,
}

impl NodeId {
    pub fn new<S: AsRef<str>>(path: &[S], separator: &str) -> Result<Self> {
        if path.is_empty() {
            return Err(Error::InvalidNodePath("empty path".into()));
        }
        if separator.is_empty() {
            return Err(Error::InvalidConfig("separator must not be empty".into()));
        }
        let mut segments = Vec::with_capacity(path.len());
        for seg in path {
            let seg = seg.as_ref();
            if seg.is_empty() {
                return Err(Error::InvalidNodePath(
                    "path segment is the missing-label marker".into(),
                ));
            }
            if seg.contains(separator) {
                return Err(Error::ReservedSeparator {
                    label: seg.to_string(),
                    separator: separator.to_string(),
                });
            }
            segments.push(seg.to_string());
        }
        Ok(Self {
            name: segments.join(separator),
            path: segments,
        })
    }

    /// Canonical name: path segments joined by the separator.
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn path(&self) -> &[String] {
        &self.path
    }

    /// Number of path segments; level-1 nodes have depth 1.
    pub fn depth(&self) -> usize {
        self.path.len()
    }

    /// The node's own label (last path segment).
    pub fn label(&self) -> &str {
        self.path.last().expect("node paths are non-empty")
    }
}

impl Ord for NodeId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.name
            .cmp(&other.name)
            .then_with(|| self.path.cmp(&other.path))
    }
}

impl PartialOrd for NodeId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A vertex of the hierarchy graph: the synthetic root or an indexed node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Vertex {
    Root,
    Node(usize),
}

/// Rooted label DAG. Immutable once built.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    separator: String,
    /// Sorted by canonical name; indices are stable for the lifetime of the value.
    nodes: Vec<NodeId>,
    by_name: HashMap<String, usize>,
    root_children: Vec<usize>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<Vertex>>,
    levels: Vec<Vec<usize>>,
}

impl Hierarchy {
    /// Builds the minimal hierarchy containing every non-missing prefix of every row.
    pub fn build(labels: &LabelMatrix, separator: &str) -> Result<Self> {
        if separator.is_empty() {
            return Err(Error::InvalidConfig("separator must not be empty".into()));
        }
        let mut edges = BTreeSet::new();
        for path in labels.paths() {
            if let Some(bad) = path.iter().find(|l| l.contains(separator)) {
                return Err(Error::ReservedSeparator {
                    label: bad.clone(),
                    separator: separator.to_string(),
                });
            }
            let mut parent = None;
            for depth in 1..=path.len() {
                let node = NodeId::new(&path[..depth], separator)?;
                edges.insert((parent.clone(), node.clone()));
                parent = Some(node);
            }
        }
        Ok(Self::from_edges(separator, edges))
    }

    /// Assembles a hierarchy from raw `(parent, child)` edges, `None` standing
    /// for the root. No structural invariant is enforced; use [`Hierarchy::validate`].
    pub fn from_edges(
        separator: &str,
        edges: impl IntoIterator<Item = (Option<NodeId>, NodeId)>,
    ) -> Self {
        let edges: BTreeSet<(Option<NodeId>, NodeId)> = edges.into_iter().collect();
        let mut node_set = BTreeSet::new();
        for (p, c) in &edges {
            if let Some(p) = p {
                node_set.insert(p.clone());
            }
            node_set.insert(c.clone());
        }
        let nodes: Vec<NodeId> = node_set.into_iter().collect();
        let by_name: HashMap<String, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.clone(), i))
            .collect();

        let mut root_children = Vec::new();
        let mut children = vec![Vec::new(); nodes.len()];
        let mut parents = vec![Vec::new(); nodes.len()];
        for (p, c) in &edges {
            let ci = by_name[c.name()];
            match p {
                None => {
                    root_children.push(ci);
                    parents[ci].push(Vertex::Root);
                }
                Some(p) => {
                    let pi = by_name[p.name()];
                    children[pi].push(ci);
                    parents[ci].push(Vertex::Node(pi));
                }
            }
        }
        root_children.sort_unstable();
        root_children.dedup();
        for list in children.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        for list in parents.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }

        let n_levels = nodes.iter().map(NodeId::depth).max().unwrap_or(0);
        let mut levels = vec![Vec::new(); n_levels];
        for (i, n) in nodes.iter().enumerate() {
            levels[n.depth() - 1].push(i);
        }

        Self {
            separator: separator.to_string(),
            nodes,
            by_name,
            root_children,
            children,
            parents,
            levels,
        }
    }

    pub fn separator(&self) -> &str {
        &self.separator
    }

    /// Non-root nodes in canonical order.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Number of non-root nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> Vec<Vec<&NodeId>> {
        self.levels
            .iter()
            .map(|l| l.iter().map(|&i| &self.nodes[i]).collect())
            .collect()
    }

    /// Nodes at level `k` (0-based; level 0 holds depth-1 nodes).
    pub fn level(&self, k: usize) -> Vec<&NodeId> {
        self.levels
            .get(k)
            .map(|l| l.iter().map(|&i| &self.nodes[i]).collect())
            .unwrap_or_default()
    }

    pub fn contains(&self, node: &NodeId) -> bool {
        self.index_of(node).is_some()
    }

    /// Looks up the node with the given path.
    pub fn node<S: AsRef<str>>(&self, path: &[S]) -> Option<&NodeId> {
        let id = NodeId::new(path, &self.separator).ok()?;
        self.index_of(&id).map(|i| &self.nodes[i])
    }

    pub fn node_by_name(&self, name: &str) -> Option<&NodeId> {
        self.by_name.get(name).map(|&i| &self.nodes[i])
    }

    pub fn root_children(&self) -> Vec<&NodeId> {
        self.root_children.iter().map(|&i| &self.nodes[i]).collect()
    }

    /// Direct children in canonical order.
    pub fn children(&self, node: &NodeId) -> Result<Vec<&NodeId>> {
        let i = self.require(node)?;
        Ok(self.children[i].iter().map(|&c| &self.nodes[c]).collect())
    }

    /// Direct parents; `None` stands for the root.
    pub fn parents(&self, node: &NodeId) -> Result<Vec<Option<&NodeId>>> {
        let i = self.require(node)?;
        Ok(self.parents[i]
            .iter()
            .map(|p| match p {
                Vertex::Root => None,
                Vertex::Node(j) => Some(&self.nodes[*j]),
            })
            .collect())
    }

    /// Proper ancestors excluding the root, shallow to deep.
    pub fn ancestors(&self, node: &NodeId) -> Result<Vec<&NodeId>> {
        self.require(node)?;
        (1..node.depth())
            .map(|d| {
                self.node(&node.path()[..d]).ok_or_else(|| {
                    Error::UnknownNode(node.path()[..d].join(&self.separator))
                })
            })
            .collect()
    }

    pub fn is_leaf(&self, node: &NodeId) -> Result<bool> {
        Ok(self.children[self.require(node)?].is_empty())
    }

    /// Number of nodes with at least one child, counting the root.
    pub fn non_leaf_count(&self) -> usize {
        let root = usize::from(!self.root_children.is_empty());
        root + self.children.iter().filter(|c| !c.is_empty()).count()
    }

    /// All edges in deterministic order, root edges first.
    pub fn edges(&self) -> Vec<(Option<&NodeId>, &NodeId)> {
        let mut out: Vec<_> = self
            .root_children
            .iter()
            .map(|&c| (None, &self.nodes[c]))
            .collect();
        for (p, cs) in self.children.iter().enumerate() {
            out.extend(cs.iter().map(|&c| (Some(&self.nodes[p]), &self.nodes[c])));
        }
        out
    }

    /// True when the non-missing prefix of `row` is a path starting at the root.
    pub fn is_root_path<S: AsRef<str>>(&self, row: &[S]) -> bool {
        if check_suffix(row).is_err() {
            return false;
        }
        let path = non_missing_prefix(row);
        let mut at = Vertex::Root;
        for d in 1..=path.len() {
            let Some(next) = self.node(&path[..d]).and_then(|n| self.index_of(n)) else {
                return false;
            };
            if !self.child_indices(at).contains(&next) {
                return false;
            }
            at = Vertex::Node(next);
        }
        true
    }

    /// Checks acyclicity, root reachability, parent presence, and level partition.
    pub fn validate(&self) -> ValidationReport {
        let mut failures = Vec::new();

        // Kahn's algorithm over non-root nodes; the root never has incoming edges.
        let mut indegree: Vec<usize> = self
            .parents
            .iter()
            .map(|ps| ps.iter().filter(|p| matches!(p, Vertex::Node(_))).count())
            .collect();
        let mut queue: VecDeque<usize> = (0..self.nodes.len()).filter(|&i| indegree[i] == 0).collect();
        let mut visited = 0;
        while let Some(i) = queue.pop_front() {
            visited += 1;
            for &c in &self.children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        let acyclic = visited == self.nodes.len();
        if !acyclic {
            failures.push(format!(
                "cycle detected among {} node(s)",
                self.nodes.len() - visited
            ));
        }

        let mut reached = vec![false; self.nodes.len()];
        let mut queue: VecDeque<usize> = self.root_children.iter().copied().collect();
        while let Some(i) = queue.pop_front() {
            if std::mem::replace(&mut reached[i], true) {
                continue;
            }
            queue.extend(self.children[i].iter().copied());
        }
        let unreachable: Vec<&str> = reached
            .iter()
            .enumerate()
            .filter(|(_, &r)| !r)
            .map(|(i, _)| self.nodes[i].name())
            .collect();
        let root_reachable = unreachable.is_empty();
        if !root_reachable {
            failures.push(format!("unreachable from root: {}", unreachable.join(", ")));
        }

        let orphans: Vec<&str> = self
            .parents
            .iter()
            .enumerate()
            .filter(|(_, ps)| ps.is_empty())
            .map(|(i, _)| self.nodes[i].name())
            .collect();
        let parents_present = orphans.is_empty();
        if !parents_present {
            failures.push(format!("nodes without a parent: {}", orphans.join(", ")));
        }

        let mut levels_consistent = true;
        for (k, level) in self.levels.iter().enumerate() {
            if let Some(&bad) = level.iter().find(|&&i| self.nodes[i].depth() != k + 1) {
                levels_consistent = false;
                failures.push(format!("{} misplaced in level {k}", self.nodes[bad]));
            }
        }
        let placed: usize = self.levels.iter().map(Vec::len).sum();
        if placed != self.nodes.len() {
            levels_consistent = false;
            failures.push("level partition does not cover every node".into());
        }
        for (p, c) in self.edges() {
            let parent_path: &[String] = p.map(NodeId::path).unwrap_or(&[]);
            let nested = c.depth() == parent_path.len() + 1 && c.path().starts_with(parent_path);
            if !nested {
                levels_consistent = false;
                failures.push(format!(
                    "edge {} -> {} does not descend exactly one level",
                    p.map(NodeId::name).unwrap_or("<root>"),
                    c
                ));
            }
        }

        ValidationReport {
            acyclic,
            root_reachable,
            parents_present,
            levels_consistent,
            n_levels: self.n_levels(),
            failures,
        }
    }

    pub(crate) fn index_of(&self, node: &NodeId) -> Option<usize> {
        self.by_name
            .get(node.name())
            .copied()
            .filter(|&i| self.nodes[i] == *node)
    }

    fn require(&self, node: &NodeId) -> Result<usize> {
        self.index_of(node)
            .ok_or_else(|| Error::UnknownNode(node.name().to_string()))
    }

    pub(crate) fn node_at(&self, i: usize) -> &NodeId {
        &self.nodes[i]
    }

    pub(crate) fn child_indices(&self, v: Vertex) -> &[usize] {
        match v {
            Vertex::Root => &self.root_children,
            Vertex::Node(i) => &self.children[i],
        }
    }

    pub(crate) fn level_indices(&self, k: usize) -> &[usize] {
        self.levels.get(k).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Index of the node at the end of `path`, if present.
    pub(crate) fn index_of_path<S: AsRef<str>>(&self, path: &[S]) -> Option<usize> {
        self.node(path).and_then(|n| self.index_of(n))
    }
}

/// Shorthand for [`Hierarchy::build`] with the default separator.
pub fn build_hierarchy(labels: &LabelMatrix) -> Result<Hierarchy> {
    Hierarchy::build(labels, DEFAULT_SEPARATOR)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub acyclic: bool,
    pub root_reachable: bool,
    pub parents_present: bool,
    pub levels_consistent: bool,
    pub n_levels: usize,
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }
}
