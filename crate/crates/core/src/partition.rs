//! Cluster labelings and nested point-set hierarchies shared by the clusterers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// Label written for outliers in exported partitions.
pub const OUTLIER: i64 = -1;

/// Per-row cluster labels; `None` marks an outlier.
///
/// Non-outlier labels are always compact: they form `0..k` with every value used.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    labels: Vec<Option<usize>>,
    k: usize,
    algorithm: String,
    params: Vec<(String, String)>,
}

impl Partition {
    /// Builds a partition from arbitrary labels, renumbering them to `0..k`
    /// in order of their first occurrence.
    pub fn new(labels: Vec<Option<usize>>, algorithm: impl Into<String>) -> Self {
        let mut map = BTreeMap::new();
        let mut compact = Vec::with_capacity(labels.len());
        for l in labels {
            compact.push(l.map(|l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            }));
        }
        Self {
            k: map.len(),
            labels: compact,
            algorithm: algorithm.into(),
            params: Vec::new(),
        }
    }

    /// Partition without outliers.
    pub fn from_assignments(labels: &[usize], algorithm: impl Into<String>) -> Self {
        Self::new(labels.iter().map(|&l| Some(l)).collect(), algorithm)
    }

    pub fn with_param(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.params.push((key.into(), value.to_string()));
        self
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Option<usize> {
        self.labels[i]
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Number of non-outlier clusters.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn algorithm(&self) -> &str {
        &self.algorithm
    }

    pub fn params(&self) -> &[(String, String)] {
        &self.params
    }

    pub fn outlier_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    pub fn outlier_fraction(&self) -> f64 {
        if self.labels.is_empty() {
            0.0
        } else {
            self.outlier_count() as f64 / self.labels.len() as f64
        }
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for l in self.labels.iter().flatten() {
            sizes[*l] += 1;
        }
        sizes
    }

    /// Row indices of cluster `c`.
    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == Some(c))
            .collect()
    }

    /// Labels as signed integers with [`OUTLIER`] for outliers.
    pub fn signed_labels(&self) -> Vec<i64> {
        self.labels
            .iter()
            .map(|l| l.map_or(OUTLIER, |l| l as i64))
            .collect()
    }

    /// Two-column CSV: `row_index,label`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["row_index", "label"])?;
        for (i, l) in self.signed_labels().into_iter().enumerate() {
            wtr.write_record([i.to_string(), l.to_string()])?;
        }
        wtr.flush().map_err(|source| Error::Io {
            path: "<partition writer>".into(),
            source,
        })
    }
}

/// A node of a [`Hierarchy`]: a point set with its parents and scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HierarchyNode {
    pub id: usize,
    pub parents: Vec<usize>,
    pub members: Vec<usize>,
    /// Merge height for dendrograms; closure size fraction for quasi-hierarchies.
    pub scale: f64,
    pub seed: Option<usize>,
    pub iterations: Option<usize>,
}

/// Fraction of the smaller set shared by two non-nested nodes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Overlap {
    pub a: usize,
    pub b: usize,
    pub fraction: f64,
}

/// Nested point sets with a parent relation. A dendrogram is a tree; a
/// pretopological quasi-hierarchy may give a node several parents.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Hierarchy {
    pub nodes: Vec<HierarchyNode>,
    pub overlaps: Vec<Overlap>,
}

#[derive(Serialize)]
struct NodeRecord<'a> {
    id: usize,
    parents: &'a [usize],
    size: usize,
    scale: f64,
    seed: Option<usize>,
    iterations: Option<usize>,
}

impl Hierarchy {
    pub fn roots(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.parents.is_empty())
            .map(|n| n.id)
            .collect()
    }

    pub fn children(&self, id: usize) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.parents.contains(&id))
            .map(|n| n.id)
            .collect()
    }

    pub fn leaves(&self) -> Vec<usize> {
        let mut has_child = vec![false; self.nodes.len()];
        for n in &self.nodes {
            for &p in &n.parents {
                has_child[p] = true;
            }
        }
        (0..self.nodes.len()).filter(|&i| !has_child[i]).collect()
    }

    /// Checks that every child's members are contained in each parent's.
    pub fn is_consistent(&self) -> bool {
        self.nodes.iter().all(|n| {
            n.parents.iter().all(|&p| {
                let parent = &self.nodes[p].members;
                n.members.iter().all(|m| parent.binary_search(m).is_ok())
            })
        })
    }

    /// JSON node list: id, parents, member count, scale, seed, iterations.
    pub fn to_json(&self) -> String {
        let records: Vec<NodeRecord> = self
            .nodes
            .iter()
            .map(|n| NodeRecord {
                id: n.id,
                parents: &n.parents,
                size: n.members.len(),
                scale: n.scale,
                seed: n.seed,
                iterations: n.iterations,
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "nodes": records,
            "overlaps": self.overlaps,
        }))
        .expect("hierarchy serializes")
    }

    /// Indented text dendrogram, one node per line. A node with several
    /// parents is printed under each of them.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut stack: Vec<(usize, usize)> =
            self.roots().into_iter().rev().map(|r| (r, 0)).collect();
        while let Some((id, depth)) = stack.pop() {
            let n = &self.nodes[id];
            let _ = write!(
                out,
                "{:indent$}node {} size={} scale={:.6}",
                "",
                id,
                n.members.len(),
                n.scale,
                indent = 2 * depth
            );
            if let Some(s) = n.seed {
                let _ = write!(out, " seed={s}");
            }
            out.push('\n');
            for c in self.children(id).into_iter().rev() {
                stack.push((c, depth + 1));
            }
        }
        out
    }
}
