//! Pretopological clustering of mixed data.
//!
//! A pretopological space over the rows is given by weighted directed graphs,
//! one threshold per graph and a positive DNF over the threshold literals. The
//! pseudoclosure adds a point to a set when the DNF holds for the summed
//! weights of its edges into the set. Closures of well-separated seeds are
//! arranged by inclusion into a quasi-hierarchy whose minimal substantial
//! closures form the partition.

use std::collections::BTreeSet;

use crate::dataset::{quantile_sorted, MixedDataset};
use crate::distance::{default_gamma, huang_unchecked, squared_euclidean};
use crate::error::{invalid, Error, Result};
use crate::par;
use crate::partition::{Hierarchy, HierarchyNode, Overlap, Partition};

/// Slack when comparing a weight sum with its threshold.
const THRESHOLD_SLACK: f64 = 1e-12;

/// A weighted directed graph stored as sorted out-adjacency lists.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    pub name: String,
    /// `edges[x]` holds `(y, w(x→y))` sorted by `y`, without self-loops.
    pub edges: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    pub fn new(name: impl Into<String>, mut edges: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        for (x, row) in edges.iter_mut().enumerate() {
            row.retain(|&(y, _)| y != x);
            row.sort_by_key(|e| e.0);
            if row.iter().any(|&(_, w)| !(w >= 0.0) || !w.is_finite()) {
                return Err(invalid("weights", "must be finite and non-negative"));
            }
        }
        Ok(Self {
            name: name.into(),
            edges,
        })
    }

    pub fn n(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.edges[x]
            .binary_search_by_key(&y, |e| e.0)
            .map_or(0.0, |pos| self.edges[x][pos].1)
    }

    pub fn out_weight(&self, x: usize) -> f64 {
        self.edges[x].iter().map(|e| e.1).sum()
    }

    /// Summed weight of the edges from `x` into the set marked in `mask`.
    pub fn weight_into(&self, x: usize, mask: &[bool]) -> f64 {
        self.edges[x]
            .iter()
            .filter(|&&(y, _)| mask[y])
            .map(|e| e.1)
            .sum()
    }
}

/// Graphs, thresholds and the DNF that together define the pseudoclosure.
#[derive(Clone, Debug, PartialEq)]
pub struct PretopoSpace {
    graphs: Vec<WeightedGraph>,
    thresholds: Vec<f64>,
    dnf: Vec<Vec<usize>>,
}

/// Result of iterating the pseudoclosure to a fixpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct Closure {
    pub members: Vec<usize>,
    /// Pseudoclosure applications that changed the set.
    pub iterations: usize,
}

impl PretopoSpace {
    pub fn new(graphs: Vec<WeightedGraph>, thresholds: Vec<f64>, dnf: Vec<Vec<usize>>) -> Result<Self> {
        if graphs.is_empty() {
            return Err(invalid("graphs", "need at least one graph"));
        }
        let n = graphs[0].n();
        if graphs.iter().any(|g| g.n() != n) {
            return Err(Error::SizeMismatch("graphs disagree on the node count".into()));
        }
        if thresholds.len() != graphs.len() {
            return Err(Error::SizeMismatch("one threshold per graph is required".into()));
        }
        if dnf.is_empty() || dnf.iter().any(Vec::is_empty) {
            return Err(invalid("dnf", "needs at least one non-empty clause"));
        }
        if dnf.iter().flatten().any(|&l| l >= graphs.len()) {
            return Err(invalid("dnf", "literal refers to a missing graph"));
        }
        Ok(Self {
            graphs,
            thresholds,
            dnf,
        })
    }

    pub fn n(&self) -> usize {
        self.graphs[0].n()
    }

    pub fn graphs(&self) -> &[WeightedGraph] {
        &self.graphs
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn dnf(&self) -> &[Vec<usize>] {
        &self.dnf
    }

    /// `V_i(A, x)`: the weight from `x` into `A` in graph `i` reaches θ_i.
    fn literal(&self, i: usize, x: usize, mask: &[bool]) -> bool {
        let s = self.graphs[i].weight_into(x, mask);
        s > 0.0 && s >= self.thresholds[i] - THRESHOLD_SLACK
    }

    fn joins(&self, x: usize, mask: &[bool]) -> bool {
        self.dnf
            .iter()
            .any(|clause| clause.iter().all(|&i| self.literal(i, x, mask)))
    }

    /// Pseudoclosure on a membership mask.
    pub fn pseudoclosure_mask(&self, mask: &[bool]) -> Vec<bool> {
        if !mask.iter().any(|&m| m) {
            return mask.to_vec();
        }
        par::map_indices(self.n(), |x| mask[x] || self.joins(x, mask))
    }

    /// `a(A) = A ∪ {x : DNF(V_1(A,x), …) holds}`.
    pub fn pseudoclosure(&self, set: &[usize]) -> Vec<usize> {
        from_mask(&self.pseudoclosure_mask(&to_mask(set, self.n())))
    }

    /// Smallest fixpoint of the pseudoclosure containing `seed`.
    pub fn closure(&self, seed: &[usize]) -> Closure {
        let mut mask = to_mask(seed, self.n());
        let mut iterations = 0;
        loop {
            let next = self.pseudoclosure_mask(&mask);
            if next == mask {
                break;
            }
            mask = next;
            iterations += 1;
        }
        Closure {
            members: from_mask(&mask),
            iterations,
        }
    }
}

fn to_mask(set: &[usize], n: usize) -> Vec<bool> {
    let mut m = vec![false; n];
    for &x in set {
        m[x] = true;
    }
    m
}

fn from_mask(mask: &[bool]) -> Vec<usize> {
    (0..mask.len()).filter(|&x| mask[x]).collect()
}

/// Settings of the pretopological clusterer.
#[derive(Clone, Debug, PartialEq)]
pub struct PretopoConfig {
    /// Neighborhood size used to sparsify the graphs and calibrate thresholds.
    pub knn: usize,
    pub edge_floor: f64,
    pub threshold_quantile: f64,
    /// Upper bound on the number of seeds; `⌈√n⌉` when unset.
    pub seeds: Option<usize>,
    /// Clauses over graph names (`num`, `cat`); conjunction of all graphs when unset.
    pub dnf: Option<Vec<Vec<String>>>,
    /// Closures with Jaccard similarity at or above this value are merged.
    pub merge_overlap: Option<f64>,
    /// Smallest closure that may become a cluster; `max(2, ⌈0.02·n⌉)` when unset.
    pub min_cluster_size: Option<usize>,
}

impl Default for PretopoConfig {
    fn default() -> Self {
        Self {
            knn: 10,
            edge_floor: 0.01,
            threshold_quantile: 0.5,
            seeds: None,
            dnf: None,
            merge_overlap: None,
            min_cluster_size: None,
        }
    }
}

/// Parses clause lists such as `[[num,cat]]` or `[[num],[cat]]`.
pub fn parse_dnf(text: &str) -> Result<Vec<Vec<String>>> {
    let t = text.trim();
    let inner = t
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| invalid("dnf", format!("expected [[...],...], got `{text}`")))?;
    let mut clauses = Vec::new();
    let mut rest = inner.trim();
    while !rest.is_empty() {
        let body = rest
            .strip_prefix('[')
            .ok_or_else(|| invalid("dnf", format!("expected `[` in `{text}`")))?;
        let end = body
            .find(']')
            .ok_or_else(|| invalid("dnf", format!("unclosed clause in `{text}`")))?;
        let clause: Vec<String> = body[..end]
            .split(',')
            .map(|s| s.trim().to_owned())
            .filter(|s| !s.is_empty())
            .collect();
        if clause.is_empty() {
            return Err(invalid("dnf", "empty clause"));
        }
        clauses.push(clause);
        rest = body[end + 1..].trim_start();
        rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
    }
    if clauses.is_empty() {
        return Err(invalid("dnf", "no clauses"));
    }
    Ok(clauses)
}

pub fn format_dnf(dnf: &[Vec<String>]) -> String {
    let clauses: Vec<String> = dnf.iter().map(|c| format!("[{}]", c.join(","))).collect();
    format!("[{}]", clauses.join(","))
}

impl PretopoConfig {
    pub const SECTION: &'static str = "pretopo";

    pub fn validate(&self) -> Result<()> {
        if self.knn < 1 {
            return Err(invalid("knn", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.edge_floor) {
            return Err(invalid("edge_floor", "must be in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.threshold_quantile) {
            return Err(invalid("threshold_quantile", "must be in [0, 1]"));
        }
        if self.seeds == Some(0) {
            return Err(invalid("seeds", "must be at least 1"));
        }
        if let Some(m) = self.merge_overlap {
            if !(m > 0.0 && m <= 1.0) {
                return Err(invalid("merge_overlap", "must be in (0, 1]"));
            }
        }
        if matches!(self.min_cluster_size, Some(m) if m < 1) {
            return Err(invalid("min_cluster_size", "must be at least 1"));
        }
        Ok(())
    }

    /// Applies `key = value` pairs of a `[pretopo]` section.
    pub fn apply_pairs<'a, I>(&mut self, pairs: I) -> Result<()>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        fn num<T: std::str::FromStr>(key: &'static str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| invalid(key, format!("cannot parse `{v}`")))
        }
        for (key, value) in pairs {
            let auto = value.trim().eq_ignore_ascii_case("auto");
            match key.trim() {
                "knn" => self.knn = num("knn", value)?,
                "edge_floor" => self.edge_floor = num("edge_floor", value)?,
                "threshold_quantile" => self.threshold_quantile = num("threshold_quantile", value)?,
                "seeds" => self.seeds = if auto { None } else { Some(num("seeds", value)?) },
                "dnf" => self.dnf = if auto { None } else { Some(parse_dnf(value)?) },
                "merge_overlap" => {
                    self.merge_overlap = if auto || value.trim() == "off" {
                        None
                    } else {
                        Some(num("merge_overlap", value)?)
                    }
                }
                "min_cluster_size" => {
                    self.min_cluster_size = if auto {
                        None
                    } else {
                        Some(num("min_cluster_size", value)?)
                    }
                }
                other => {
                    return Err(Error::Config(format!("unknown key `{other}` in [pretopo]")))
                }
            }
        }
        self.validate()
    }

    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let auto = || "auto".to_owned();
        vec![
            ("knn", self.knn.to_string()),
            ("edge_floor", self.edge_floor.to_string()),
            ("threshold_quantile", self.threshold_quantile.to_string()),
            ("seeds", self.seeds.map_or_else(auto, |s| s.to_string())),
            ("dnf", self.dnf.as_deref().map_or_else(auto, format_dnf)),
            (
                "merge_overlap",
                self.merge_overlap.map_or_else(|| "off".into(), |m| m.to_string()),
            ),
            (
                "min_cluster_size",
                self.min_cluster_size.map_or_else(auto, |m| m.to_string()),
            ),
        ]
    }
}

/// Indices of the `k` largest entries of `row` (excluding `x`), ties to the
/// lower index.
fn top_k(row: &[f64], x: usize, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).filter(|&y| y != x).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Builds the numeric and categorical graphs.
///
/// Numeric weights are `exp(−d/σ̄²)` with `d` the squared Euclidean distance
/// on standardized numerics and `σ̄²` its mean over pairs; categorical
/// weights are the fraction of matching columns. Both graphs keep an edge
/// `x → y` when `x` and `y` are among each other's `knn` strongest numeric
/// neighbors (categorical neighbors without numerics) and its weight reaches
/// `edge_floor`. Each threshold is the `threshold_quantile` of the kept
/// weight per point divided by `knn`.
pub fn build_space(d: &MixedDataset, cfg: &PretopoConfig) -> Result<PretopoSpace> {
    cfg.validate()?;
    d.require_complete()?;
    let n = d.n_rows();
    if n < 2 {
        return Err(Error::InvalidDataset("need at least 2 rows".into()));
    }
    let std = d.standardize();
    let p = d.n_numeric();
    let q = d.n_categorical();
    let k = cfg.knn.min(n - 1);

    let mut dense: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
    if p > 0 {
        let sq: Vec<Vec<f64>> = par::map_indices(n, |x| {
            (0..n)
                .map(|y| squared_euclidean(std.numeric_row(x), std.numeric_row(y)))
                .collect()
        });
        let total: f64 = sq.iter().flatten().sum();
        let mean = total / (n * (n - 1)) as f64;
        let scale = if mean > 0.0 { mean } else { 1.0 };
        let w = sq
            .iter()
            .enumerate()
            .map(|(x, row)| {
                row.iter()
                    .enumerate()
                    .map(|(y, v)| if x == y { 0.0 } else { (-v / scale).exp() })
                    .collect()
            })
            .collect();
        dense.push(("num".into(), w));
    }
    if q > 0 {
        let w = par::map_indices(n, |x| {
            (0..n)
                .map(|y| {
                    if x == y {
                        0.0
                    } else {
                        let same = d
                            .categorical_row(x)
                            .iter()
                            .zip(d.categorical_row(y))
                            .filter(|(a, b)| a == b)
                            .count();
                        same as f64 / q as f64
                    }
                })
                .collect()
        });
        dense.push(("cat".into(), w));
    }
    let neighborhoods: Vec<Vec<usize>> = {
        let base = &dense[0].1;
        let knn = par::map_indices(n, |x| top_k(&base[x], x, k));
        (0..n)
            .map(|x| knn[x].iter().copied().filter(|y| knn[*y].contains(&x)).collect())
            .collect()
    };

    let mut graphs = Vec::with_capacity(dense.len());
    let mut thresholds = Vec::with_capacity(dense.len());
    for (name, w) in &dense {
        let edges: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|x| {
                neighborhoods[x]
                    .iter()
                    .map(|&y| (y, w[x][y]))
                    .filter(|&(_, v)| v >= cfg.edge_floor && v > 0.0)
                    .collect()
            })
            .collect();
        let mut means: Vec<f64> = edges
            .iter()
            .map(|row| row.iter().map(|e| e.1).sum::<f64>() / k as f64)
            .collect();
        means.sort_by(f64::total_cmp);
        thresholds.push(quantile_sorted(&means, cfg.threshold_quantile));
        graphs.push(WeightedGraph::new(name.clone(), edges)?);
    }

    let dnf = match &cfg.dnf {
        None => vec![(0..graphs.len()).collect()],
        Some(clauses) => clauses
            .iter()
            .map(|clause| {
                clause
                    .iter()
                    .map(|name| {
                        graphs.iter().position(|g| &g.name == name).ok_or_else(|| {
                            invalid("dnf", format!("no graph named `{name}` for this dataset"))
                        })
                    })
                    .collect::<Result<Vec<usize>>>()
            })
            .collect::<Result<_>>()?,
    };
    PretopoSpace::new(graphs, thresholds, dnf)
}

/// Points ordered by decreasing total out-weight, ties to the lower index.
fn density_order(s: &PretopoSpace) -> Vec<usize> {
    let density: Vec<f64> = (0..s.n())
        .map(|x| s.graphs.iter().map(|g| g.out_weight(x)).sum())
        .collect();
    let mut order: Vec<usize> = (0..s.n()).collect();
    order.sort_by(|&a, &b| density[b].total_cmp(&density[a]).then(a.cmp(&b)));
    order
}

/// Huang distances on standardized numerics with the default γ, and the
/// 10th percentile of the off-diagonal values.
fn separation(d: &MixedDataset) -> (Vec<f64>, f64) {
    let std = d.standardize();
    let (gamma, _) = default_gamma(&std);
    let n = d.n_rows();
    let h: Vec<f64> = par::map_indices(n, |x| {
        (0..n).map(|y| huang_unchecked(&std, x, y, gamma)).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    let mut upper: Vec<f64> = (0..n)
        .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
        .map(|(x, y)| h[x * n + y])
        .collect();
    upper.sort_by(f64::total_cmp);
    let floor = if upper.is_empty() {
        0.0
    } else {
        quantile_sorted(&upper, 0.1)
    };
    (h, floor)
}

/// Greedy seeds in decreasing density order. A point is skipped when its
/// Huang distance to an earlier seed is below the 10th percentile of all
/// pairwise distances, or when an earlier seed's closure already holds it.
pub fn select_seeds(d: &MixedDataset, s: &PretopoSpace, n_seeds: usize) -> Result<Vec<Vec<usize>>> {
    if n_seeds < 1 {
        return Err(invalid("seeds", "must be at least 1"));
    }
    if n_seeds > s.n() {
        return Err(invalid("seeds", "exceeds the row count"));
    }
    d.require_complete()?;
    Ok(seed_closures(d, s, n_seeds)
        .into_iter()
        .map(|c| vec![c.seed])
        .collect())
}

fn seed_closures(d: &MixedDataset, space: &PretopoSpace, max_seeds: usize) -> Vec<SeedClosure> {
    let n = d.n_rows();
    let (h, floor) = separation(d);
    let mut seeds: Vec<usize> = Vec::new();
    let mut covered = vec![false; n];
    let mut closures = Vec::new();
    for x in density_order(space) {
        if covered[x] || !seeds.iter().all(|&y| h[x * n + y] >= floor && x != y) {
            continue;
        }
        seeds.push(x);
        let c = space.closure(&[x]);
        for &m in &c.members {
            covered[m] = true;
        }
        closures.push(SeedClosure { seed: x, closure: c });
        if seeds.len() == max_seeds {
            break;
        }
    }
    closures
}

/// Closure of one seed with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedClosure {
    pub seed: usize,
    pub closure: Closure,
}

/// Inclusion DAG of closures under a virtual root (node 0).
///
/// Equal sets are merged (first occurrence kept). Each closure's parents are
/// its minimal strict supersets, or the root when it has none. Intersecting
/// non-nested pairs are recorded with the shared fraction of the smaller set.
pub fn quasi_hierarchy(closures: &[Vec<usize>]) -> Hierarchy {
    let items: Vec<SeedClosure> = closures
        .iter()
        .enumerate()
        .map(|(i, c)| SeedClosure {
            seed: i,
            closure: Closure {
                members: c.clone(),
                iterations: 0,
            },
        })
        .collect();
    let mut h = hierarchy_of(&items);
    for node in h.nodes.iter_mut() {
        node.seed = None;
        node.iterations = None;
    }
    h
}

fn hierarchy_of(items: &[SeedClosure]) -> Hierarchy {
    let mut sets: Vec<&SeedClosure> = Vec::new();
    for it in items {
        if !sets.iter().any(|s| s.closure.members == it.closure.members) {
            sets.push(it);
        }
    }
    let union: BTreeSet<usize> = sets.iter().flat_map(|s| s.closure.members.iter().copied()).collect();
    let total = union.len().max(1) as f64;
    let m = sets.len();
    let subset = |a: &[usize], b: &[usize]| a.len() < b.len() && a.iter().all(|x| b.binary_search(x).is_ok());
    let contains: Vec<Vec<bool>> = (0..m)
        .map(|a| (0..m).map(|b| subset(&sets[a].closure.members, &sets[b].closure.members)).collect())
        .collect();
    let mut nodes = vec![HierarchyNode {
        id: 0,
        parents: Vec::new(),
        members: union.into_iter().collect(),
        scale: 1.0,
        seed: None,
        iterations: None,
    }];
    for a in 0..m {
        let supers: Vec<usize> = (0..m).filter(|&b| contains[a][b]).collect();
        let minimal: Vec<usize> = supers
            .iter()
            .copied()
            .filter(|&b| !supers.iter().any(|&c| contains[c][b]))
            .map(|b| b + 1)
            .collect();
        let members = sets[a].closure.members.clone();
        nodes.push(HierarchyNode {
            id: a + 1,
            parents: if minimal.is_empty() { vec![0] } else { minimal },
            scale: members.len() as f64 / total,
            members,
            seed: Some(sets[a].seed),
            iterations: Some(sets[a].closure.iterations),
        });
    }
    let mut overlaps = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            if contains[a][b] || contains[b][a] {
                continue;
            }
            let (x, y) = (&sets[a].closure.members, &sets[b].closure.members);
            let shared = x.iter().filter(|v| y.binary_search(v).is_ok()).count();
            if shared > 0 {
                overlaps.push(Overlap {
                    a: a + 1,
                    b: b + 1,
                    fraction: shared as f64 / x.len().min(y.len()) as f64,
                });
            }
        }
    }
    Hierarchy { nodes, overlaps }
}

fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let shared = a.iter().filter(|v| b.binary_search(v).is_ok()).count();
    shared as f64 / (a.len() + b.len() - shared) as f64
}

/// Output of [`pretopomd`].
#[derive(Clone, Debug)]
pub struct PretopoResult {
    pub partition: Partition,
    pub hierarchy: Hierarchy,
    pub closures: Vec<SeedClosure>,
    pub space: PretopoSpace,
}

/// The full pretopological clusterer.
///
/// Seeds are taken greedily in density order, skipping points that are too
/// close to an earlier seed or already inside an earlier closure. Clusters
/// are the minimal closures with at least `min_cluster_size` members. A point
/// inside several of them joins the one receiving the largest summed edge
/// weight from it (first on ties); a point covered only by a larger closure
/// joins the best cluster below the smallest such closure; the rest are
/// outliers.
pub fn pretopomd(d: &MixedDataset, cfg: &PretopoConfig) -> Result<PretopoResult> {
    let space = build_space(d, cfg)?;
    let n = d.n_rows();
    let max_seeds = cfg.seeds.unwrap_or_else(|| (n as f64).sqrt().ceil() as usize).min(n);
    d.require_complete()?;
    let mut closures = seed_closures(d, &space, max_seeds);
    let seed_count = closures.len();

    if let Some(t) = cfg.merge_overlap {
        let mut merged = true;
        while merged {
            merged = false;
            'outer: for a in 0..closures.len() {
                for b in a + 1..closures.len() {
                    if jaccard(&closures[a].closure.members, &closures[b].closure.members) >= t {
                        let other = closures.remove(b);
                        let mut set: BTreeSet<usize> = closures[a].closure.members.iter().copied().collect();
                        set.extend(other.closure.members);
                        closures[a].closure.members = set.into_iter().collect();
                        merged = true;
                        break 'outer;
                    }
                }
            }
        }
    }

    let hierarchy = hierarchy_of(&closures);
    let min_size = cfg
        .min_cluster_size
        .unwrap_or_else(|| 2usize.max((0.02 * n as f64).ceil() as usize));
    let sets: Vec<&[usize]> = hierarchy.nodes[1..].iter().map(|nd| nd.members.as_slice()).collect();
    let big: Vec<usize> = (0..sets.len()).filter(|&i| sets[i].len() >= min_size).collect();
    let within = |a: &[usize], b: &[usize]| a.iter().all(|x| b.binary_search(x).is_ok());
    let leaves: Vec<usize> = big
        .iter()
        .copied()
        .filter(|&a| !big.iter().any(|&b| sets[b].len() < sets[a].len() && within(sets[b], sets[a])))
        .collect();
    let leaf_masks: Vec<Vec<bool>> = leaves.iter().map(|&l| to_mask(sets[l], n)).collect();

    let labels: Vec<Option<usize>> = (0..n)
        .map(|x| {
            let mut cand: Vec<usize> = (0..leaves.len()).filter(|&li| leaf_masks[li][x]).collect();
            if cand.is_empty() {
                let smallest = big
                    .iter()
                    .copied()
                    .filter(|&b| sets[b].binary_search(&x).is_ok())
                    .min_by_key(|&b| sets[b].len())?;
                cand = (0..leaves.len())
                    .filter(|&li| within(sets[leaves[li]], sets[smallest]))
                    .collect();
            }
            let mut best: Option<(f64, usize)> = None;
            for li in cand {
                let s: f64 = space
                    .graphs
                    .iter()
                    .map(|g| g.weight_into(x, &leaf_masks[li]))
                    .sum();
                if best.is_none_or(|b| s > b.0) {
                    best = Some((s, li));
                }
            }
            best.map(|b| b.1)
        })
        .collect();

    let mut partition = Partition::new(labels, "pretopomd")
        .with_param("knn", cfg.knn)
        .with_param("edge_floor", cfg.edge_floor)
        .with_param("threshold_quantile", cfg.threshold_quantile)
        .with_param("seeds", seed_count)
        .with_param("min_cluster_size", min_size);
    for (i, t) in space.thresholds().iter().enumerate() {
        partition = partition.with_param(format!("theta_{}", space.graphs[i].name), t);
    }
    Ok(PretopoResult {
        partition,
        hierarchy,
        closures,
        space,
    })
}
