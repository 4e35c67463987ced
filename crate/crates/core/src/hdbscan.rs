//! Density hierarchy: core distances, mutual reachability, minimum spanning
//! tree, condensed tree and stability-based cluster selection.

use serde::Serialize;

use crate::dataset::MixedDataset;
use crate::dimred::{umap, UmapConfig};
use crate::distance::{DistanceMatrix, Metric};
use crate::error::{invalid, Error, Result};
use crate::par;
use crate::partition::Partition;

/// Relative floor on edge weights so that zero distances give finite λ.
const EPSILON: f64 = 1e-12;

/// Distance from each point to its `k`-th closest other point.
pub fn core_distances(dist: &DistanceMatrix, k: usize) -> Result<Vec<f64>> {
    let n = dist.n();
    if k < 1 || k >= n {
        return Err(invalid("min_samples", format!("must be in 1..{n}")));
    }
    Ok(par::map_indices(n, |i| {
        let mut row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dist.get(i, j)).collect();
        let (_, kth, _) = row.select_nth_unstable_by(k - 1, f64::total_cmp);
        *kth
    }))
}

/// `max(core_i, core_j, d_ij)` off the diagonal.
pub fn mutual_reachability(dist: &DistanceMatrix, core: &[f64]) -> Result<DistanceMatrix> {
    let n = dist.n();
    if core.len() != n {
        return Err(Error::SizeMismatch(format!(
            "{} core distances for {n} points",
            core.len()
        )));
    }
    DistanceMatrix::from_fn(n, dist.metric().clone(), |i, j| {
        Ok(dist.get(i, j).max(core[i]).max(core[j]))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

fn edge_key(w: f64, u: usize, v: usize) -> (f64, usize, usize) {
    (w, u.min(v), u.max(v))
}

fn key_cmp(x: (f64, usize, usize), y: (f64, usize, usize)) -> std::cmp::Ordering {
    x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2))
}

fn key_less(x: (f64, usize, usize), y: (f64, usize, usize)) -> bool {
    key_cmp(x, y).is_lt()
}

/// Prim's algorithm on a dense matrix starting from point 0. Among crossing
/// edges the smallest `(weight, min endpoint, max endpoint)` wins. Edges are
/// returned sorted by that key.
pub fn mst(m: &DistanceMatrix) -> Result<Vec<Edge>> {
    let n = m.n();
    if n < 2 {
        return Err(invalid("rows", "need at least 2 points"));
    }
    let mut in_tree = vec![false; n];
    let mut best: Vec<(f64, usize, usize)> = vec![(f64::INFINITY, usize::MAX, usize::MAX); n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for v in 0..n {
            if !in_tree[v] {
                let k = edge_key(m.get(current, v), current, v);
                if key_less(k, best[v]) {
                    best[v] = k;
                }
            }
        }
        let mut pick = usize::MAX;
        for v in 0..n {
            if !in_tree[v] && (pick == usize::MAX || key_less(best[v], best[pick])) {
                pick = v;
            }
        }
        let (w, a, b) = best[pick];
        edges.push(Edge { a, b, weight: w });
        in_tree[pick] = true;
        current = pick;
    }
    edges.sort_by(|x, y| key_cmp(edge_key(x.weight, x.a, x.b), edge_key(y.weight, y.a, y.b)));
    Ok(edges)
}

/// A cluster of the condensed tree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// λ at which the cluster appears; 0 for the root.
    pub lambda_birth: f64,
    /// Largest λ at which a point or child leaves the cluster.
    pub lambda_death: f64,
    pub size: usize,
    pub stability: f64,
}

/// Condensed cluster tree under a minimum cluster size.
#[derive(Clone, Debug, PartialEq)]
pub struct CondensedTree {
    pub min_cluster_size: usize,
    /// Cluster 0 is the root.
    pub clusters: Vec<ClusterNode>,
    /// Cluster each point fell out of.
    pub point_cluster: Vec<usize>,
    /// λ at which each point fell out.
    pub point_lambda: Vec<f64>,
}

#[derive(Serialize)]
struct NodeJson {
    id: usize,
    parent: Option<usize>,
    lambda_birth: f64,
    lambda_death: f64,
    size: usize,
    stability: f64,
}

impl CondensedTree {
    pub fn n_points(&self) -> usize {
        self.point_cluster.len()
    }

    pub fn parents(&self) -> Vec<Option<usize>> {
        self.clusters.iter().map(|c| c.parent).collect()
    }

    pub fn stabilities(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.stability).collect()
    }

    /// JSON node list with the λ interval and stability of each cluster.
    pub fn to_json(&self) -> String {
        let nodes: Vec<NodeJson> = self
            .clusters
            .iter()
            .map(|c| NodeJson {
                id: c.id,
                parent: c.parent,
                lambda_birth: c.lambda_birth,
                lambda_death: c.lambda_death,
                size: c.size,
                stability: c.stability,
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "min_cluster_size": self.min_cluster_size,
            "nodes": nodes,
        }))
        .expect("tree serializes")
    }
}

struct LinkageNode {
    left: usize,
    right: usize,
    distance: f64,
    size: usize,
}

/// Builds the single-linkage tree of the MST and condenses it.
pub fn condense(edges: &[Edge], n: usize, min_cluster_size: usize) -> Result<CondensedTree> {
    if min_cluster_size < 2 {
        return Err(invalid("min_cluster_size", "must be at least 2"));
    }
    if edges.len() + 1 != n {
        return Err(Error::SizeMismatch(format!(
            "{} edges do not span {n} points",
            edges.len()
        )));
    }
    let max_w = edges.iter().map(|e| e.weight).fold(0.0, f64::max);
    let floor = if max_w > 0.0 { EPSILON * max_w } else { 1.0 };

    // Single-linkage tree: ids < n are points, id n + s is the s-th merge.
    let mut sorted = edges.to_vec();
    sorted.sort_by(|x, y| x.weight.total_cmp(&y.weight));
    let mut uf: Vec<usize> = (0..2 * n).collect();
    fn find(uf: &mut [usize], mut x: usize) -> usize {
        while uf[x] != x {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        x
    }
    let mut size = vec![1usize; 2 * n];
    let mut linkage: Vec<LinkageNode> = Vec::with_capacity(n - 1);
    for (s, e) in sorted.iter().enumerate() {
        let ra = find(&mut uf, e.a);
        let rb = find(&mut uf, e.b);
        let id = n + s;
        uf[ra] = id;
        uf[rb] = id;
        size[id] = size[ra] + size[rb];
        linkage.push(LinkageNode {
            left: ra,
            right: rb,
            distance: e.weight.max(floor),
            size: size[id],
        });
    }
    let node_size = |id: usize| if id < n { 1 } else { linkage[id - n].size };

    let mut clusters = vec![ClusterNode {
        id: 0,
        parent: None,
        children: Vec::new(),
        lambda_birth: 0.0,
        lambda_death: 0.0,
        size: n,
        stability: 0.0,
    }];
    let mut point_cluster = vec![0usize; n];
    let mut point_lambda = vec![0.0; n];
    if n == 1 {
        return Ok(CondensedTree {
            min_cluster_size,
            clusters,
            point_cluster,
            point_lambda,
        });
    }

    let fall_out = |root: usize, cluster: usize, lambda: f64, pc: &mut [usize], pl: &mut [f64]| {
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            if x < n {
                pc[x] = cluster;
                pl[x] = lambda;
            } else {
                stack.push(linkage[x - n].left);
                stack.push(linkage[x - n].right);
            }
        }
    };

    // (linkage node, condensed cluster it belongs to)
    let mut stack = vec![(2 * n - 2, 0usize)];
    while let Some((node, cluster)) = stack.pop() {
        if node < n {
            // A lone point reached while its cluster still continues.
            point_cluster[node] = cluster;
            point_lambda[node] = clusters[cluster].lambda_death.max(clusters[cluster].lambda_birth);
            continue;
        }
        let link = &linkage[node - n];
        let lambda = 1.0 / link.distance;
        let (l, r) = (link.left, link.right);
        let (ls, rs) = (node_size(l), node_size(r));
        clusters[cluster].lambda_death = clusters[cluster].lambda_death.max(lambda);
        match (ls >= min_cluster_size, rs >= min_cluster_size) {
            (true, true) => {
                for child in [l, r] {
                    let id = clusters.len();
                    clusters.push(ClusterNode {
                        id,
                        parent: Some(cluster),
                        children: Vec::new(),
                        lambda_birth: lambda,
                        lambda_death: lambda,
                        size: node_size(child),
                        stability: 0.0,
                    });
                    clusters[cluster].children.push(id);
                    stack.push((child, id));
                }
            }
            (false, false) => {
                fall_out(l, cluster, lambda, &mut point_cluster, &mut point_lambda);
                fall_out(r, cluster, lambda, &mut point_cluster, &mut point_lambda);
            }
            (true, false) => {
                fall_out(r, cluster, lambda, &mut point_cluster, &mut point_lambda);
                stack.push((l, cluster));
            }
            (false, true) => {
                fall_out(l, cluster, lambda, &mut point_cluster, &mut point_lambda);
                stack.push((r, cluster));
            }
        }
    }

    for x in 0..n {
        let c = point_cluster[x];
        clusters[c].stability += point_lambda[x] - clusters[c].lambda_birth;
    }
    for c in 1..clusters.len() {
        let parent = clusters[c].parent.expect("non-root");
        let birth = clusters[parent].lambda_birth;
        let contrib = (clusters[c].lambda_birth - birth) * clusters[c].size as f64;
        clusters[parent].stability += contrib;
    }
    Ok(CondensedTree {
        min_cluster_size,
        clusters,
        point_cluster,
        point_lambda,
    })
}

/// Bottom-up selection maximizing total stability over antichains: a node
/// is kept when its stability exceeds the best total of its descendants.
pub fn select_stable(parents: &[Option<usize>], stability: &[f64]) -> Vec<usize> {
    let m = parents.len();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut roots = Vec::new();
    for (c, p) in parents.iter().enumerate() {
        match p {
            Some(p) => children[*p].push(c),
            None => roots.push(c),
        }
    }
    // Post-order so that children are resolved before their parent.
    let mut order = Vec::with_capacity(m);
    let mut stack: Vec<(usize, bool)> = roots.iter().rev().map(|&r| (r, false)).collect();
    while let Some((v, done)) = stack.pop() {
        if done {
            order.push(v);
            continue;
        }
        stack.push((v, true));
        for &c in children[v].iter().rev() {
            stack.push((c, false));
        }
    }
    let mut best = vec![0.0; m];
    let mut keep = vec![false; m];
    for &v in &order {
        let below: f64 = children[v].iter().map(|&c| best[c]).sum();
        if children[v].is_empty() || stability[v] > below {
            keep[v] = true;
            best[v] = stability[v];
        } else {
            best[v] = below;
        }
    }
    let mut selected = Vec::new();
    let mut stack: Vec<usize> = roots;
    while let Some(v) = stack.pop() {
        if keep[v] {
            selected.push(v);
        } else {
            stack.extend(children[v].iter().copied());
        }
    }
    selected.sort_unstable();
    selected
}

/// Selected clusters and the labeling they induce: a point belongs to the
/// selected cluster it fell out of or that contains the cluster it fell out of.
pub fn extract(tree: &CondensedTree) -> (Vec<usize>, Partition) {
    let selected = select_stable(&tree.parents(), &tree.stabilities());
    let mut label_of = vec![None; tree.clusters.len()];
    for (rank, &c) in selected.iter().enumerate() {
        label_of[c] = Some(rank);
    }
    let labels = (0..tree.n_points())
        .map(|x| {
            let mut c = Some(tree.point_cluster[x]);
            while let Some(v) = c {
                if let Some(l) = label_of[v] {
                    return Some(l);
                }
                c = tree.clusters[v].parent;
            }
            None
        })
        .collect();
    let p = Partition::new(labels, "hdbscan").with_param("min_cluster_size", tree.min_cluster_size);
    (selected, p)
}

pub fn condense_and_extract(
    edges: &[Edge],
    n: usize,
    min_cluster_size: usize,
) -> Result<(CondensedTree, Partition)> {
    let tree = condense(edges, n, min_cluster_size)?;
    let (_, p) = extract(&tree);
    Ok((tree, p))
}

#[derive(Clone, Debug)]
pub struct HdbscanResult {
    pub tree: CondensedTree,
    pub selected: Vec<usize>,
    pub partition: Partition,
}

/// Full chain on a distance matrix. `min_samples` defaults to `min_cluster_size`.
pub fn hdbscan(
    dist: &DistanceMatrix,
    min_cluster_size: usize,
    min_samples: Option<usize>,
) -> Result<HdbscanResult> {
    let n = dist.n();
    let k = min_samples.unwrap_or(min_cluster_size).min(n.saturating_sub(1)).max(1);
    let core = core_distances(dist, k)?;
    let mreach = mutual_reachability(dist, &core)?;
    let edges = mst(&mreach)?;
    let tree = condense(&edges, n, min_cluster_size)?;
    let (selected, partition) = extract(&tree);
    Ok(HdbscanResult {
        tree,
        selected,
        partition: partition.with_param("min_samples", k),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseClusConfig {
    pub min_cluster_size: usize,
    /// Core-distance neighbor count; `None` uses the minimum cluster size.
    pub min_samples: Option<usize>,
    pub neighbors: usize,
    pub dims: usize,
    pub seed: u64,
}

impl Default for DenseClusConfig {
    fn default() -> Self {
        Self {
            min_cluster_size: 100,
            min_samples: Some(15),
            neighbors: 30,
            dims: 5,
            seed: 0,
        }
    }
}

/// UMAP embedding followed by HDBSCAN on its Euclidean distances.
pub fn denseclus(d: &MixedDataset, cfg: &DenseClusConfig) -> Result<Partition> {
    let e = umap(
        d,
        &UmapConfig {
            dims: cfg.dims,
            neighbors: cfg.neighbors,
            seed: cfg.seed,
            ..UmapConfig::default()
        },
    )?;
    let dist = DistanceMatrix::euclidean(
        e.n(),
        e.dim(),
        e.coords(),
        Metric::Embedded("umap".into()),
    );
    let res = hdbscan(&dist, cfg.min_cluster_size, cfg.min_samples)?;
    Ok(Partition::new(res.partition.labels().to_vec(), "denseclus")
        .with_param("min_cluster_size", cfg.min_cluster_size)
        .with_param("min_samples", cfg.min_samples.unwrap_or(cfg.min_cluster_size))
        .with_param("neighbors", cfg.neighbors)
        .with_param("dims", cfg.dims)
        .with_param("seed", cfg.seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> DistanceMatrix {
        DistanceMatrix::euclidean(xs.len(), 1, xs, Metric::Euclid2)
    }

    #[test]
    fn collinear_core_distances() {
        assert_eq!(core_distances(&line(&[0.0, 1.0, 3.0]), 1).unwrap(), vec![1.0, 1.0, 2.0]);
        assert_eq!(core_distances(&line(&[0.0, 1.0, 3.0]), 2).unwrap(), vec![3.0, 2.0, 3.0]);
        assert_eq!(core_distances(&line(&[2.0, 2.0, 9.0]), 1).unwrap()[..2], [0.0, 0.0]);
        assert!(core_distances(&line(&[0.0, 1.0]), 2).is_err());
    }

    #[test]
    fn path_graph_mst() {
        let edges = mst(&line(&[0.0, 1.0, 3.0, 6.0])).unwrap();
        let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e.a, e.b)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(mst(&line(&[0.0, 2.0])).unwrap().len(), 1);
    }

    #[test]
    fn single_blob_is_one_cluster() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 * 0.01).collect();
        let res = hdbscan(&line(&xs), 5, None).unwrap();
        assert_eq!(res.partition.k(), 1);
        assert_eq!(res.partition.outlier_count(), 0);
    }

    #[test]
    fn selection_skips_weak_parent() {
        let parents = [None, Some(0), Some(0)];
        assert_eq!(select_stable(&parents, &[1.0, 2.0, 3.0]), vec![1, 2]);
        assert_eq!(select_stable(&parents, &[6.0, 2.0, 3.0]), vec![0]);
    }

    #[test]
    fn small_min_cluster_size_rejected() {
        let edges = mst(&line(&[0.0, 1.0, 2.0])).unwrap();
        assert!(condense(&edges, 3, 1).is_err());
    }
}
