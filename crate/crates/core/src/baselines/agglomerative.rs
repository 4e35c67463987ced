use crate::dataset::MixedDataset;
use crate::distance::{pairwise, DistanceMatrix, Metric};
use crate::error::{invalid, Result};
use crate::partition::{Hierarchy, HierarchyNode, Partition};

/// One agglomeration: clusters `a` and `b` (ids below `n` are points, id
/// `n + s` is the cluster formed at step `s`) join at `height`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Average-linkage agglomeration by the nearest-neighbor chain algorithm.
/// Merges are returned in non-decreasing height order.
pub fn average_linkage(dist: &DistanceMatrix) -> Vec<Merge> {
    let n = dist.n();
    if n < 2 {
        return Vec::new();
    }
    let mut dm = dist.values().to_vec();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut raw: Vec<(usize, usize, f64)> = Vec::with_capacity(n - 1);
    let mut chain: Vec<usize> = Vec::new();
    while raw.len() < n - 1 {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("active cluster"));
        }
        let (a, b) = loop {
            let a = *chain.last().expect("chain");
            let prev = chain.len().checked_sub(2).map(|i| chain[i]);
            let mut best: Option<usize> = prev;
            for c in 0..n {
                if c == a || !active[c] {
                    continue;
                }
                match best {
                    Some(b) if dm[a * n + c] >= dm[a * n + b] => {}
                    _ => best = Some(c),
                }
            }
            let b = best.expect("another active cluster");
            if Some(b) == prev {
                chain.pop();
                chain.pop();
                break (a, b);
            }
            chain.push(b);
        };
        let h = dm[a * n + b];
        raw.push((a.min(b), a.max(b), h));
        let (keep, drop) = (a.min(b), a.max(b));
        let (sa, sb) = (size[keep] as f64, size[drop] as f64);
        for c in 0..n {
            if active[c] && c != keep && c != drop {
                let v = (sa * dm[keep * n + c] + sb * dm[drop * n + c]) / (sa + sb);
                dm[keep * n + c] = v;
                dm[c * n + keep] = v;
            }
        }
        size[keep] += size[drop];
        active[drop] = false;
        chain.retain(|&c| c != drop && c != keep);
    }
    // Order by height and rename the slots to cluster ids.
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&x, &y| raw[x].2.total_cmp(&raw[y].2).then(x.cmp(&y)));
    let mut uf = UnionFind::new(n);
    let mut id_of_root: Vec<usize> = (0..n).collect();
    let mut sizes = vec![1usize; n];
    let mut merges = Vec::with_capacity(n - 1);
    for (step, &o) in order.iter().enumerate() {
        let (x, y, h) = raw[o];
        let (rx, ry) = (uf.find(x), uf.find(y));
        let (ia, ib) = (id_of_root[rx], id_of_root[ry]);
        let s = sizes[rx] + sizes[ry];
        uf.parent[ry] = rx;
        sizes[rx] = s;
        id_of_root[rx] = n + step;
        merges.push(Merge {
            a: ia.min(ib),
            b: ia.max(ib),
            height: h,
            size: s,
        });
    }
    merges
}

/// Labels after applying the first `n − k` merges.
pub fn cut(merges: &[Merge], n: usize, k: usize) -> Vec<usize> {
    let mut uf = UnionFind::new(2 * n);
    for (step, m) in merges.iter().take(n.saturating_sub(k)).enumerate() {
        let id = n + step;
        let ra = uf.find(m.a);
        let rb = uf.find(m.b);
        uf.parent[ra] = id;
        uf.parent[rb] = id;
    }
    (0..n).map(|i| uf.find(i)).collect()
}

/// Dendrogram as a [`Hierarchy`]: points first, then one node per merge.
pub fn dendrogram(merges: &[Merge], n: usize) -> Hierarchy {
    let mut nodes: Vec<HierarchyNode> = (0..n)
        .map(|i| HierarchyNode {
            id: i,
            parents: Vec::new(),
            members: vec![i],
            scale: 0.0,
            seed: None,
            iterations: None,
        })
        .collect();
    for (step, m) in merges.iter().enumerate() {
        let id = n + step;
        let mut members = nodes[m.a].members.clone();
        members.extend_from_slice(&nodes[m.b].members);
        members.sort_unstable();
        nodes[m.a].parents.push(id);
        nodes[m.b].parents.push(id);
        nodes.push(HierarchyNode {
            id,
            parents: Vec::new(),
            members,
            scale: m.height,
            seed: None,
            iterations: None,
        });
    }
    Hierarchy {
        nodes,
        overlaps: Vec::new(),
    }
}

/// Average-linkage clustering of the Gower dissimilarity matrix cut at `k` clusters.
pub fn phillip_ottaway(d: &MixedDataset, k: usize) -> Result<(Partition, Hierarchy)> {
    let gower = pairwise(d, &Metric::Gower)?;
    phillip_ottaway_matrix(&gower, k)
}

/// Same as [`phillip_ottaway`] on a precomputed matrix.
pub fn phillip_ottaway_matrix(dist: &DistanceMatrix, k: usize) -> Result<(Partition, Hierarchy)> {
    let n = dist.n();
    if k < 1 || k > n {
        return Err(invalid("k", format!("must be in 1..={n}")));
    }
    let merges = average_linkage(dist);
    let labels = cut(&merges, n, k);
    let partition = Partition::from_assignments(&labels, "phillip_ottaway").with_param("k", k);
    Ok((partition, dendrogram(&merges, n)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_hand_case() {
        let dist = DistanceMatrix::from_values(
            3,
            vec![0.0, 0.1, 0.9, 0.1, 0.0, 0.9, 0.9, 0.9, 0.0],
            Metric::Gower,
        )
        .unwrap();
        let (p, h) = phillip_ottaway_matrix(&dist, 2).unwrap();
        assert_eq!(p.labels(), &[Some(0), Some(0), Some(1)]);
        assert_eq!(h.nodes.len(), 5);
        let (p, _) = phillip_ottaway_matrix(&dist, 1).unwrap();
        assert_eq!(p.k(), 1);
    }

    #[test]
    fn average_of_merged_distances() {
        // points on a line at 0, 1, 5: {0,1} joins at 1, then 5 joins at mean(5, 4)
        let dist = DistanceMatrix::from_values(
            3,
            vec![0.0, 1.0, 5.0, 1.0, 0.0, 4.0, 5.0, 4.0, 0.0],
            Metric::Euclid2,
        )
        .unwrap();
        let m = average_linkage(&dist);
        assert_eq!(m[0], Merge { a: 0, b: 1, height: 1.0, size: 2 });
        assert_eq!(m[1], Merge { a: 2, b: 3, height: 4.5, size: 3 });
    }
}
