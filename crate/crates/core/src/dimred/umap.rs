//! Simplified UMAP: fuzzy kNN graph under the Huang distance, spectral
//! initialization and one attractive plus one repulsive sample per point
//! per epoch.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{spectral_embedding, Embedding, ReductionMethod};
use crate::dataset::MixedDataset;
use crate::distance::{default_gamma, pairwise, DistanceMatrix, Metric};
use crate::error::{invalid, Error, Result};

/// Low-dimensional kernel parameters.
pub const A: f64 = 1.577;
pub const B: f64 = 0.8951;

const GRAD_CLIP: f64 = 4.0;
const REPULSION_EPS: f64 = 1e-3;
const SIGMA_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct UmapConfig {
    pub dims: usize,
    pub neighbors: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for UmapConfig {
    fn default() -> Self {
        Self {
            dims: 2,
            neighbors: 15,
            epochs: 200,
            seed: 0,
        }
    }
}

/// Directed kNN memberships with per-node calibration.
#[derive(Clone, Debug)]
pub struct FuzzyGraph {
    /// `edges[i]` holds `(j, s_ij)` for the k neighbors of `i`.
    pub edges: Vec<Vec<(usize, f64)>>,
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl FuzzyGraph {
    /// Symmetrized weights `s + sᵀ − s∘sᵀ` as sorted adjacency lists.
    pub fn symmetrize(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.edges.len();
        let mut maps: Vec<BTreeMap<usize, (f64, f64)>> = vec![BTreeMap::new(); n];
        for (i, row) in self.edges.iter().enumerate() {
            for &(j, s) in row {
                maps[i].entry(j).or_insert((0.0, 0.0)).0 = s;
                maps[j].entry(i).or_insert((0.0, 0.0)).1 = s;
            }
        }
        maps.into_iter()
            .map(|m| {
                m.into_iter()
                    .map(|(j, (a, b))| (j, a + b - a * b))
                    .filter(|&(_, w)| w > 0.0)
                    .collect()
            })
            .collect()
    }
}

fn membership_sum(dists: &[f64], rho: f64, sigma: f64) -> f64 {
    dists
        .iter()
        .map(|&d| (-(d - rho).max(0.0) / sigma).exp())
        .sum()
}

/// Bisection for σ with `Σ exp(−(d − ρ)/σ) = target`. Returns `None` when
/// the target is below the limit as σ → 0.
pub fn solve_sigma(dists: &[f64], rho: f64, target: f64) -> Option<f64> {
    let floor = dists.iter().filter(|&&d| d <= rho).count() as f64;
    if floor >= target || dists.len() as f64 <= target {
        return None;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while membership_sum(dists, rho, hi) < target {
        hi *= 2.0;
        if !hi.is_finite() {
            return None;
        }
    }
    let mut mid = hi;
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let s = membership_sum(dists, rho, mid);
        if (s - target).abs() < SIGMA_TOL {
            break;
        }
        if s < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(mid)
}

/// kNN graph with per-node ρ (smallest positive neighbor distance) and σ.
pub fn fuzzy_graph(dist: &DistanceMatrix, k: usize) -> Result<FuzzyGraph> {
    let n = dist.n();
    if k < 2 || k >= n {
        return Err(invalid("neighbors", format!("must be in 2..{n}")));
    }
    if dist.max() == 0.0 {
        return Err(Error::Degenerate("all rows are identical".into()));
    }
    let knn = dist.knn(k);
    let target = (k as f64).log2();
    let mut edges = Vec::with_capacity(n);
    let mut rhos = Vec::with_capacity(n);
    let mut sigmas = Vec::with_capacity(n);
    for row in knn {
        let dists: Vec<f64> = row.iter().map(|&(_, d)| d).collect();
        let rho = dists.iter().copied().find(|&d| d > 0.0).unwrap_or(0.0);
        let sigma = solve_sigma(&dists, rho, target).unwrap_or_else(|| {
            // Too many ties at ρ: shrink σ so only the tied neighbors keep weight.
            let spread = dists.iter().copied().fold(0.0, f64::max) - rho;
            (spread.max(f64::MIN_POSITIVE) * 1e-3).max(1e-300)
        });
        edges.push(
            row.iter()
                .map(|&(j, d)| (j, (-(d - rho).max(0.0) / sigma).exp()))
                .filter(|&(_, s)| s > 0.0)
                .collect(),
        );
        rhos.push(rho);
        sigmas.push(sigma);
    }
    Ok(FuzzyGraph {
        edges,
        rho: rhos,
        sigma: sigmas,
    })
}

/// Low-dimensional similarity `1 / (1 + a‖Δ‖^{2b})`.
pub fn low_dim_similarity(ya: &[f64], yb: &[f64]) -> f64 {
    let r2: f64 = ya.iter().zip(yb).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 / (1.0 + A * r2.powf(B))
}

/// Per-pair cost: `−log s` for a neighbor pair, `−log(1 − s)` otherwise.
pub fn pair_loss(ya: &[f64], yb: &[f64], neighbor: bool) -> f64 {
    let s = low_dim_similarity(ya, yb);
    if neighbor {
        -s.ln()
    } else {
        -(1.0 - s).ln()
    }
}

/// Exact gradient of [`pair_loss`] with respect to `ya`.
pub fn pair_gradient(ya: &[f64], yb: &[f64], neighbor: bool) -> Vec<f64> {
    let r2: f64 = ya.iter().zip(yb).map(|(a, b)| (a - b).powi(2)).sum();
    let coef = pair_coefficient(r2, neighbor, 0.0);
    ya.iter().zip(yb).map(|(a, b)| coef * (a - b)).collect()
}

/// Scalar `c` with `∇_a = c·(a − b)`; `eps` softens the repulsive pole.
fn pair_coefficient(r2: f64, neighbor: bool, eps: f64) -> f64 {
    if r2 <= 0.0 {
        return 0.0;
    }
    let u = r2.powf(B);
    if neighbor {
        2.0 * A * B * r2.powf(B - 1.0) / (1.0 + A * u)
    } else {
        -2.0 * B / ((r2 + eps) * (1.0 + A * u))
    }
}

fn scale_to_box(coords: &mut [f64], n: usize, m: usize, rng: &mut ChaCha8Rng) {
    // one factor for every column keeps the relative extents of the start
    let lows: Vec<f64> = (0..m)
        .map(|c| (0..n).map(|i| coords[i * m + c]).fold(f64::INFINITY, f64::min))
        .collect();
    let span = (0..m)
        .map(|c| (0..n).map(|i| coords[i * m + c] - lows[c]).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    for i in 0..n {
        for c in 0..m {
            let v = &mut coords[i * m + c];
            *v = if span > 0.0 { 10.0 * (*v - lows[c]) / span } else { 5.0 };
        }
    }
    for v in coords.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v += 1e-4 * z;
    }
}

/// Connected-component label of every node, numbered by first appearance.
pub fn components(graph: &[Vec<(usize, f64)>]) -> Vec<usize> {
    let n = graph.len();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = next;
        let mut stack = vec![start];
        while let Some(a) = stack.pop() {
            for &(b, _) in &graph[a] {
                if label[b] == usize::MAX {
                    label[b] = next;
                    stack.push(b);
                }
            }
        }
        next += 1;
    }
    label
}

fn spectral_or_random(graph: &[Vec<(usize, f64)>], nodes: &[usize], m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let local: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(a, &i)| (i, a)).collect();
    let mut w = DMatrix::zeros(nodes.len(), nodes.len());
    for (a, &i) in nodes.iter().enumerate() {
        for &(j, v) in &graph[i] {
            if let Some(&b) = local.get(&j) {
                w[(a, b)] = v;
            }
        }
    }
    match spectral_embedding(&w, m) {
        Ok((coords, _)) => coords,
        Err(e) => {
            if nodes.len() > m + 1 {
                log::warn!("spectral initialization failed ({e}); using random start");
            }
            (0..nodes.len() * m).map(|_| rng.random_range(-1.0..1.0)).collect()
        }
    }
}

/// Spectral start. A disconnected graph gets one spectral layout per
/// component, each shrunk around its own anchor so that components start
/// apart: anchors are the signed unit vectors while there are at most `2m`
/// components, uniform draws in the unit cube otherwise.
pub fn initial_layout(graph: &[Vec<(usize, f64)>], m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = graph.len();
    let label = components(graph);
    let count = label.iter().max().map_or(0, |&c| c + 1);
    if count <= 1 {
        let all: Vec<usize> = (0..n).collect();
        return spectral_or_random(graph, &all, m, rng);
    }
    let anchors: Vec<Vec<f64>> = (0..count)
        .map(|c| {
            if count <= 2 * m {
                let mut v = vec![0.0; m];
                v[c / 2] = if c % 2 == 0 { 1.0 } else { -1.0 };
                v
            } else {
                (0..m).map(|_| rng.random_range(-1.0..1.0)).collect()
            }
        })
        .collect();
    let mut coords = vec![0.0; n * m];
    for c in 0..count {
        let nodes: Vec<usize> = (0..n).filter(|&i| label[i] == c).collect();
        let gap = (0..count)
            .filter(|&o| o != c)
            .map(|o| {
                let sq: f64 = (0..m).map(|t| (anchors[c][t] - anchors[o][t]).powi(2)).sum();
                sq.sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        let radius = gap / 4.0;
        let mut local = spectral_or_random(graph, &nodes, m, rng);
        for t in 0..m {
            let mean = nodes.iter().enumerate().map(|(a, _)| local[a * m + t]).sum::<f64>() / nodes.len() as f64;
            for a in 0..nodes.len() {
                local[a * m + t] -= mean;
            }
        }
        let reach = local.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let scale = if reach > 0.0 { radius / reach } else { 0.0 };
        for (a, &i) in nodes.iter().enumerate() {
            for t in 0..m {
                coords[i * m + t] = anchors[c][t] + scale * local[a * m + t];
            }
        }
    }
    coords
}

/// Optimizes an embedding for a symmetrized weight graph.
pub fn optimize(
    graph: &[Vec<(usize, f64)>],
    init: Vec<f64>,
    m: usize,
    epochs: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let n = graph.len();
    let mut y = init;
    let cumulative: Vec<Vec<f64>> = graph
        .iter()
        .map(|row| {
            let mut acc = 0.0;
            row.iter()
                .map(|&(_, w)| {
                    acc += w;
                    acc
                })
                .collect()
        })
        .collect();
    let mut grad = vec![0.0; m];
    for epoch in 0..epochs {
        let lr = 1.0 - epoch as f64 / epochs as f64;
        for a in 0..n {
            let row = &graph[a];
            if row.is_empty() {
                continue;
            }
            let total = *cumulative[a].last().expect("non-empty row");
            let u = rng.random::<f64>() * total;
            let pick = cumulative[a].partition_point(|&c| c <= u).min(row.len() - 1);
            let nb = row[pick].0;
            step(&mut y, &mut grad, a, nb, true, lr, m);

            if row.len() + 1 < n {
                let mut far = rng.random_range(0..n);
                let mut tries = 0;
                while (far == a || row.binary_search_by_key(&far, |e| e.0).is_ok()) && tries < 32 {
                    far = rng.random_range(0..n);
                    tries += 1;
                }
                if far != a && row.binary_search_by_key(&far, |e| e.0).is_err() {
                    step(&mut y, &mut grad, a, far, false, lr, m);
                }
            }
        }
    }
    y
}

fn step(y: &mut [f64], grad: &mut [f64], a: usize, b: usize, neighbor: bool, lr: f64, m: usize) {
    let r2: f64 = (0..m).map(|t| (y[a * m + t] - y[b * m + t]).powi(2)).sum();
    let coef = pair_coefficient(r2, neighbor, REPULSION_EPS);
    for t in 0..m {
        grad[t] = (coef * (y[a * m + t] - y[b * m + t])).clamp(-GRAD_CLIP, GRAD_CLIP);
    }
    for t in 0..m {
        y[a * m + t] -= lr * grad[t];
        if neighbor {
            y[b * m + t] += lr * grad[t];
        }
    }
}

/// UMAP embedding of a mixed dataset under the Huang distance with the
/// default γ. Deterministic for a given seed.
pub fn umap(d: &MixedDataset, cfg: &UmapConfig) -> Result<Embedding> {
    if cfg.epochs < 1 {
        return Err(invalid("epochs", "must be at least 1"));
    }
    if cfg.dims < 1 {
        return Err(invalid("dims", "must be at least 1"));
    }
    let n = d.n_rows();
    if cfg.neighbors >= n {
        return Err(invalid("neighbors", format!("must be below the row count {n}")));
    }
    let (gamma, _) = default_gamma(d);
    let dist = pairwise(d, &Metric::Huang { gamma })?;
    let graph = fuzzy_graph(&dist, cfg.neighbors)?.symmetrize();
    let m = cfg.dims;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut init = initial_layout(&graph, m, &mut rng);
    scale_to_box(&mut init, n, m, &mut rng);
    let coords = optimize(&graph, init, m, cfg.epochs, &mut rng);
    Ok(Embedding::new(n, m, coords, ReductionMethod::Umap)?
        .with_param("dims", m)
        .with_param("neighbors", cfg.neighbors)
        .with_param("epochs", cfg.epochs)
        .with_param("seed", cfg.seed)
        .with_param("gamma", gamma))
}
