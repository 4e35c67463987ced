//! Simplified PaCMAP: neighbor, mid-near and further pairs under the Huang
//! distance, FAMD initialization and a three-phase weight schedule.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{famd, Embedding, ReductionMethod};
use crate::dataset::MixedDataset;
use crate::distance::{default_gamma, pairwise, DistanceMatrix, Metric};
use crate::error::{invalid, Result};

pub const ITERATIONS: usize = 450;
const MID_NEAR_SAMPLE: usize = 6;

const ADAM_LR: f64 = 1.0;
const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct PacmapConfig {
    pub dims: usize,
    pub neighbors: usize,
    /// Mid-near pairs per point as a multiple of `neighbors`.
    pub mid_near_ratio: f64,
    /// Further pairs per point as a multiple of `neighbors`.
    pub further_ratio: f64,
    pub seed: u64,
}

impl Default for PacmapConfig {
    fn default() -> Self {
        Self {
            dims: 2,
            neighbors: 10,
            mid_near_ratio: 0.5,
            further_ratio: 2.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    Neighbor,
    MidNear,
    Further,
}

/// `(w_NB, w_MN, w_FP)` at a 1-based iteration.
pub fn weights(iteration: usize) -> (f64, f64, f64) {
    match iteration {
        0..=100 => {
            let t = (iteration.max(1) - 1) as f64 / 99.0;
            (2.0, 1000.0 + (3.0 - 1000.0) * t, 1.0)
        }
        101..=200 => (3.0, 3.0, 1.0),
        _ => (1.0, 0.0, 1.0),
    }
}

fn dtilde(ya: &[f64], yb: &[f64]) -> f64 {
    1.0 + ya.iter().zip(yb).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
}

/// Unweighted loss of one pair.
pub fn pair_loss(ya: &[f64], yb: &[f64], kind: PairKind) -> f64 {
    let d = dtilde(ya, yb);
    match kind {
        PairKind::Neighbor => d / (10.0 + d),
        PairKind::MidNear => d / (1000.0 + d),
        PairKind::Further => 1.0 / (1.0 + d),
    }
}

fn pair_coefficient(d: f64, kind: PairKind) -> f64 {
    // d(loss)/d(d̃) · 2, so that ∇_a = c·(a − b)
    2.0 * match kind {
        PairKind::Neighbor => 10.0 / (10.0 + d).powi(2),
        PairKind::MidNear => 1000.0 / (1000.0 + d).powi(2),
        PairKind::Further => -1.0 / (1.0 + d).powi(2),
    }
}

/// Gradient of [`pair_loss`] with respect to `ya`.
pub fn pair_gradient(ya: &[f64], yb: &[f64], kind: PairKind) -> Vec<f64> {
    let c = pair_coefficient(dtilde(ya, yb), kind);
    ya.iter().zip(yb).map(|(a, b)| c * (a - b)).collect()
}

/// Sampled pair sets, each entry `(a, b)`.
#[derive(Clone, Debug, Default)]
pub struct PairSets {
    pub neighbors: Vec<(usize, usize)>,
    pub mid_near: Vec<(usize, usize)>,
    pub further: Vec<(usize, usize)>,
}

pub fn sample_pairs(dist: &DistanceMatrix, cfg: &PacmapConfig, rng: &mut ChaCha8Rng) -> PairSets {
    let n = dist.n();
    let k = cfg.neighbors;
    let n_mn = (cfg.mid_near_ratio * k as f64).round() as usize;
    let n_fp = (cfg.further_ratio * k as f64).round() as usize;
    let knn = dist.knn(k);
    let mut pairs = PairSets::default();
    for (i, row) in knn.iter().enumerate() {
        let mut near: Vec<usize> = row.iter().map(|&(j, _)| j).collect();
        pairs.neighbors.extend(near.iter().map(|&j| (i, j)));
        near.sort_unstable();
        for _ in 0..n_mn {
            let mut cand: Vec<usize> = sample(rng, n - 1, MID_NEAR_SAMPLE.min(n - 1))
                .into_iter()
                .map(|j| if j >= i { j + 1 } else { j })
                .collect();
            cand.sort_by(|&a, &b| dist.get(i, a).total_cmp(&dist.get(i, b)).then(a.cmp(&b)));
            pairs.mid_near.push((i, cand[1.min(cand.len() - 1)]));
        }
        let pool = n - 1 - near.len();
        if pool == 0 {
            continue;
        }
        for _ in 0..n_fp {
            let j = loop {
                let j = rng.random_range(0..n);
                if j != i && near.binary_search(&j).is_err() {
                    break j;
                }
            };
            pairs.further.push((i, j));
        }
    }
    pairs
}

/// Weighted total loss of an embedding at an iteration.
pub fn total_loss(y: &[f64], m: usize, pairs: &PairSets, iteration: usize) -> f64 {
    let (w_nb, w_mn, w_fp) = weights(iteration);
    let term = |set: &[(usize, usize)], kind| -> f64 {
        set.iter()
            .map(|&(a, b)| pair_loss(&y[a * m..(a + 1) * m], &y[b * m..(b + 1) * m], kind))
            .sum()
    };
    w_nb * term(&pairs.neighbors, PairKind::Neighbor)
        + w_mn * term(&pairs.mid_near, PairKind::MidNear)
        + w_fp * term(&pairs.further, PairKind::Further)
}

fn full_gradient(y: &[f64], m: usize, pairs: &PairSets, iteration: usize, grad: &mut [f64]) {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let (w_nb, w_mn, w_fp) = weights(iteration);
    for (set, kind, w) in [
        (&pairs.neighbors, PairKind::Neighbor, w_nb),
        (&pairs.mid_near, PairKind::MidNear, w_mn),
        (&pairs.further, PairKind::Further, w_fp),
    ] {
        if w == 0.0 {
            continue;
        }
        for &(a, b) in set.iter() {
            let ya = &y[a * m..(a + 1) * m];
            let yb = &y[b * m..(b + 1) * m];
            let c = w * pair_coefficient(dtilde(ya, yb), kind);
            for t in 0..m {
                let g = c * (y[a * m + t] - y[b * m + t]);
                grad[a * m + t] += g;
                grad[b * m + t] -= g;
            }
        }
    }
}

/// Runs the optimizer from `init`, calling `observe(iteration, y)` after
/// every iteration.
pub fn optimize<F: FnMut(usize, &[f64])>(
    init: Vec<f64>,
    m: usize,
    pairs: &PairSets,
    iterations: usize,
    mut observe: F,
) -> Vec<f64> {
    let mut y = init;
    let len = y.len();
    let mut grad = vec![0.0; len];
    let mut m1 = vec![0.0; len];
    let mut m2 = vec![0.0; len];
    for it in 1..=iterations {
        full_gradient(&y, m, pairs, it, &mut grad);
        let bc1 = 1.0 - ADAM_BETA1.powi(it as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(it as i32);
        let lr = ADAM_LR * bc2.sqrt() / bc1;
        for t in 0..len {
            m1[t] = ADAM_BETA1 * m1[t] + (1.0 - ADAM_BETA1) * grad[t];
            m2[t] = ADAM_BETA2 * m2[t] + (1.0 - ADAM_BETA2) * grad[t] * grad[t];
            y[t] -= lr * m1[t] / (m2[t].sqrt() + ADAM_EPS);
        }
        observe(it, &y);
    }
    y
}

/// PaCMAP embedding, initialized from FAMD and scaled to a small spread.
pub fn pacmap(d: &MixedDataset, cfg: &PacmapConfig) -> Result<Embedding> {
    pacmap_observed(d, cfg, |_, _| {})
}

/// [`pacmap`] with a per-iteration observer.
pub fn pacmap_observed<F: FnMut(usize, &[f64])>(
    d: &MixedDataset,
    cfg: &PacmapConfig,
    observe: F,
) -> Result<Embedding> {
    let n = d.n_rows();
    if n < 13 {
        return Err(invalid("rows", "need at least 13 rows"));
    }
    if cfg.neighbors < 1 || cfg.neighbors >= n {
        return Err(invalid("neighbors", format!("must be in 1..{n}")));
    }
    let m = cfg.dims;
    let init = famd(d, m)?;
    let col0 = init.column(0);
    let mean = col0.iter().sum::<f64>() / n as f64;
    let sd = (col0.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let scale = if sd > 0.0 { 0.01 / sd } else { 1.0 };
    let start: Vec<f64> = init.coords().iter().map(|v| v * scale).collect();

    let (gamma, _) = default_gamma(d);
    let dist = pairwise(d, &Metric::Huang { gamma })?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pairs = sample_pairs(&dist, cfg, &mut rng);
    let coords = optimize(start, m, &pairs, ITERATIONS, observe);
    Ok(Embedding::new(n, m, coords, ReductionMethod::Pacmap)?
        .with_param("dims", m)
        .with_param("neighbors", cfg.neighbors)
        .with_param("mid_near_ratio", cfg.mid_near_ratio)
        .with_param("further_ratio", cfg.further_ratio)
        .with_param("seed", cfg.seed)
        .with_param("gamma", gamma))
}
