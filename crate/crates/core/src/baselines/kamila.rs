use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::dataset::{quantile_sorted as quantile, MixedDataset};
use crate::distance::squared_euclidean;
use crate::error::{invalid, Result};
use crate::par;
use crate::partition::Partition;

const MAX_ITER: usize = 50;

/// Parameters of one KAMILA model.
#[derive(Clone, Debug, PartialEq)]
pub struct KamilaState {
    /// `G × P` numeric centroids, row-major.
    pub centroids: Vec<f64>,
    /// `theta[g][q][l]`: probability of level `l` of column `q` in cluster `g`.
    pub theta: Vec<Vec<Vec<f64>>>,
    pub kde_bandwidth: f64,
}

#[derive(Clone, Debug)]
pub struct KamilaResult {
    pub partition: Partition,
    pub state: KamilaState,
    /// `Σ_i max_g H_i(g)` of the kept run.
    pub objective: f64,
    /// Objective of every run in order.
    pub run_objectives: Vec<f64>,
    /// Largest `|Σ_l θ − 1|` seen after any estimation step.
    pub max_theta_error: f64,
}

/// Silverman's rule `0.9·min(sd, IQR/1.34)·n^(−1/5)` with fallbacks for
/// degenerate samples.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        (false, true) => iqr / 1.34,
        (false, false) => {
            let scale = sorted.last().copied().unwrap_or(0.0).abs();
            if scale > 0.0 {
                scale * 1e-3
            } else {
                1e-3
            }
        }
    };
    0.9 * spread * n.powf(-0.2)
}

/// Log of a Gaussian kernel density estimate at `x`, computed stably.
pub fn log_kde(sample: &[f64], h: f64, x: f64) -> f64 {
    let exps: Vec<f64> = sample.iter().map(|r| -0.5 * ((x - r) / h).powi(2)).collect();
    let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = exps.iter().map(|e| (e - max).exp()).sum();
    max + sum.ln() - (sample.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt()).ln()
}

/// KAMILA clustering with `runs` random restarts.
pub fn kamila(d: &MixedDataset, k: usize, runs: usize, seed: u64) -> Result<Partition> {
    Ok(kamila_with(d, k, runs, seed)?.partition)
}

pub fn kamila_with(d: &MixedDataset, k: usize, runs: usize, seed: u64) -> Result<KamilaResult> {
    let n = d.n_rows();
    if d.n_numeric() == 0 || d.n_categorical() == 0 {
        return Err(invalid(
            "data",
            "needs at least one numerical and one categorical column",
        ));
    }
    if k < 1 || k > n {
        return Err(invalid("k", format!("must be in 1..={n}")));
    }
    d.require_complete()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, KamilaState, f64)> = None;
    let mut objectives = Vec::new();
    let mut max_theta_error: f64 = 0.0;
    for _ in 0..runs.max(1) {
        let run_seed = rng.random::<u64>();
        let (labels, state, obj, err) = single_run(d, k, run_seed);
        max_theta_error = max_theta_error.max(err);
        objectives.push(obj);
        if best.as_ref().is_none_or(|b| obj > b.2) {
            best = Some((labels, state, obj));
        }
    }
    let (labels, state, objective) = best.expect("at least one run");
    Ok(KamilaResult {
        partition: Partition::from_assignments(&labels, "kamila")
            .with_param("k", k)
            .with_param("runs", runs)
            .with_param("seed", seed),
        state,
        objective,
        run_objectives: objectives,
        max_theta_error,
    })
}

fn dirichlet_ones(levels: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let g = Gamma::<f64>::new(1.0, 1.0).expect("valid gamma");
    let draws: Vec<f64> = (0..levels).map(|_| g.sample(rng).max(1e-300)).collect();
    let total: f64 = draws.iter().sum();
    draws.iter().map(|v| v / total).collect()
}

/// Centroid rows drawn with probability proportional to squared distance
/// from the closest row already drawn.
fn initial_centroids(d: &MixedDataset, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = d.n_rows();
    let mut rows = vec![rng.random_range(0..n)];
    let mut closest: Vec<f64> = (0..n)
        .map(|i| squared_euclidean(d.numeric_row(i), d.numeric_row(rows[0])))
        .collect();
    while rows.len() < k {
        let total: f64 = closest.iter().sum();
        let next = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            closest
                .iter()
                .position(|w| {
                    acc += w;
                    *w > 0.0 && acc > u
                })
                .unwrap_or_else(|| closest.iter().rposition(|&w| w > 0.0).expect("positive"))
        } else {
            rng.random_range(0..n)
        };
        rows.push(next);
        for (i, c) in closest.iter_mut().enumerate() {
            *c = c.min(squared_euclidean(d.numeric_row(i), d.numeric_row(next)));
        }
    }
    rows.iter().flat_map(|&r| d.numeric_row(r).to_vec()).collect()
}

fn single_run(d: &MixedDataset, k: usize, seed: u64) -> (Vec<usize>, KamilaState, f64, f64) {
    let n = d.n_rows();
    let p = d.n_numeric();
    let q = d.n_categorical();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = initial_centroids(d, k, &mut rng);
    let mut theta: Vec<Vec<Vec<f64>>> = (0..k)
        .map(|_| {
            (0..q)
                .map(|c| dirichlet_ones(d.levels(c).len(), &mut rng))
                .collect()
        })
        .collect();
    let mut labels = vec![usize::MAX; n];
    let mut objective = f64::NEG_INFINITY;
    let mut bandwidth = 0.0;
    let mut theta_error: f64 = 0.0;
    for _ in 0..MAX_ITER {
        let dists: Vec<Vec<f64>> = par::map_indices(n, |i| {
            (0..k)
                .map(|g| squared_euclidean(d.numeric_row(i), &centroids[g * p..(g + 1) * p]).sqrt())
                .collect()
        });
        let minima: Vec<f64> = dists
            .iter()
            .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
            .collect();
        bandwidth = silverman_bandwidth(&minima);
        let log_theta: Vec<Vec<Vec<f64>>> = theta
            .iter()
            .map(|tg| tg.iter().map(|tq| tq.iter().map(|v| v.ln()).collect()).collect())
            .collect();
        let h = bandwidth;
        let scored: Vec<(usize, f64)> = par::map_indices(n, |i| {
            let mut best = (0, f64::NEG_INFINITY);
            for g in 0..k {
                let cat: f64 = d
                    .categorical_row(i)
                    .iter()
                    .enumerate()
                    .map(|(c, &l)| log_theta[g][c][l as usize])
                    .sum();
                let score = cat + log_kde(&minima, h, dists[i][g]);
                if score > best.1 {
                    best = (g, score);
                }
            }
            best
        });
        objective = scored.iter().map(|s| s.1).sum();
        let new_labels: Vec<usize> = scored.iter().map(|s| s.0).collect();
        if new_labels == labels {
            break;
        }
        labels = new_labels;

        let mut counts = vec![0usize; k];
        let mut sums = vec![0.0; k * p];
        let mut level_counts: Vec<Vec<Vec<f64>>> = (0..k)
            .map(|_| (0..q).map(|c| vec![0.0; d.levels(c).len()]).collect())
            .collect();
        for (i, &g) in labels.iter().enumerate() {
            counts[g] += 1;
            for (t, v) in d.numeric_row(i).iter().enumerate() {
                sums[g * p + t] += v;
            }
            for (c, &l) in d.categorical_row(i).iter().enumerate() {
                level_counts[g][c][l as usize] += 1.0;
            }
        }
        for g in 0..k {
            if counts[g] > 0 {
                for t in 0..p {
                    centroids[g * p + t] = sums[g * p + t] / counts[g] as f64;
                }
            }
            for c in 0..q {
                let lc = &level_counts[g][c];
                let total = counts[g] as f64 + lc.len() as f64;
                theta[g][c] = lc.iter().map(|v| (v + 1.0) / total).collect();
                let s: f64 = theta[g][c].iter().sum();
                theta_error = theta_error.max((s - 1.0).abs());
            }
        }
    }
    (
        labels,
        KamilaState {
            centroids,
            theta,
            kde_bandwidth: bandwidth,
        },
        objective,
        theta_error,
    )
}
