use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::MixedDataset;
use crate::dimred::Embedding;
use crate::distance::{hamming, squared_euclidean};
use crate::error::{invalid, Result};
use crate::par;
use crate::partition::Partition;

/// Numeric mean and categorical mode of a cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct Prototype {
    pub numeric_center: Vec<f64>,
    pub categorical_mode: Vec<u32>,
}

impl Prototype {
    fn of_row(d: &MixedDataset, i: usize) -> Self {
        Self {
            numeric_center: d.numeric_row(i).to_vec(),
            categorical_mode: d.categorical_row(i).to_vec(),
        }
    }

    pub fn dissimilarity(&self, d: &MixedDataset, i: usize, gamma: f64) -> f64 {
        squared_euclidean(d.numeric_row(i), &self.numeric_center)
            + gamma * hamming(d.categorical_row(i), &self.categorical_mode)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KPrototypesConfig {
    pub k: usize,
    pub gamma: f64,
    pub seed: u64,
    /// Independent restarts; the lowest-cost run is kept.
    pub n_init: usize,
    pub max_iter: usize,
}

impl KPrototypesConfig {
    pub fn new(k: usize, gamma: f64, seed: u64) -> Self {
        Self {
            k,
            gamma,
            seed,
            n_init: 10,
            max_iter: 100,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KPrototypesResult {
    pub partition: Partition,
    pub prototypes: Vec<Prototype>,
    pub cost: f64,
    /// Total cost after each assignment step of the kept run.
    pub cost_trace: Vec<f64>,
    pub iterations: usize,
}

/// K-prototypes under the Huang dissimilarity.
pub fn kprototypes(d: &MixedDataset, k: usize, gamma: f64, seed: u64) -> Result<Partition> {
    Ok(kprototypes_with(d, &KPrototypesConfig::new(k, gamma, seed))?.partition)
}

/// K-means on embedding coordinates, as k-prototypes without categoricals.
pub fn kmeans(e: &Embedding, k: usize, seed: u64) -> Result<Partition> {
    let d = MixedDataset::from_numeric(e.n(), e.dim(), e.coords())?;
    let mut res = kprototypes_with(&d, &KPrototypesConfig::new(k, 0.0, seed))?;
    res.partition = Partition::new(res.partition.labels().to_vec(), "kmeans")
        .with_param("k", k)
        .with_param("seed", seed);
    Ok(res.partition)
}

pub fn kprototypes_with(d: &MixedDataset, cfg: &KPrototypesConfig) -> Result<KPrototypesResult> {
    let n = d.n_rows();
    if cfg.k < 1 || cfg.k > n {
        return Err(invalid("k", format!("must be in 1..={n}")));
    }
    if !(cfg.gamma >= 0.0) {
        return Err(invalid("gamma", "must be non-negative"));
    }
    d.require_complete()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<KPrototypesResult> = None;
    for _ in 0..cfg.n_init.max(1) {
        let run_seed = rng.random::<u64>();
        let res = single_run(d, cfg, run_seed);
        if best.as_ref().is_none_or(|b| res.cost < b.cost) {
            best = Some(res);
        }
    }
    Ok(best.expect("at least one run"))
}

/// Seeding by sampling rows with probability proportional to their
/// dissimilarity to the closest already chosen row.
fn seed_rows(d: &MixedDataset, k: usize, gamma: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = d.n_rows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut closest: Vec<f64> = (0..n)
        .map(|i| Prototype::of_row(d, chosen[0]).dissimilarity(d, i, gamma))
        .collect();
    while chosen.len() < k {
        let total: f64 = closest.iter().sum();
        let next = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, w) in closest.iter().enumerate() {
                acc += w;
                if *w > 0.0 && acc > u {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| closest.iter().rposition(|&w| w > 0.0).expect("positive"))
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        let proto = Prototype::of_row(d, next);
        for (i, c) in closest.iter_mut().enumerate() {
            *c = c.min(proto.dissimilarity(d, i, gamma));
        }
        closest[next] = 0.0;
    }
    chosen
}

fn assign(d: &MixedDataset, protos: &[Prototype], gamma: f64) -> Vec<(usize, f64)> {
    par::map_indices(d.n_rows(), |i| {
        let mut best = (0, f64::INFINITY);
        for (g, p) in protos.iter().enumerate() {
            let v = p.dissimilarity(d, i, gamma);
            if v < best.1 {
                best = (g, v);
            }
        }
        best
    })
}

fn update(d: &MixedDataset, labels: &[usize], k: usize) -> Vec<Option<Prototype>> {
    let p = d.n_numeric();
    let q = d.n_categorical();
    let mut sums = vec![vec![0.0; p]; k];
    let mut counts = vec![0usize; k];
    let mut level_counts: Vec<Vec<Vec<usize>>> = (0..k)
        .map(|_| (0..q).map(|c| vec![0; d.levels(c).len()]).collect())
        .collect();
    for (i, &g) in labels.iter().enumerate() {
        counts[g] += 1;
        for (s, v) in sums[g].iter_mut().zip(d.numeric_row(i)) {
            *s += v;
        }
        for (c, &l) in d.categorical_row(i).iter().enumerate() {
            level_counts[g][c][l as usize] += 1;
        }
    }
    (0..k)
        .map(|g| {
            if counts[g] == 0 {
                return None;
            }
            Some(Prototype {
                numeric_center: sums[g].iter().map(|s| s / counts[g] as f64).collect(),
                categorical_mode: level_counts[g]
                    .iter()
                    .map(|lc| {
                        let mut best = 0;
                        for (l, &c) in lc.iter().enumerate() {
                            if c > lc[best] {
                                best = l;
                            }
                        }
                        best as u32
                    })
                    .collect(),
            })
        })
        .collect()
}

fn single_run(d: &MixedDataset, cfg: &KPrototypesConfig, seed: u64) -> KPrototypesResult {
    let n = d.n_rows();
    let k = cfg.k;
    let gamma = cfg.gamma;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut protos: Vec<Prototype> = seed_rows(d, k, gamma, &mut rng)
        .into_iter()
        .map(|i| Prototype::of_row(d, i))
        .collect();
    let mut labels: Vec<usize> = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let assigned = assign(d, &protos, gamma);
        let new_labels: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        trace.push(assigned.iter().map(|a| a.1).sum());
        let changed = new_labels != labels;
        labels = new_labels;
        if !changed || iterations >= cfg.max_iter {
            break;
        }
        iterations += 1;
        let mut updated = update(d, &labels, k);
        while let Some(empty) = updated.iter().position(Option::is_none) {
            // Move the point worst served by its prototype into the empty cluster.
            let sizes = {
                let mut s = vec![0usize; k];
                labels.iter().for_each(|&g| s[g] += 1);
                s
            };
            let far = (0..n)
                .filter(|&i| sizes[labels[i]] > 1)
                .map(|i| {
                    let g = labels[i];
                    let proto = updated[g].as_ref().unwrap_or(&protos[g]);
                    (i, proto.dissimilarity(d, i, gamma))
                })
                .fold(None, |acc: Option<(usize, f64)>, x| match acc {
                    Some(a) if a.1 >= x.1 => Some(a),
                    _ => Some(x),
                })
                .expect("k <= n leaves a donor cluster")
                .0;
            labels[far] = empty;
            updated = update(d, &labels, k);
        }
        protos = updated.into_iter().map(|p| p.expect("filled")).collect();
    }
    let cost = *trace.last().expect("one assignment");
    let partition = Partition::from_assignments(&labels, "kprototypes")
        .with_param("k", k)
        .with_param("gamma", gamma)
        .with_param("seed", cfg.seed);
    KPrototypesResult {
        partition,
        prototypes: protos,
        cost,
        cost_trace: trace,
        iterations,
    }
}
