use crate::distance::DistanceMatrix;
use crate::error::{invalid, Result};
use crate::par;

/// Result of partitioning around medoids.
#[derive(Clone, Debug, PartialEq)]
pub struct Medoids {
    pub medoids: Vec<usize>,
    /// Index into `medoids` for every point.
    pub labels: Vec<usize>,
    pub cost: f64,
}

fn total_cost(dist: &DistanceMatrix, medoids: &[usize]) -> f64 {
    (0..dist.n())
        .map(|i| {
            medoids
                .iter()
                .map(|&m| dist.get(i, m))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// PAM: greedy BUILD followed by best-improvement SWAP until no swap lowers
/// the cost. Deterministic; ties go to the lowest index.
pub fn kmedoids(dist: &DistanceMatrix, k: usize) -> Result<Medoids> {
    let n = dist.n();
    if k < 1 || k > n {
        return Err(invalid("k", format!("must be in 1..={n}")));
    }
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let mut nearest = vec![f64::INFINITY; n];
    while medoids.len() < k {
        let gains = par::map_indices(n, |c| {
            if medoids.contains(&c) {
                return f64::INFINITY;
            }
            (0..n).map(|i| nearest[i].min(dist.get(i, c))).sum::<f64>()
        });
        let mut best = 0;
        for c in 1..n {
            if gains[c] < gains[best] {
                best = c;
            }
        }
        medoids.push(best);
        for (i, v) in nearest.iter_mut().enumerate() {
            *v = v.min(dist.get(i, best));
        }
    }
    let mut cost = total_cost(dist, &medoids);
    loop {
        let candidates = par::map_indices(n, |o| {
            if medoids.contains(&o) {
                return (f64::INFINITY, 0);
            }
            let mut best = (f64::INFINITY, 0);
            for slot in 0..k {
                let mut trial = medoids.clone();
                trial[slot] = o;
                let c = total_cost(dist, &trial);
                if c < best.0 {
                    best = (c, slot);
                }
            }
            best
        });
        let mut pick: Option<(usize, usize, f64)> = None;
        for (o, &(c, slot)) in candidates.iter().enumerate() {
            if c < cost - 1e-12 * cost.abs().max(1.0) && pick.is_none_or(|p| c < p.2) {
                pick = Some((o, slot, c));
            }
        }
        match pick {
            Some((o, slot, c)) => {
                medoids[slot] = o;
                cost = c;
            }
            None => break,
        }
    }
    let labels = (0..n)
        .map(|i| {
            let mut best = 0;
            for s in 1..k {
                if dist.get(i, medoids[s]) < dist.get(i, medoids[best]) {
                    best = s;
                }
            }
            best
        })
        .collect();
    Ok(Medoids {
        medoids,
        labels,
        cost,
    })
}
