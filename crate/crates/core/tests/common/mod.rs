#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use mixclust::{Column, FeatureKind, GeneratorConfig, LabeledDataset, MixedDataset, Partition};
use nalgebra::DMatrix;

pub fn penguins_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/penguins.csv")
}

/// Penguins with `year` read as a category, incomplete rows dropped.
pub fn penguins_categorical_year() -> MixedDataset {
    use FeatureKind::*;
    let schema = [
        Column::new("species", Categorical),
        Column::new("island", Categorical),
        Column::new("bill_length_mm", Numerical),
        Column::new("bill_depth_mm", Numerical),
        Column::new("flipper_length_mm", Numerical),
        Column::new("body_mass_g", Numerical),
        Column::new("sex", Categorical),
        Column::new("year", Categorical),
    ];
    MixedDataset::load_csv(penguins_path(), Some(&schema))
        .unwrap()
        .drop_missing_rows()
        .unwrap()
}

/// Penguins with inferred column types, incomplete rows dropped.
pub fn penguins_inferred() -> MixedDataset {
    MixedDataset::load_csv(penguins_path(), None)
        .unwrap()
        .drop_missing_rows()
        .unwrap()
}

pub fn base_case(seed: u64, std: f64) -> LabeledDataset {
    mixclust::generate(&GeneratorConfig {
        cluster_std: std,
        rng_seed: seed,
        ..GeneratorConfig::default()
    })
    .unwrap()
}

/// Adjusted Rand index over the points `pred` does not mark as outliers.
pub fn ari(pred: &Partition, truth: &[usize]) -> f64 {
    let pairs: Vec<(usize, usize)> = pred
        .labels()
        .iter()
        .zip(truth)
        .filter_map(|(p, &t)| p.map(|p| (p, t)))
        .collect();
    ari_pairs(&pairs)
}

fn choose2(x: usize) -> f64 {
    (x * x.saturating_sub(1)) as f64 / 2.0
}

pub fn ari_pairs(pairs: &[(usize, usize)]) -> f64 {
    let mut table: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut rows: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cols: BTreeMap<usize, usize> = BTreeMap::new();
    for &(a, b) in pairs {
        *table.entry((a, b)).or_default() += 1;
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sa: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sb: f64 = cols.values().map(|&c| choose2(c)).sum();
    let total = choose2(pairs.len());
    let expected = sa * sb / total;
    let max = 0.5 * (sa + sb);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Minimum spanning tree weight by enumerating every (n−1)-edge subset.
pub fn brute_force_mst_weight(n: usize, w: &[f64]) -> f64 {
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let mut best = f64::INFINITY;
    let mut chosen = Vec::new();
    fn rec(
        edges: &[(usize, usize)],
        start: usize,
        need: usize,
        chosen: &mut Vec<usize>,
        n: usize,
        w: &[f64],
        best: &mut f64,
    ) {
        if need == 0 {
            let mut parent: Vec<usize> = (0..n).collect();
            fn find(p: &mut [usize], x: usize) -> usize {
                if p[x] != x {
                    let r = find(p, p[x]);
                    p[x] = r;
                }
                p[x]
            }
            let mut total = 0.0;
            for &e in chosen.iter() {
                let (a, b) = edges[e];
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra == rb {
                    return;
                }
                parent[ra] = rb;
                total += w[a * n + b];
            }
            if total < *best {
                *best = total;
            }
            return;
        }
        for e in start..edges.len() {
            if edges.len() - e < need {
                break;
            }
            chosen.push(e);
            rec(edges, e + 1, need - 1, chosen, n, w, best);
            chosen.pop();
        }
    }
    rec(&edges, 0, n - 1, &mut chosen, n, w, &mut best);
    best
}

/// Best total stability over all antichains of a forest, by enumeration.
pub fn brute_force_antichain(parents: &[Option<usize>], stability: &[f64]) -> (f64, Vec<usize>) {
    let m = parents.len();
    let ancestor = |a: usize, mut b: usize| -> bool {
        while let Some(p) = parents[b] {
            if p == a {
                return true;
            }
            b = p;
        }
        false
    };
    let is_leaf = |v: usize| !parents.iter().any(|p| *p == Some(v));
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for mask in 1u32..(1 << m) {
        let set: Vec<usize> = (0..m).filter(|&v| mask >> v & 1 == 1).collect();
        let antichain = set
            .iter()
            .all(|&a| set.iter().all(|&b| a == b || !ancestor(a, b)));
        if !antichain {
            continue;
        }
        // maximal: every leaf is covered by a chosen node or one of its ancestors
        let covers = (0..m).filter(|&v| is_leaf(v)).all(|leaf| {
            set.iter().any(|&s| s == leaf || ancestor(s, leaf))
        });
        if !covers {
            continue;
        }
        let total: f64 = set.iter().map(|&v| stability[v]).sum();
        if total > best.0 {
            best = (total, set);
        }
    }
    best
}

/// All-pairs bottleneck (min-max) path distances by Floyd-Warshall.
pub fn minimax_oracle(n: usize, d: &[f64]) -> Vec<f64> {
    let mut m = d.to_vec();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = m[i * n + k].max(m[k * n + j]);
                if via < m[i * n + j] {
                    m[i * n + j] = via;
                }
            }
        }
    }
    m
}

fn groups(labels: &[Option<usize>]) -> BTreeMap<usize, Vec<usize>> {
    let mut g: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        if let Some(l) = l {
            g.entry(*l).or_default().push(i);
        }
    }
    g
}

fn centroid(x: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let dim = x[0].len();
    let mut c = vec![0.0; dim];
    for &i in members {
        for t in 0..dim {
            c[t] += x[i][t];
        }
    }
    c.iter().map(|v| v / members.len() as f64).collect()
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Calinski-Harabasz from its textbook definition.
pub fn ch_oracle(x: &[Vec<f64>], labels: &[Option<usize>]) -> f64 {
    let g = groups(labels);
    let all: Vec<usize> = g.values().flatten().copied().collect();
    let n = all.len() as f64;
    let k = g.len() as f64;
    let mean = centroid(x, &all);
    let mut between = 0.0;
    let mut within = 0.0;
    for members in g.values() {
        let c = centroid(x, members);
        between += members.len() as f64 * sq(&c, &mean);
        within += members.iter().map(|&i| sq(&x[i], &c)).sum::<f64>();
    }
    (between / (k - 1.0)) / (within / (n - k))
}

/// Mean silhouette with Euclidean distances, singletons scoring 0.
pub fn silhouette_oracle(x: &[Vec<f64>], labels: &[Option<usize>]) -> f64 {
    let g = groups(labels);
    let dist = |a: usize, b: usize| sq(&x[a], &x[b]).sqrt();
    let mut total = 0.0;
    let mut count = 0.0;
    for (l, members) in &g {
        for &i in members {
            count += 1.0;
            if members.len() == 1 {
                continue;
            }
            let a = members.iter().filter(|&&j| j != i).map(|&j| dist(i, j)).sum::<f64>()
                / (members.len() - 1) as f64;
            let b = g
                .iter()
                .filter(|(o, _)| *o != l)
                .map(|(_, m)| m.iter().map(|&j| dist(i, j)).sum::<f64>() / m.len() as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                total += (b - a) / denom;
            }
        }
    }
    total / count
}

/// Davies-Bouldin with mean Euclidean scatter and centroid separation.
pub fn db_oracle(x: &[Vec<f64>], labels: &[Option<usize>]) -> f64 {
    let g: Vec<Vec<usize>> = groups(labels).into_values().collect();
    let cs: Vec<Vec<f64>> = g.iter().map(|m| centroid(x, m)).collect();
    let s: Vec<f64> = g
        .iter()
        .zip(&cs)
        .map(|(m, c)| m.iter().map(|&i| sq(&x[i], c).sqrt()).sum::<f64>() / m.len() as f64)
        .collect();
    let k = g.len();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..k {
            if i != j {
                worst = worst.max((s[i] + s[j]) / sq(&cs[i], &cs[j]).sqrt());
            }
        }
        total += worst;
    }
    total / k as f64
}

/// Principal component scores of a dense `n × p` matrix via the covariance
/// eigendecomposition, standardizing columns first.
pub fn pca_scores(n: usize, p: usize, values: &[f64], m: usize) -> DMatrix<f64> {
    let mut x = DMatrix::from_row_slice(n, p, values);
    for j in 0..p {
        let col = x.column(j);
        let mean = col.mean();
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        for i in 0..n {
            x[(i, j)] = (x[(i, j)] - mean) / sd;
        }
    }
    let cov = x.transpose() * &x;
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut out = DMatrix::zeros(n, m);
    for (c, &k) in order.iter().take(m).enumerate() {
        let proj = &x * eig.eigenvectors.column(k);
        out.set_column(c, &proj);
    }
    out
}

pub fn rows_of(e: &mixclust::Embedding) -> Vec<Vec<f64>> {
    (0..e.n()).map(|i| e.row(i).to_vec()).collect()
}

/// Central finite-difference gradient of `f` at `x`.
pub fn finite_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|t| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[t] += h;
            down[t] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

/// Random complete mixed dataset with `levels` categories per column.
pub fn random_mixed(n: usize, p: usize, q: usize, levels: usize, seed: u64) -> MixedDataset {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let numeric: Vec<f64> = (0..n * p).map(|_| rng.random_range(-3.0..3.0)).collect();
    let cats: Vec<u32> = (0..n * q).map(|_| rng.random_range(0..levels as u32)).collect();
    let lv = (0..q)
        .map(|_| (0..levels).map(|l| format!("l{l}")).collect())
        .collect();
    MixedDataset::from_blocks(n, numeric, p, cats, lv).unwrap()
}
