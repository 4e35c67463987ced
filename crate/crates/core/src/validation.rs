//! Cluster tendency and internal validity indices.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::MixedDataset;
use crate::dimred::{famd_decompose, Embedding, ReductionMethod};
use crate::distance::{pairwise, squared_euclidean, DistanceMatrix, Metric};
use crate::error::{invalid, Error, Result};
use crate::par;
use crate::partition::Partition;

/// Value reported for Calinski-Harabasz when the within-cluster dispersion is zero.
pub const CH_CAP: f64 = 1e12;
/// Index value used for degenerate partitions.
pub const SENTINEL: f64 = -1.0;

/// Hopkins statistic with exponent equal to the embedding dimension.
///
/// Samples `max(1, ⌈fraction·n⌉)` real points and as many uniform points in
/// the bounding box; values near 1 indicate clustered data, near 0.5 random.
pub fn hopkins(e: &Embedding, sample_fraction: f64, seed: u64) -> Result<f64> {
    let n = e.n();
    let dim = e.dim();
    if n < 20 {
        return Err(invalid("rows", "need at least 20 points"));
    }
    if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
        return Err(invalid("sample_fraction", "must be in (0, 1]"));
    }
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for i in 0..n {
        for (t, v) in e.row(i).iter().enumerate() {
            lo[t] = lo[t].min(*v);
            hi[t] = hi[t].max(*v);
        }
    }
    if lo.iter().zip(&hi).any(|(l, h)| !(h > l)) {
        return Err(Error::Degenerate("bounding box has zero volume".into()));
    }
    let m = ((sample_fraction * n as f64).ceil() as usize).clamp(1, n - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = sample(&mut rng, n, m).into_vec();
    let probes: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..dim).map(|t| rng.random_range(lo[t]..hi[t])).collect())
        .collect();
    let nearest = |x: &[f64], skip: Option<usize>| -> f64 {
        (0..n)
            .filter(|&j| Some(j) != skip)
            .map(|j| squared_euclidean(x, e.row(j)))
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    };
    let p = dim as i32;
    let u: f64 = par::map_indices(m, |s| nearest(&probes[s], None).powi(p))
        .into_iter()
        .sum();
    let w: f64 = par::map_indices(m, |s| nearest(e.row(picked[s]), Some(picked[s])).powi(p))
        .into_iter()
        .sum();
    if u + w == 0.0 {
        return Ok(0.5);
    }
    Ok(u / (u + w))
}

/// Mean Hopkins statistic over `runs` consecutive seeds.
pub fn hopkins_mean(e: &Embedding, sample_fraction: f64, seed: u64, runs: usize) -> Result<f64> {
    let runs = runs.max(1);
    let mut total = 0.0;
    for r in 0..runs {
        total += hopkins(e, sample_fraction, seed.wrapping_add(r as u64))?;
    }
    Ok(total / runs as f64)
}

/// VAT ordering and the min-max path transform of the reordered matrix.
#[derive(Clone, Debug)]
pub struct Ivat {
    /// `order[r]` is the original row shown at position `r`.
    pub order: Vec<usize>,
    /// Transformed matrix in display order.
    pub matrix: DistanceMatrix,
}

/// VAT reordering followed by the iVAT transform.
pub fn ivat(dist: &DistanceMatrix) -> Result<Ivat> {
    let n = dist.n();
    if n < 2 {
        return Err(invalid("rows", "need at least 2 points"));
    }
    let mut start = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            if dist.get(i, j) > best {
                best = dist.get(i, j);
                start = i;
            }
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut in_tree = vec![false; n];
    let mut reach = vec![f64::INFINITY; n];
    let mut next = start;
    for _ in 0..n {
        in_tree[next] = true;
        order.push(next);
        for j in 0..n {
            if !in_tree[j] {
                reach[j] = reach[j].min(dist.get(next, j));
            }
        }
        let mut cand = None;
        for j in 0..n {
            if !in_tree[j] && cand.is_none_or(|c: usize| reach[j] < reach[c]) {
                cand = Some(j);
            }
        }
        match cand {
            Some(c) => next = c,
            None => break,
        }
    }
    let r = |a: usize, b: usize| dist.get(order[a], order[b]);
    let mut out = vec![0.0; n * n];
    for a in 1..n {
        let mut j = 0;
        for c in 1..a {
            if r(a, c) < r(a, j) {
                j = c;
            }
        }
        out[a * n + j] = r(a, j);
        for c in 0..a {
            if c != j {
                out[a * n + c] = r(a, j).max(out[j.max(c) * n + j.min(c)]);
            }
        }
    }
    for a in 0..n {
        for c in 0..a {
            out[c * n + a] = out[a * n + c];
        }
    }
    Ok(Ivat {
        order,
        matrix: DistanceMatrix::from_values(n, out, dist.metric().clone())?,
    })
}

/// Members and centroids of the non-outlier clusters.
fn clusters(e: &Embedding, p: &Partition) -> Result<(Vec<Vec<usize>>, Vec<Vec<f64>>)> {
    if p.n() != e.n() {
        return Err(Error::SizeMismatch("partition and embedding sizes differ".into()));
    }
    if p.k() < 2 {
        return Err(Error::Degenerate(format!("{} non-outlier clusters", p.k())));
    }
    let members: Vec<Vec<usize>> = (0..p.k()).map(|c| p.members(c)).collect();
    let centroids = members
        .iter()
        .map(|m| {
            let mut c = vec![0.0; e.dim()];
            for &i in m {
                for (t, v) in e.row(i).iter().enumerate() {
                    c[t] += v;
                }
            }
            c.iter_mut().for_each(|v| *v /= m.len() as f64);
            c
        })
        .collect();
    Ok((members, centroids))
}

/// Calinski-Harabasz index over the non-outlier points. Returns [`CH_CAP`]
/// when the within-cluster dispersion vanishes.
pub fn calinski_harabasz(e: &Embedding, p: &Partition) -> Result<f64> {
    let (members, centroids) = clusters(e, p)?;
    let k = members.len();
    let n_e: usize = members.iter().map(Vec::len).sum();
    let mut overall = vec![0.0; e.dim()];
    for m in &members {
        for &i in m {
            for (t, v) in e.row(i).iter().enumerate() {
                overall[t] += v;
            }
        }
    }
    overall.iter_mut().for_each(|v| *v /= n_e as f64);
    let mut between = 0.0;
    let mut within = 0.0;
    for (m, c) in members.iter().zip(&centroids) {
        between += m.len() as f64 * squared_euclidean(c, &overall);
        within += m.iter().map(|&i| squared_euclidean(e.row(i), c)).sum::<f64>();
    }
    if within == 0.0 {
        if between > 0.0 {
            return Ok(CH_CAP);
        }
        return Err(Error::Degenerate("all clusters coincide".into()));
    }
    Ok(((between / within) * (n_e - k) as f64 / (k - 1) as f64).min(CH_CAP))
}

/// Mean silhouette width over non-outlier points of a precomputed
/// dissimilarity matrix. Points in singleton clusters contribute 0.
pub fn silhouette_from_matrix(dist: &DistanceMatrix, p: &Partition) -> Result<f64> {
    let n = dist.n();
    if p.n() != n {
        return Err(Error::SizeMismatch("partition and matrix sizes differ".into()));
    }
    let k = p.k();
    if k < 2 {
        return Err(Error::Degenerate(format!("{k} non-outlier clusters")));
    }
    let sizes = p.cluster_sizes();
    let labels = p.labels();
    let widths = par::map_indices(n, |i| {
        let own = labels[i]?;
        if sizes[own] == 1 {
            return Some(0.0);
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if let Some(l) = labels[j] {
                sums[l] += dist.get(i, j);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        Some(if denom > 0.0 { (b - a) / denom } else { 0.0 })
    });
    let vals: Vec<f64> = widths.into_iter().flatten().collect();
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Silhouette over Euclidean distances between embedded points.
pub fn silhouette(e: &Embedding, p: &Partition) -> Result<f64> {
    silhouette_from_matrix(&e.distance_matrix(), p)
}

/// Davies-Bouldin index over the non-outlier points.
pub fn davies_bouldin(e: &Embedding, p: &Partition) -> Result<f64> {
    let (members, centroids) = clusters(e, p)?;
    let k = members.len();
    let scatter: Vec<f64> = members
        .iter()
        .zip(&centroids)
        .map(|(m, c)| {
            m.iter()
                .map(|&i| squared_euclidean(e.row(i), c).sqrt())
                .sum::<f64>()
                / m.len() as f64
        })
        .collect();
    let mut total = 0.0;
    for a in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for b in 0..k {
            if a == b {
                continue;
            }
            let sep = squared_euclidean(&centroids[a], &centroids[b]).sqrt();
            if sep == 0.0 {
                return Err(Error::Degenerate(format!(
                    "clusters {a} and {b} have coincident centroids"
                )));
            }
            worst = worst.max((scatter[a] + scatter[b]) / sep);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// Internal validity of one partition.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub calinski_harabasz: f64,
    pub silhouette_embedded: f64,
    pub silhouette_gower: f64,
    pub davies_bouldin: f64,
    pub outlier_fraction: f64,
    pub k: usize,
    /// Set when Calinski-Harabasz hit [`CH_CAP`].
    pub ch_capped: bool,
    /// Reason the partition could not be scored, if any.
    pub degenerate: Option<String>,
}

impl ValidationReport {
    pub fn degenerate(p: &Partition, reason: impl Into<String>) -> Self {
        Self {
            calinski_harabasz: SENTINEL,
            silhouette_embedded: SENTINEL,
            silhouette_gower: SENTINEL,
            davies_bouldin: SENTINEL,
            outlier_fraction: p.outlier_fraction(),
            k: p.k(),
            ch_capped: false,
            degenerate: Some(reason.into()),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate.is_some()
    }

    pub const CSV_HEADER: [&'static str; 7] = [
        "algorithm",
        "CH",
        "sil_famd",
        "sil_gower",
        "DB",
        "outlier_fraction",
        "k",
    ];

    pub fn csv_row(&self, algorithm: &str) -> Vec<String> {
        vec![
            algorithm.to_owned(),
            format!("{:.6}", self.calinski_harabasz),
            format!("{:.6}", self.silhouette_embedded),
            format!("{:.6}", self.silhouette_gower),
            format!("{:.6}", self.davies_bouldin),
            format!("{:.6}", self.outlier_fraction),
            self.k.to_string(),
        ]
    }
}

/// Shared inputs for scoring several partitions of one dataset.
#[derive(Clone, Debug)]
pub struct ReportSpace {
    pub embedding: Embedding,
    pub gower: DistanceMatrix,
}

/// FAMD embedding at `min(rank, P + Q)` dimensions and the Gower matrix.
pub fn report_space(d: &MixedDataset) -> Result<ReportSpace> {
    let dec = famd_decompose(d)?;
    let dims = dec
        .rank()
        .min(d.n_numeric() + d.n_categorical())
        .max(1);
    let n = d.n_rows();
    let avail = dec.scores.ncols();
    let coords = (0..n)
        .flat_map(|i| (0..dims).map(move |c| (i, c)))
        .map(|(i, c)| if c < avail { dec.scores[(i, c)] } else { 0.0 })
        .collect();
    let embedding = Embedding::new(n, dims, coords, ReductionMethod::Famd)?
        .with_inertia(dec.explained_inertia(dims))
        .with_param("dims", dims);
    let gower = pairwise(d, &Metric::Gower)?;
    Ok(ReportSpace { embedding, gower })
}

/// Scores a partition in a precomputed [`ReportSpace`]. Degenerate
/// partitions yield the sentinel report instead of an error.
pub fn report_in(space: &ReportSpace, p: &Partition) -> ValidationReport {
    if p.k() < 2 {
        return degenerate_partition(p);
    }
    let e = &space.embedding;
    let scores = (|| -> Result<(f64, f64, f64, f64)> {
        Ok((
            calinski_harabasz(e, p)?,
            silhouette(e, p)?,
            silhouette_from_matrix(&space.gower, p)?,
            davies_bouldin(e, p)?,
        ))
    })();
    match scores {
        Ok((ch, sil, sil_g, db)) => ValidationReport {
            calinski_harabasz: ch,
            silhouette_embedded: sil,
            silhouette_gower: sil_g,
            davies_bouldin: db,
            outlier_fraction: p.outlier_fraction(),
            k: p.k(),
            ch_capped: ch >= CH_CAP,
            degenerate: None,
        },
        Err(err) => ValidationReport::degenerate(p, err.to_string()),
    }
}

/// Validity report of a partition of `d`.
pub fn report(d: &MixedDataset, p: &Partition) -> ValidationReport {
    if p.k() < 2 {
        return degenerate_partition(p);
    }
    match report_space(d) {
        Ok(space) => report_in(&space, p),
        Err(err) => ValidationReport::degenerate(p, err.to_string()),
    }
}

fn degenerate_partition(p: &Partition) -> ValidationReport {
    let reason = if p.k() == 0 {
        "all points are outliers"
    } else {
        "single cluster"
    };
    ValidationReport::degenerate(p, reason)
}
