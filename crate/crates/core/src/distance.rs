//! Mixed-type dissimilarities and dense pairwise matrices.

use std::fmt;
use std::io::Write;

use crate::dataset::{population_moments, MixedDataset};
use crate::error::{Error, Result};
use crate::par;

/// Which dissimilarity produced a [`DistanceMatrix`].
#[derive(Clone, Debug, PartialEq)]
pub enum Metric {
    /// Squared Euclidean on numerics plus `gamma` times the categorical mismatch count.
    Huang { gamma: f64 },
    /// One minus Gower's similarity coefficient.
    Gower,
    /// Gower with the numeric term taken as `|Δ|/R` rather than `1 − |Δ|/R`.
    GowerLiteral,
    /// Squared Euclidean over numerics only.
    Euclid2,
    /// Euclidean distance between embedding coordinates of the named method.
    Embedded(String),
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Huang { gamma } => write!(f, "huang(gamma={gamma})"),
            Metric::Gower => f.write_str("gower"),
            Metric::GowerLiteral => f.write_str("gower-literal"),
            Metric::Euclid2 => f.write_str("euclid2"),
            Metric::Embedded(m) => write!(f, "embedded({m})"),
        }
    }
}

/// Dense symmetric dissimilarity matrix with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
    metric: Metric,
}

impl DistanceMatrix {
    /// Wraps a row-major `n × n` buffer after checking symmetry, the zero
    /// diagonal and non-negativity.
    pub fn from_values(n: usize, values: Vec<f64>, metric: Metric) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::SizeMismatch(format!(
                "{} values for a {n}×{n} matrix",
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidDataset(format!("non-zero diagonal at {i}")));
            }
            for j in i + 1..n {
                let v = values[i * n + j];
                if v != values[j * n + i] || !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::InvalidDataset(format!(
                        "entry ({i},{j}) is asymmetric, negative or not finite"
                    )));
                }
            }
        }
        Ok(Self { n, values, metric })
    }

    /// Builds a matrix from a pair function evaluated on the upper triangle.
    pub fn from_fn<F>(n: usize, metric: Metric, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Result<f64> + Sync + Send,
    {
        let rows: Vec<Result<Vec<f64>>> =
            par::map_indices(n, |i| (i + 1..n).map(|j| f(i, j)).collect());
        let mut values = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (off, v) in row?.into_iter().enumerate() {
                let j = i + 1 + off;
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Ok(Self { n, values, metric })
    }

    /// Euclidean distances between the rows of a row-major `n × dim` matrix.
    pub fn euclidean(n: usize, dim: usize, coords: &[f64], metric: Metric) -> Self {
        assert_eq!(coords.len(), n * dim);
        Self::from_fn(n, metric, |i, j| {
            let a = &coords[i * dim..(i + 1) * dim];
            let b = &coords[j * dim..(j + 1) * dim];
            Ok(squared_euclidean(a, b).sqrt())
        })
        .expect("euclidean distances are infallible")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// The `k` nearest other points of every row as `(index, distance)`,
    /// ordered by distance then index.
    pub fn knn(&self, k: usize) -> Vec<Vec<(usize, f64)>> {
        let n = self.n;
        par::map_indices(n, |i| {
            let mut row: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, self.get(i, j)))
                .collect();
            row.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            row.truncate(k);
            row
        })
    }

    /// Upper-triangle entries in row order, as expected by linkage routines.
    pub fn condensed(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            out.extend_from_slice(&self.values[i * n + i + 1..(i + 1) * n]);
        }
        out
    }

    /// Writes `n` header-less comma-separated rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        for i in 0..self.n {
            wtr.write_record(self.row(i).iter().map(|v| v.to_string()))?;
        }
        wtr.flush().map_err(|source| Error::Io {
            path: "<matrix writer>".into(),
            source,
        })
    }
}

#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn hamming(a: &[u32], b: &[u32]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as f64
}

/// Huang dissimilarity without missing-value checks.
#[inline]
pub(crate) fn huang_unchecked(d: &MixedDataset, i: usize, j: usize, gamma: f64) -> f64 {
    squared_euclidean(d.numeric_row(i), d.numeric_row(j))
        + gamma * hamming(d.categorical_row(i), d.categorical_row(j))
}

/// Squared Euclidean distance over numerics plus `gamma` times the number of
/// mismatching categorical columns.
pub fn huang_distance(d: &MixedDataset, i: usize, j: usize, gamma: f64) -> Result<f64> {
    let bad: Vec<usize> = [i, j]
        .into_iter()
        .filter(|&r| d.row_has_missing(r))
        .collect();
    if !bad.is_empty() {
        return Err(Error::MissingValues { rows: bad });
    }
    Ok(huang_unchecked(d, i, j, gamma))
}

/// Half the mean population standard deviation of the numeric columns.
///
/// Returns `(1.0, true)` when there are no numeric columns.
pub fn default_gamma(d: &MixedDataset) -> (f64, bool) {
    let p = d.n_numeric();
    if p == 0 {
        log::warn!("no numerical columns; using gamma = 1.0");
        return (1.0, true);
    }
    let mean_sd = (0..p)
        .map(|j| population_moments(&d.numeric_column(j)).1)
        .sum::<f64>()
        / p as f64;
    (0.5 * mean_sd, false)
}

/// Per-feature ranges used by the Gower coefficient, fixed once per dataset.
#[derive(Clone, Debug)]
pub struct GowerScale {
    ranges: Vec<f64>,
    literal: bool,
}

impl GowerScale {
    pub fn new(d: &MixedDataset, literal: bool) -> Self {
        let ranges = (0..d.n_numeric())
            .map(|j| {
                let col = d.numeric_column(j);
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if col.is_empty() {
                    0.0
                } else {
                    hi - lo
                }
            })
            .collect();
        Self { ranges, literal }
    }

    pub fn ranges(&self) -> &[f64] {
        &self.ranges
    }

    /// `1 − s_ij` where `s_ij` is the weighted mean of per-feature similarities.
    pub fn dissimilarity(&self, d: &MixedDataset, i: usize, j: usize) -> Result<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, &r) in self.ranges.iter().enumerate() {
            if r <= 0.0 || d.numeric_missing(i, k) || d.numeric_missing(j, k) {
                continue;
            }
            let frac = (d.numeric_value(i, k) - d.numeric_value(j, k)).abs() / r;
            num += if self.literal { frac } else { 1.0 - frac };
            den += 1.0;
        }
        for c in 0..d.n_categorical() {
            if d.categorical_missing(i, c) || d.categorical_missing(j, c) {
                continue;
            }
            if d.categorical_value(i, c) == d.categorical_value(j, c) {
                num += 1.0;
            }
            den += 1.0;
        }
        if den == 0.0 {
            return Err(Error::NoComparableFeatures { i, j });
        }
        Ok((1.0 - num / den).clamp(0.0, 1.0))
    }
}

/// Gower dissimilarity of two rows. Computes the feature ranges on every
/// call; use [`GowerScale`] for repeated evaluation.
pub fn gower_dissimilarity(d: &MixedDataset, i: usize, j: usize) -> Result<f64> {
    GowerScale::new(d, false).dissimilarity(d, i, j)
}

/// Full pairwise matrix under `metric`. Rows are split across workers but
/// the result does not depend on their number.
pub fn pairwise(d: &MixedDataset, metric: &Metric) -> Result<DistanceMatrix> {
    let n = d.n_rows();
    match metric {
        Metric::Huang { gamma } => {
            d.require_complete()?;
            let g = *gamma;
            DistanceMatrix::from_fn(n, metric.clone(), |i, j| Ok(huang_unchecked(d, i, j, g)))
        }
        Metric::Euclid2 => {
            d.require_complete()?;
            DistanceMatrix::from_fn(n, metric.clone(), |i, j| {
                Ok(squared_euclidean(d.numeric_row(i), d.numeric_row(j)))
            })
        }
        Metric::Gower | Metric::GowerLiteral => {
            let scale = GowerScale::new(d, matches!(metric, Metric::GowerLiteral));
            DistanceMatrix::from_fn(n, metric.clone(), |i, j| scale.dissimilarity(d, i, j))
        }
        Metric::Embedded(_) => Err(Error::InvalidParameter {
            name: "metric",
            reason: "embedded distances are built from an embedding".into(),
        }),
    }
}
