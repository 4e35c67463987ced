use nalgebra::DMatrix;

use super::{Embedding, ReductionMethod};
use crate::dataset::MixedDataset;
use crate::error::{invalid, Result};
use crate::linalg::{fix_signs, symmetric_eigen_desc};

/// Full factorial decomposition of a mixed dataset.
#[derive(Clone, Debug)]
pub struct FamdDecomposition {
    /// Eigenvalues of the encoded cross-product matrix, descending, clamped at 0.
    pub eigenvalues: Vec<f64>,
    /// Row scores on every component, `n × components`.
    pub scores: DMatrix<f64>,
}

impl FamdDecomposition {
    /// Number of components with non-negligible inertia.
    pub fn rank(&self) -> usize {
        let top = self.eigenvalues.first().copied().unwrap_or(0.0);
        self.eigenvalues
            .iter()
            .filter(|&&v| v > top * 1e-10 && v > 0.0)
            .count()
    }

    pub fn explained_inertia(&self, m: usize) -> f64 {
        let total: f64 = self.eigenvalues.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        self.eigenvalues.iter().take(m).sum::<f64>() / total
    }
}

/// Standardized numerics next to centered indicators scaled by `1/√p_l`.
fn encode(d: &MixedDataset) -> DMatrix<f64> {
    let n = d.n_rows();
    let std = d.standardize();
    let p = d.n_numeric();
    let mut cols: Vec<Vec<f64>> = (0..p)
        .map(|j| (0..n).map(|i| std.numeric_value(i, j)).collect())
        .collect();
    for c in 0..d.n_categorical() {
        let levels = d.levels(c).len();
        let mut counts = vec![0usize; levels];
        for i in 0..n {
            counts[d.categorical_value(i, c) as usize] += 1;
        }
        for (l, &count) in counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let prop = count as f64 / n as f64;
            let scale = prop.sqrt();
            cols.push(
                (0..n)
                    .map(|i| {
                        let ind = if d.categorical_value(i, c) as usize == l {
                            1.0
                        } else {
                            0.0
                        };
                        (ind - prop) / scale
                    })
                    .collect(),
            );
        }
    }
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

/// Eigen-decomposes the encoded table, working on whichever of `XᵀX` and
/// `XXᵀ` is smaller. Component signs make the largest loading positive.
pub fn famd_decompose(d: &MixedDataset) -> Result<FamdDecomposition> {
    d.require_complete()?;
    let x = encode(d);
    let (n, j) = x.shape();
    let (eigenvalues, scores) = if j <= n {
        let (vals, mut v) = symmetric_eigen_desc(x.transpose() * &x)?;
        fix_signs(&mut v);
        (vals, &x * v)
    } else {
        let (vals, u) = symmetric_eigen_desc(&x * x.transpose())?;
        let k = j.min(n);
        let mut loadings = DMatrix::zeros(j, k);
        let mut scores = DMatrix::zeros(n, k);
        for c in 0..k {
            let s = vals[c].max(0.0).sqrt();
            if s > 0.0 {
                loadings.set_column(c, &(x.transpose() * u.column(c) / s));
                scores.set_column(c, &(u.column(c) * s));
            }
        }
        let before = loadings.clone();
        fix_signs(&mut loadings);
        for c in 0..k {
            if loadings.column(c) != before.column(c) {
                scores.column_mut(c).neg_mut();
            }
        }
        (vals.into_iter().take(k).collect(), scores)
    };
    Ok(FamdDecomposition {
        eigenvalues: eigenvalues.into_iter().map(|v| v.max(0.0)).collect(),
        scores,
    })
}

/// Factorial analysis of mixed data: the first `m` global components.
///
/// `m` may not exceed `P + Σ(levels − 1)`.
pub fn famd(d: &MixedDataset, m: usize) -> Result<Embedding> {
    let max_dims = d.n_numeric()
        + (0..d.n_categorical())
            .map(|c| d.levels(c).len().saturating_sub(1))
            .sum::<usize>();
    if m < 1 || m > max_dims {
        return Err(invalid("dims", format!("must be in 1..={max_dims}")));
    }
    let dec = famd_decompose(d)?;
    let n = d.n_rows();
    let avail = dec.scores.ncols();
    let coords = (0..n)
        .flat_map(|i| {
            let row: Vec<f64> = (0..m)
                .map(|c| if c < avail { dec.scores[(i, c)] } else { 0.0 })
                .collect();
            row
        })
        .collect();
    Ok(Embedding::new(n, m, coords, ReductionMethod::Famd)?
        .with_inertia(dec.explained_inertia(m))
        .with_param("dims", m))
}
