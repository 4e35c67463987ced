use nalgebra::DMatrix;

use super::{Embedding, ReductionMethod};
use crate::dataset::MixedDataset;
use crate::distance::{default_gamma, pairwise, DistanceMatrix, Metric};
use crate::error::{invalid, Error, Result};
use crate::linalg::{fix_signs, symmetric_eigen_asc};

/// Degree below which a node counts as isolated.
const MIN_DEGREE: f64 = 1e-200;

/// Heat-kernel affinities `exp(−d/t)` with a zero diagonal.
pub fn heat_kernel(dist: &DistanceMatrix, t: f64) -> DMatrix<f64> {
    let n = dist.n();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (-dist.get(i, j) / t).exp()
        }
    })
}

/// Solves `L f = λ D f` for the graph Laplacian `L = D − W`.
///
/// Returns all eigenvalues in ascending order and the generalized
/// eigenvectors as columns, normalized so that `fᵀ D f = 1`.
pub fn generalized_laplacian_eigen(w: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = w.nrows();
    let degree: Vec<f64> = (0..n).map(|j| w.column(j).sum()).collect();
    let isolated: Vec<usize> = (0..n).filter(|&i| !(degree[i] > MIN_DEGREE)).collect();
    if !isolated.is_empty() {
        return Err(Error::Disconnected { rows: isolated });
    }
    let inv_sqrt: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
    // D^{-1/2} L D^{-1/2} = I − D^{-1/2} W D^{-1/2}
    let normalized = DMatrix::from_fn(n, n, |i, j| {
        let off = -w[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
        if i == j {
            1.0 + off
        } else {
            off
        }
    });
    let sym = (&normalized + normalized.transpose()) * 0.5;
    let (values, u) = symmetric_eigen_asc(sym)?;
    let mut f = DMatrix::from_fn(n, n, |i, c| u[(i, c)] * inv_sqrt[i]);
    fix_signs(&mut f);
    Ok((values, f))
}

/// Coordinates from the generalized eigenvectors `2..=m+1` of a weighted graph.
pub fn spectral_embedding(w: &DMatrix<f64>, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = w.nrows();
    if n < m + 2 {
        return Err(invalid("dims", format!("need at least {} rows", m + 2)));
    }
    let (values, f) = generalized_laplacian_eigen(w)?;
    let coords = (0..n)
        .flat_map(|i| (1..=m).map(move |c| (i, c)))
        .map(|(i, c)| f[(i, c)])
        .collect();
    Ok((coords, values[1..=m].to_vec()))
}

/// Laplacian eigenmaps over the heat kernel of Huang distances with the
/// default γ.
pub fn laplacian_eigenmaps(d: &MixedDataset, m: usize, t: f64) -> Result<Embedding> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid("t", "must be a positive real"));
    }
    if m < 1 {
        return Err(invalid("dims", "must be at least 1"));
    }
    let (gamma, _) = default_gamma(d);
    let dist = pairwise(d, &Metric::Huang { gamma })?;
    let w = heat_kernel(&dist, t);
    let (coords, values) = spectral_embedding(&w, m)?;
    let mut e = Embedding::new(d.n_rows(), m, coords, ReductionMethod::Laplacian)?
        .with_param("dims", m)
        .with_param("t", t)
        .with_param("gamma", gamma);
    for (c, v) in values.iter().enumerate() {
        e = e.with_param(format!("lambda_{c}"), v);
    }
    Ok(e)
}
