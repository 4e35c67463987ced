//! Thin wrappers over nalgebra's symmetric eigensolver.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Eigen-decomposition of a symmetric matrix with eigenvalues in descending
/// order. Column `c` of the returned matrix is the eigenvector of value `c`.
pub fn symmetric_eigen_desc(m: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let (values, vectors) = symmetric_eigen_asc(m)?;
    let n = values.len();
    let order: Vec<usize> = (0..n).rev().collect();
    Ok((
        order.iter().map(|&c| values[c]).collect(),
        DMatrix::from_fn(vectors.nrows(), n, |r, c| vectors[(r, order[c])]),
    ))
}

/// Same as [`symmetric_eigen_desc`] with ascending eigenvalues.
pub fn symmetric_eigen_asc(m: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if m.nrows() != m.ncols() {
        return Err(Error::Linalg("matrix is not square".into()));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Linalg("matrix has non-finite entries".into()));
    }
    let n = m.nrows();
    let eig = nalgebra::SymmetricEigen::try_new(m, 1e-15, 10_000)
        .ok_or_else(|| Error::Linalg("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&c| eig.eigenvalues[c]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Flips the sign of each column so that its largest-magnitude entry is
/// positive (first such entry on ties).
pub fn fix_signs(v: &mut DMatrix<f64>) {
    for c in 0..v.ncols() {
        let mut best = 0usize;
        for r in 1..v.nrows() {
            if v[(r, c)].abs() > v[(best, c)].abs() {
                best = r;
            }
        }
        if v.nrows() > 0 && v[(best, c)] < 0.0 {
            v.column_mut(c).neg_mut();
        }
    }
}
