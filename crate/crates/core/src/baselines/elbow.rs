use super::kmedoids::kmedoids;
use crate::dataset::MixedDataset;
use crate::error::{invalid, Result};
use crate::partition::Partition;
use crate::validation::{calinski_harabasz, report_space};

/// Calinski-Harabasz score of the k-medoids partition on the Gower matrix,
/// measured in FAMD space, for each `k` in `2..=k_max`.
pub fn elbow_curve(d: &MixedDataset, k_max: usize) -> Result<Vec<(usize, f64)>> {
    if k_max < 3 {
        return Err(invalid("k_max", "must be at least 3"));
    }
    if k_max > d.n_rows() {
        return Err(invalid("k_max", "exceeds the row count"));
    }
    let space = report_space(d)?;
    (2..=k_max)
        .map(|k| {
            let m = kmedoids(&space.gower, k)?;
            let p = Partition::from_assignments(&m.labels, "kmedoids");
            Ok((k, calinski_harabasz(&space.embedding, &p)?))
        })
        .collect()
}

/// The `k` with the largest second difference `2S(k) − S(k−1) − S(k+1)` of
/// the score curve, taking `S(1) = 0`. Ties go to the smaller `k`.
pub fn elbow_from_curve(curve: &[(usize, f64)]) -> usize {
    let mut scores = vec![0.0];
    scores.extend(curve.iter().map(|c| c.1));
    let mut best = (2, f64::NEG_INFINITY);
    for k in 2..scores.len() {
        let v = 2.0 * scores[k - 1] - scores[k - 2] - scores[k];
        if v > best.1 {
            best = (k, v);
        }
    }
    best.0
}

pub fn elbow_k(d: &MixedDataset, k_max: usize) -> Result<usize> {
    Ok(elbow_from_curve(&elbow_curve(d, k_max)?))
}
