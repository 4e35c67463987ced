mod common;

use mixclust::dimred::ReductionMethod;
use mixclust::validation::{
    calinski_harabasz, davies_bouldin, hopkins, hopkins_mean, ivat, report, report_in, report_space,
    silhouette, silhouette_from_matrix, CH_CAP, SENTINEL,
};
use mixclust::{DistanceMatrix, Embedding, Metric, Partition};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn embed(dim: usize, rows: &[Vec<f64>]) -> Embedding {
    let coords: Vec<f64> = rows.iter().flatten().copied().collect();
    Embedding::new(rows.len(), dim, coords, ReductionMethod::Identity).unwrap()
}

fn labels(ls: &[usize]) -> Partition {
    Partition::from_assignments(ls, "test")
}

fn uniform(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect()
}

fn blobs(centers: &[[f64; 2]], per: usize, std: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for (c, ctr) in centers.iter().enumerate() {
        for _ in 0..per {
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            rows.push(vec![ctr[0] + std * dx, ctr[1] + std * dy]);
            truth.push(c);
        }
    }
    (rows, truth)
}

#[test]
fn hopkins_on_uniform_points_is_near_half() {
    let e = embed(2, &uniform(500, 2, 11));
    let h = hopkins_mean(&e, 0.05, 0, 50).unwrap();
    assert!((0.4..=0.6).contains(&h), "H {h}");
}

#[test]
fn hopkins_on_a_fresh_uniform_reference_is_near_half() {
    // the probes are themselves uniform in the box, so a uniform sample
    // plays both roles
    let e = embed(3, &uniform(2000, 3, 5));
    let h = hopkins_mean(&e, 0.05, 3, 20).unwrap();
    assert!((h - 0.5).abs() <= 0.1, "H {h}");
}

#[test]
fn hopkins_on_tight_blobs_is_high() {
    let (rows, _) = blobs(&[[0.0, 0.0], [5.0, 0.0], [2.5, 4.0]], 100, 0.01, 1);
    let h = hopkins(&embed(2, &rows), 0.05, 0).unwrap();
    assert!(h > 0.85, "H {h}");
}

#[test]
fn hopkins_rejects_small_and_flat_inputs() {
    assert!(hopkins(&embed(2, &uniform(10, 2, 0)), 0.05, 0).is_err());
    let flat: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, 1.0]).collect();
    assert!(hopkins(&embed(2, &flat), 0.05, 0).is_err());
}

#[test]
fn ivat_separates_two_far_blobs() {
    let (rows, truth) = blobs(&[[0.0, 0.0], [10.0, 10.0]], 15, 0.5, 4);
    let e = embed(2, &rows);
    let d = e.distance_matrix();
    let iv = ivat(&d).unwrap();
    let n = rows.len();
    let (mut within, mut nw, mut between, mut nb) = (0.0, 0.0, 0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let v = iv.matrix.get(a, b);
            if truth[iv.order[a]] == truth[iv.order[b]] {
                within += v;
                nw += 1.0;
            } else {
                between += v;
                nb += 1.0;
            }
        }
    }
    assert!(within / nw < 0.2 * (between / nb));
}

#[test]
fn calinski_harabasz_hand_case() {
    // centroids (1,0) and (11,0), grand mean (6,0): tr B = 150, tr W = 4
    let rows = [[0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [10.0, 0.0], [12.0, 0.0], [11.0, 0.0]];
    let e = embed(2, &rows.map(|r| r.to_vec()));
    let p = labels(&[0, 0, 0, 1, 1, 1]);
    assert!((calinski_harabasz(&e, &p).unwrap() - 150.0).abs() < 1e-12);
    // s = 2/3 per cluster, centroid gap 10
    assert!((davies_bouldin(&e, &p).unwrap() - 2.0 / 15.0).abs() < 1e-12);
}

#[test]
fn silhouette_hand_case() {
    let e = embed(1, &[vec![0.0], vec![1.0], vec![4.0], vec![6.0]]);
    let p = labels(&[0, 0, 1, 1]);
    let expect = (0.8 + 0.75 + 3.0 / 7.0 + 7.0 / 11.0) / 4.0;
    assert!((silhouette(&e, &p).unwrap() - expect).abs() < 1e-12);
    let m = e.distance_matrix();
    assert!((silhouette_from_matrix(&m, &p).unwrap() - expect).abs() < 1e-12);
}

#[test]
fn indices_match_oracles_on_small_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let n = rng.random_range(4..=10);
        let k = rng.random_range(2..=3.min(n - 1));
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>() * 4.0, rng.random::<f64>()]).collect();
        let mut ls: Vec<usize> = (0..n).map(|i| i % k).collect();
        for i in (1..n).rev() {
            ls.swap(i, rng.random_range(0..=i));
        }
        let opt: Vec<Option<usize>> = ls.iter().map(|&l| Some(l)).collect();
        let e = embed(2, &rows);
        let p = labels(&ls);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
        assert!(close(calinski_harabasz(&e, &p).unwrap(), common::ch_oracle(&rows, &opt)));
        assert!(close(silhouette(&e, &p).unwrap(), common::silhouette_oracle(&rows, &opt)));
        assert!(close(davies_bouldin(&e, &p).unwrap(), common::db_oracle(&rows, &opt)));
    }
}

#[test]
fn outliers_are_excluded_from_indices() {
    let rows: Vec<Vec<f64>> = [[0.0, 0.0], [1.0, 0.0], [9.0, 9.0], [10.0, 0.0], [11.0, 1.0], [50.0, -7.0]]
        .iter()
        .map(|r| r.to_vec())
        .collect();
    let ls = vec![Some(0), Some(0), None, Some(1), Some(1), None];
    let p = Partition::new(ls.clone(), "test");
    let e = embed(2, &rows);
    let kept: Vec<Vec<f64>> = vec![rows[0].clone(), rows[1].clone(), rows[3].clone(), rows[4].clone()];
    let kl = vec![Some(0), Some(0), Some(1), Some(1)];
    assert!((calinski_harabasz(&e, &p).unwrap() - common::ch_oracle(&kept, &kl)).abs() < 1e-9);
    assert!((silhouette(&e, &p).unwrap() - common::silhouette_oracle(&kept, &kl)).abs() < 1e-12);
}

#[test]
fn tight_far_blobs_have_high_silhouette() {
    let (rows, truth) = blobs(&[[0.0, 0.0], [20.0, 0.0]], 25, 0.1, 8);
    assert!(silhouette(&embed(2, &rows), &labels(&truth)).unwrap() > 0.9);
}

#[test]
fn calinski_harabasz_grows_with_spacing() {
    let (base, truth) = blobs(&[[0.0, 0.0], [0.0, 0.0]], 20, 1.0, 3);
    let mut prev = f64::NEG_INFINITY;
    for gap in [1.0, 2.0, 4.0, 8.0, 16.0] {
        let rows: Vec<Vec<f64>> = base
            .iter()
            .zip(&truth)
            .map(|(r, &t)| vec![r[0] + gap * t as f64, r[1]])
            .collect();
        let ch = calinski_harabasz(&embed(2, &rows), &labels(&truth)).unwrap();
        assert!(ch > prev, "gap {gap}: {ch} after {prev}");
        prev = ch;
    }
}

#[test]
fn duplicated_points_have_zero_silhouette() {
    let rows = vec![vec![3.0, 3.0]; 8];
    let m = DistanceMatrix::euclidean(8, 2, &rows.concat(), Metric::Euclid2);
    let p = labels(&[0, 1, 0, 1, 2, 2, 0, 1]);
    assert_eq!(silhouette_from_matrix(&m, &p).unwrap(), 0.0);
}

#[test]
fn point_masses_give_zero_db_and_capped_ch() {
    let rows: Vec<Vec<f64>> = (0..10).map(|i| if i < 5 { vec![0.0, 0.0] } else { vec![3.0, 4.0] }).collect();
    let e = embed(2, &rows);
    let p = labels(&[0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
    assert_eq!(davies_bouldin(&e, &p).unwrap(), 0.0);
    assert_eq!(calinski_harabasz(&e, &p).unwrap(), CH_CAP);
}

#[test]
fn coincident_centroids_are_an_error_for_db() {
    let e = embed(1, &[vec![-1.0], vec![1.0], vec![-2.0], vec![2.0]]);
    assert!(davies_bouldin(&e, &labels(&[0, 0, 1, 1])).is_err());
}

#[test]
fn degenerate_partitions_get_the_sentinel() {
    let g = common::base_case(0, 0.1);
    let d = g.data.standardize();
    for p in [
        Partition::from_assignments(&vec![0; d.n_rows()], "one"),
        Partition::new(vec![None; d.n_rows()], "none"),
    ] {
        let r = report(&d, &p);
        assert!(r.is_degenerate());
        for v in [r.calinski_harabasz, r.silhouette_embedded, r.silhouette_gower, r.davies_bouldin] {
            assert_eq!(v, SENTINEL);
        }
    }
    let r = report(&d, &Partition::new(vec![None; d.n_rows()], "none"));
    assert_eq!(r.outlier_fraction, 1.0);
    assert_eq!(r.degenerate.as_deref(), Some("all points are outliers"));
}

#[test]
fn true_labels_of_the_base_case_score_near_published_values() {
    let mut ch = Vec::new();
    let mut db = Vec::new();
    for seed in 0..10 {
        let g = common::base_case(seed, 0.1);
        let r = report(&g.data.standardize(), &labels(&g.truth));
        ch.push(r.calinski_harabasz);
        db.push(r.davies_bouldin);
    }
    let (ch, db) = (common::median(ch), common::median(db));
    assert!((ch / 296.33 - 1.0).abs() <= 0.25, "CH median {ch}");
    assert!((db / 1.071 - 1.0).abs() <= 0.25, "DB median {db}");
}

#[test]
fn report_is_deterministic_and_reuses_space() {
    let g = common::base_case(2, 0.1);
    let d = g.data.standardize();
    let p = labels(&g.truth);
    let a = report(&d, &p);
    assert_eq!(a, report(&d, &p));
    assert_eq!(a, report_in(&report_space(&d).unwrap(), &p));
    assert_eq!(a.csv_row("truth").len(), 7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hopkins_is_a_fraction(seed in any::<u64>(), n in 20usize..120, dim in 1usize..4) {
        let e = embed(dim, &uniform(n, dim, seed));
        let h = hopkins(&e, 0.1, seed).unwrap();
        prop_assert!((0.0..=1.0).contains(&h));
    }

    #[test]
    fn ivat_is_a_reordered_minimax_transform(seed in any::<u64>(), n in 2usize..=30) {
        let rows = uniform(n, 2, seed);
        let d = embed(2, &rows).distance_matrix();
        let iv = ivat(&d).unwrap();
        let mut seen = iv.order.clone();
        seen.sort();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        let oracle = common::minimax_oracle(n, d.values());
        for a in 0..n {
            prop_assert_eq!(iv.matrix.get(a, a), 0.0);
            for b in 0..n {
                let want = oracle[iv.order[a] * n + iv.order[b]];
                prop_assert!((iv.matrix.get(a, b) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn silhouette_stays_in_range_and_db_non_negative(seed in any::<u64>(), k in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 30;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let ls: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
        let e = embed(2, &rows);
        let p = labels(&ls);
        let s = silhouette(&e, &p).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s));
        prop_assert!(davies_bouldin(&e, &p).unwrap() >= 0.0);
        let g = silhouette_from_matrix(&e.distance_matrix(), &p).unwrap();
        prop_assert!((-1.0..=1.0).contains(&g));
    }
}
