//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use mixclust::baselines::{elbow_k, kamila, kmeans, kprototypes};
use mixclust::dimred::{
    famd, generalized_laplacian_eigen, heat_kernel,
    pacmap::{self as pm, PairKind},
    umap::{self as um},
    ReductionMethod, UmapConfig,
};
use mixclust::distance::{default_gamma, pairwise};
use mixclust::hdbscan::{denseclus, mst, select_stable, DenseClusConfig};
use mixclust::pretopo::{pretopomd, PretopoConfig, PretopoSpace, WeightedGraph};
use mixclust::validation::{
    calinski_harabasz, davies_bouldin, hopkins, hopkins_mean, report, report_space, silhouette,
    silhouette_from_matrix, SENTINEL,
};
use mixclust::{DistanceMatrix, Embedding, Metric, MixedDataset, Partition};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn run(id: usize, name: &str, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(check));
    let secs = start.elapsed().as_secs_f64();
    let (pass, detail) = match result {
        Ok(o) => (o.pass, o.detail),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            (false, format!("panicked: {msg}"))
        }
    };
    let verdict = if pass { "PASS" } else { "FAIL" };
    // written to the raw handle so the line shows without --nocapture
    let _ = writeln!(
        std::io::stderr(),
        "criterion {id:>2} {verdict} {name} [{secs:.1}s] {detail}"
    );
    pass
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

fn random_space(rng: &mut ChaCha8Rng) -> PretopoSpace {
    let n = rng.random_range(3..=15);
    let count = rng.random_range(1..=3);
    let graphs = (0..count)
        .map(|g| {
            let mut edges = vec![Vec::new(); n];
            for (x, row) in edges.iter_mut().enumerate() {
                for y in 0..n {
                    if y != x && rng.random_bool(0.4) {
                        row.push((y, rng.random_range(0.01..1.0)));
                    }
                }
            }
            WeightedGraph::new(format!("g{g}"), edges).unwrap()
        })
        .collect();
    let thresholds = (0..count).map(|_| rng.random_range(0.05..2.0)).collect();
    let clauses = rng.random_range(1..=2);
    let dnf = (0..clauses)
        .map(|_| {
            let mut c: Vec<usize> = (0..count).filter(|_| rng.random_bool(0.6)).collect();
            if c.is_empty() {
                c.push(rng.random_range(0..count));
            }
            c
        })
        .collect();
    PretopoSpace::new(graphs, thresholds, dnf).unwrap()
}

fn subset(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).filter(|_| rng.random_bool(p)).collect()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut violations = 0;
    let mut checks = 0;
    for _ in 0..500 {
        let s = random_space(&mut rng);
        let n = s.n();
        violations += !s.pseudoclosure(&[]).is_empty() as usize;
        for _ in 0..10 {
            let a = subset(n, 0.3, &mut rng);
            let mut b: Vec<usize> = a.iter().copied().chain(subset(n, 0.3, &mut rng)).collect();
            b.sort();
            b.dedup();
            let pa = s.pseudoclosure(&a);
            violations += !is_subset(&a, &pa) as usize;
            violations += !is_subset(&pa, &s.pseudoclosure(&b)) as usize;
            checks += 2;
        }
    }
    outcome(violations == 0, format!("{violations} violations in {checks} checks over 500 spaces"))
}

/// Every labeled tree on `n` nodes from its Prüfer sequence.
fn for_each_spanning_tree(n: usize, mut visit: impl FnMut(&[(usize, usize)])) {
    if n == 2 {
        visit(&[(0, 1)]);
        return;
    }
    let len = n - 2;
    let mut code = vec![0usize; len];
    loop {
        let mut degree = vec![1usize; n];
        for &c in &code {
            degree[c] += 1;
        }
        let mut edges = Vec::with_capacity(n - 1);
        for &c in &code {
            let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
            edges.push((leaf, c));
            degree[leaf] -= 1;
            degree[c] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
        edges.push((rest[0], rest[1]));
        visit(&edges);
        let mut i = 0;
        while i < len {
            code[i] += 1;
            if code[i] < n {
                break;
            }
            code[i] = 0;
            i += 1;
        }
        if i == len {
            break;
        }
    }
}

fn sorted_sum(mut w: Vec<f64>) -> f64 {
    w.sort_by(f64::total_cmp);
    w.iter().sum()
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.random_range(2..=7);
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let w = rng.random_range(0.0..10.0);
                v[i * n + j] = w;
                v[j * n + i] = w;
            }
        }
        let m = DistanceMatrix::from_values(n, v.clone(), Metric::Euclid2).unwrap();
        let prim = sorted_sum(mst(&m).unwrap().iter().map(|e| e.weight).collect());
        let mut best = f64::INFINITY;
        for_each_spanning_tree(n, |edges| {
            best = best.min(sorted_sum(edges.iter().map(|&(a, b)| v[a * n + b]).collect()));
        });
        mismatches += (prim != best) as usize;
    }
    outcome(mismatches == 0, format!("{mismatches}/200 graphs differ from enumeration"))
}

fn random_tree(rng: &mut ChaCha8Rng) -> (Vec<Option<usize>>, Vec<f64>) {
    let mut parents = vec![None];
    let mut leaves = vec![0];
    let target = rng.random_range(1..=12);
    while parents.len() + 2 <= target {
        let pick = leaves.swap_remove(rng.random_range(0..leaves.len()));
        for _ in 0..2 {
            leaves.push(parents.len());
            parents.push(Some(pick));
        }
    }
    let stability = (0..parents.len()).map(|_| rng.random_range(0.0..5.0)).collect();
    (parents, stability)
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for _ in 0..100 {
        let (parents, stability) = random_tree(&mut rng);
        let (_, want) = common::brute_force_antichain(&parents, &stability);
        mismatches += (select_stable(&parents, &stability) != want) as usize;
    }
    outcome(mismatches == 0, format!("{mismatches}/100 trees differ from exhaustive search"))
}

fn embed(dim: usize, rows: &[Vec<f64>]) -> Embedding {
    let coords: Vec<f64> = rows.iter().flatten().copied().collect();
    Embedding::new(rows.len(), dim, coords, ReductionMethod::Identity).unwrap()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let uniform: Vec<Vec<f64>> = (0..500).map(|_| vec![rng.random(), rng.random()]).collect();
    let h_uniform = hopkins_mean(&embed(2, &uniform), 0.05, 0, 50).unwrap();
    let centers = [[0.0, 0.0], [5.0, 0.0], [2.5, 4.0]];
    let blobs: Vec<Vec<f64>> = (0..300)
        .map(|i| {
            let c = centers[i % 3];
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            vec![c[0] + 0.01 * dx, c[1] + 0.01 * dy]
        })
        .collect();
    let h_blobs = hopkins(&embed(2, &blobs), 0.05, 0).unwrap();
    outcome(
        (0.4..=0.6).contains(&h_uniform) && h_blobs >= 0.85,
        format!("uniform mean H {h_uniform:.3}, blobs H {h_blobs:.3}"),
    )
}

fn criterion_5() -> Outcome {
    let inertia = famd(&common::penguins_inferred(), 2)
        .unwrap()
        .explained_inertia()
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, p) = (50, 4);
    let values: Vec<f64> = (0..n * p).map(|i| rng.random::<f64>() * (1 + i % p) as f64).collect();
    let e = famd(&MixedDataset::from_numeric(n, p, &values).unwrap(), 2).unwrap();
    let oracle = common::pca_scores(n, p, &values, 2);
    let mut worst = 0.0f64;
    for c in 0..2 {
        let sign = if e.row(0)[c] * oracle[(0, c)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            worst = worst.max((e.row(i)[c] - sign * oracle[(i, c)]).abs());
        }
    }
    outcome(
        (inertia - 0.614).abs() <= 0.03 && worst < 1e-8,
        format!("Penguins inertia {:.2}%, PCA deviation {worst:.1e}", 100.0 * inertia),
    )
}

fn criterion_6() -> Outcome {
    let d = common::random_mixed(40, 3, 2, 3, 6);
    let (gamma, _) = default_gamma(&d);
    let dist = pairwise(&d, &Metric::Huang { gamma }).unwrap();
    let t = dist.values().iter().sum::<f64>() / (40.0 * 39.0);
    let w = heat_kernel(&dist, t);
    let (values, f) = generalized_laplacian_eigen(&w).unwrap();
    let deg = DVector::from_iterator(40, (0..40).map(|j| w.column(j).sum()));
    let l = DMatrix::from_diagonal(&deg) - &w;
    let mut residual = 0.0f64;
    for c in 0..values.len() {
        let col = f.column(c);
        let r = &l * col - DVector::from_iterator(40, (0..40).map(|i| values[c] * deg[i] * col[i]));
        residual = residual.max(r.amax());
    }
    outcome(
        residual < 1e-8 && values[0].abs() < 1e-10,
        format!("max residual {residual:.1e}, smallest eigenvalue {:.1e}", values[0]),
    )
}

fn criterion_7() -> Outcome {
    let picks: Vec<usize> = (0..10)
        .map(|seed| elbow_k(&common::base_case(seed, 0.1).data.standardize(), 10).unwrap())
        .collect();
    let hits = picks.iter().filter(|&&k| k == 3).count();
    let penguins = elbow_k(&common::penguins_categorical_year().standardize(), 10).unwrap();
    outcome(
        hits >= 8 && penguins == 2,
        format!("base case picks {picks:?} ({hits}/10 at k=3), Penguins k={penguins}"),
    )
}

fn criterion_8() -> Outcome {
    let g = common::base_case(0, 0.001);
    let d = g.data.standardize();
    let (gamma, _) = default_gamma(&d);
    let runs: Vec<(&str, Box<dyn Fn() -> Partition>)> = vec![
        ("k-prototypes", Box::new(|| kprototypes(&d, 3, gamma, 0).unwrap())),
        ("KAMILA", Box::new(|| kamila(&d, 3, 10, 0).unwrap())),
        ("PretopoMD", Box::new(|| pretopomd(&d, &PretopoConfig::default()).unwrap().partition)),
        ("DenseClus", Box::new(|| denseclus(&d, &DenseClusConfig::default()).unwrap())),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, f) in runs {
        let (p, took) = timed(f);
        let ari = common::ari(&p, &g.truth);
        let ok = ari == 1.0 && p.outlier_fraction() <= 0.05 && took.as_secs_f64() < 10.0;
        pass &= ok;
        parts.push(format!(
            "{name} ARI {ari:.3} outliers {:.1}% {:.2}s",
            100.0 * p.outlier_fraction(),
            took.as_secs_f64()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let mut ch = Vec::new();
    let mut db = Vec::new();
    for seed in 0..10 {
        let g = common::base_case(seed, 0.1);
        let r = report(&g.data.standardize(), &Partition::from_assignments(&g.truth, "truth"));
        ch.push(r.calinski_harabasz);
        db.push(r.davies_bouldin);
    }
    let (ch, db) = (common::median(ch), common::median(db));
    let d = common::penguins_categorical_year().standardize();
    let (gamma, _) = default_gamma(&d);
    let p = kprototypes(&d, 2, gamma, 0).unwrap();
    let r = report(&d, &p);
    let base_ok = (ch / 296.33 - 1.0).abs() <= 0.25 && (db / 1.071 - 1.0).abs() <= 0.25;
    let penguins_ok = (150.0..=200.0).contains(&r.calinski_harabasz)
        && (0.35..=0.55).contains(&r.silhouette_gower)
        && (1.0..=1.5).contains(&r.davies_bouldin);
    outcome(
        base_ok && penguins_ok,
        format!(
            "base case median CH {ch:.2} DB {db:.3}; Penguins k-prototypes CH {:.2} Sil-Gower {:.3} DB {:.3}",
            r.calinski_harabasz, r.silhouette_gower, r.davies_bouldin
        ),
    )
}

fn criterion_10() -> Outcome {
    let d = common::penguins_categorical_year().standardize();
    let f = famd(&d, 2).unwrap();
    let mut db_u = Vec::new();
    let mut db_f = Vec::new();
    for seed in 0..5 {
        let u = mixclust::dimred::umap(&d, &UmapConfig { seed, ..UmapConfig::default() }).unwrap();
        db_u.push(davies_bouldin(&u, &kmeans(&u, 4, seed).unwrap()).unwrap());
        db_f.push(davies_bouldin(&f, &kmeans(&f, 4, seed).unwrap()).unwrap());
    }
    let (u, f) = (common::median(db_u), common::median(db_f));
    outcome(u < f, format!("median DB UMAP {u:.3} FAMD {f:.3}"))
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(4..=10);
        let k = rng.random_range(2..=3.min(n - 1));
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>() * 3.0, rng.random(), rng.random()]).collect();
        let mut ls: Vec<usize> = (0..n).map(|i| i % k).collect();
        for i in (1..n).rev() {
            ls.swap(i, rng.random_range(0..=i));
        }
        let opt: Vec<Option<usize>> = ls.iter().map(|&l| Some(l)).collect();
        let e = embed(3, &rows);
        let p = Partition::from_assignments(&ls, "random");
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        worst = worst
            .max(rel(calinski_harabasz(&e, &p).unwrap(), common::ch_oracle(&rows, &opt)))
            .max(rel(silhouette(&e, &p).unwrap(), common::silhouette_oracle(&rows, &opt)))
            .max(rel(
                silhouette_from_matrix(&e.distance_matrix(), &p).unwrap(),
                common::silhouette_oracle(&rows, &opt),
            ))
            .max(rel(davies_bouldin(&e, &p).unwrap(), common::db_oracle(&rows, &opt)));
    }
    outcome(worst <= 1e-9, format!("largest deviation {worst:.1e}"))
}

fn criterion_12() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut point = |m: usize| -> Vec<f64> { (0..m).map(|_| rng.random_range(-2.0..2.0)).collect() };
    let mut worst_u = 0.0f64;
    let mut worst_p = 0.0f64;
    for i in 0..20 {
        let (ya, yb) = (point(2), point(2));
        let neighbor = i % 2 == 0;
        let g = um::pair_gradient(&ya, &yb, neighbor);
        let fd = common::finite_difference(|y| um::pair_loss(y, &yb, neighbor), &ya, 1e-6);
        worst_u = worst_u.max(common::max_relative_error(&g, &fd));
        let kind = [PairKind::Neighbor, PairKind::MidNear, PairKind::Further][i % 3];
        let g = pm::pair_gradient(&ya, &yb, kind);
        let fd = common::finite_difference(|y| pm::pair_loss(y, &yb, kind), &ya, 1e-6);
        worst_p = worst_p.max(common::max_relative_error(&g, &fd));
    }
    outcome(
        worst_u < 1e-5 && worst_p < 1e-5,
        format!("max relative error UMAP {worst_u:.1e} PaCMAP {worst_p:.1e}"),
    )
}

fn criterion_13() -> Outcome {
    let d = common::penguins_categorical_year().standardize();
    let n = d.n_rows();
    let space = report_space(&d).unwrap();
    let mut ok = true;
    for p in [
        Partition::from_assignments(&vec![0; n], "single"),
        Partition::new(vec![None; n], "outliers"),
    ] {
        for r in [report(&d, &p), mixclust::validation::report_in(&space, &p)] {
            ok &= r.is_degenerate()
                && [r.calinski_harabasz, r.silhouette_embedded, r.silhouette_gower, r.davies_bouldin]
                    .iter()
                    .all(|&v| v == SENTINEL);
        }
    }
    outcome(ok, "single-cluster and all-outlier partitions")
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("pretopology axioms", criterion_1),
        ("MST oracle", criterion_2),
        ("HDBSCAN extraction", criterion_3),
        ("Hopkins calibration", criterion_4),
        ("FAMD", criterion_5),
        ("Laplacian eigenmaps", criterion_6),
        ("elbow", criterion_7),
        ("recovery", criterion_8),
        ("benchmark bands", criterion_9),
        ("dimensionality-reduction comparison", criterion_10),
        ("index oracles", criterion_11),
        ("gradient checks", criterion_12),
        ("degenerate convention", criterion_13),
    ];
    let failed: Vec<usize> = criteria
        .into_iter()
        .enumerate()
        .filter_map(|(i, (name, f))| (!run(i + 1, name, f)).then_some(i + 1))
        .collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
