//! Stages shared by the subcommands: load, reduce, cluster, evaluate.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use log::info;
use mixclust::baselines::{elbow_k, kamila, kmeans, kprototypes, phillip_ottaway_matrix};
use mixclust::dimred::{famd, laplacian_eigenmaps, pacmap, umap, Embedding, PacmapConfig, UmapConfig};
use mixclust::distance::{default_gamma, pairwise};
use mixclust::hdbscan::{denseclus, hdbscan, DenseClusConfig};
use mixclust::validation::{hopkins_mean, ivat, report_in, report_space, ReportSpace};
use mixclust::{
    generate, pretopomd, Column, FeatureKind, Hierarchy, Metric, MixedDataset, Partition, ReductionMethod,
    ValidationReport,
};

use crate::config::{ConfigError, Input, KChoice, PipelineConfig, ReduceConfig};

/// Model-ready data: complete rows, standardized numerics.
pub fn load(cfg: &PipelineConfig) -> Result<MixedDataset> {
    match &cfg.input {
        Input::Generate(g) => Ok(generate(g)?.data.standardize()),
        Input::Csv { path, categorical } => {
            let raw = read_csv(path, categorical)?;
            let data = raw.drop_missing_rows()?.prune_levels();
            let dropped = raw.n_rows() - data.n_rows();
            if dropped > 0 {
                info!("dropped {dropped} rows with missing values");
            }
            Ok(data.standardize())
        }
    }
}

/// Loads a csv, forcing the named columns to be categorical.
pub fn read_csv(path: &Path, categorical: &[String]) -> Result<MixedDataset> {
    let inferred = MixedDataset::load_csv(path, None).with_context(|| format!("reading {}", path.display()))?;
    if categorical.is_empty() {
        return Ok(inferred);
    }
    for name in categorical {
        if !inferred.columns().iter().any(|c| &c.name == name) {
            return Err(ConfigError::new("categorical", format!("no column named `{name}`")).into());
        }
    }
    let schema: Vec<Column> = inferred
        .columns()
        .iter()
        .map(|c| {
            let kind = if categorical.contains(&c.name) {
                FeatureKind::Categorical
            } else {
                c.kind
            };
            Column::new(c.name.clone(), kind)
        })
        .collect();
    Ok(MixedDataset::load_csv(path, Some(&schema))?)
}

pub fn reduce(d: &MixedDataset, method: ReductionMethod, rc: &ReduceConfig, seed: u64) -> Result<Embedding> {
    let e = match method {
        ReductionMethod::Famd => famd(d, rc.dims)?,
        ReductionMethod::Laplacian => {
            let t = match rc.t {
                Some(t) => t,
                None => {
                    let (gamma, _) = default_gamma(d);
                    let dist = pairwise(d, &Metric::Huang { gamma })?;
                    let n = dist.n() as f64;
                    dist.values().iter().sum::<f64>() / (n * (n - 1.0)).max(1.0)
                }
            };
            laplacian_eigenmaps(d, rc.dims, t)?
        }
        ReductionMethod::Umap => umap(
            d,
            &UmapConfig {
                dims: rc.dims,
                neighbors: rc.neighbors.unwrap_or(15),
                epochs: rc.epochs,
                seed,
            },
        )?,
        ReductionMethod::Pacmap => pacmap(
            d,
            &PacmapConfig {
                dims: rc.dims,
                neighbors: rc.neighbors.unwrap_or(10),
                seed,
                ..PacmapConfig::default()
            },
        )?,
        ReductionMethod::Identity => {
            d.require_complete()?;
            Embedding::new(d.n_rows(), d.n_numeric(), d.numeric_block().to_vec(), ReductionMethod::Identity)?
        }
    };
    Ok(e)
}

/// What one clustering run produced.
pub struct Clustered {
    pub partition: Partition,
    pub hierarchy: Option<Hierarchy>,
    pub condensed_tree: Option<String>,
}

impl Clustered {
    fn flat(partition: Partition) -> Self {
        Self {
            partition,
            hierarchy: None,
            condensed_tree: None,
        }
    }
}

pub fn needs_k(algorithm: &str) -> bool {
    matches!(algorithm, "kprototypes" | "kamila" | "phillip_ottaway" | "kmeans")
}

/// Resolves `k = elbow` once per dataset.
pub fn resolve_k(d: &MixedDataset, cfg: &PipelineConfig, algorithms: &[String]) -> Result<Option<usize>> {
    if !algorithms.iter().any(|a| needs_k(a)) {
        return Ok(None);
    }
    match cfg.cluster.k {
        KChoice::Fixed(k) => Ok(Some(k)),
        KChoice::Elbow => {
            let k = elbow_k(d, cfg.cluster.k_max)?;
            info!("elbow selected k = {k}");
            Ok(Some(k))
        }
    }
}

fn gower_metric(cfg: &PipelineConfig) -> Metric {
    if cfg.cluster.gower_literal {
        Metric::GowerLiteral
    } else {
        Metric::Gower
    }
}

fn pretopo_on(e: &Embedding, name: &str, cfg: &PipelineConfig) -> Result<Clustered> {
    let data = MixedDataset::from_numeric(e.n(), e.dim(), e.coords())?;
    let res = pretopomd(&data, &cfg.pretopo)?;
    let mut partition = Partition::new(res.partition.labels().to_vec(), name);
    for (key, value) in res.partition.params() {
        partition = partition.with_param(key.clone(), value);
    }
    Ok(Clustered {
        partition,
        hierarchy: Some(res.hierarchy),
        condensed_tree: None,
    })
}

pub fn run_algorithm(name: &str, d: &MixedDataset, k: Option<usize>, cfg: &PipelineConfig) -> Result<Clustered> {
    let seed = cfg.seed;
    let k = || k.context("this algorithm needs k");
    let gamma = || cfg.cluster.gamma.unwrap_or_else(|| default_gamma(d).0);
    let method = |default| cfg.reduce.method.unwrap_or(default);
    Ok(match name {
        "kprototypes" => Clustered::flat(kprototypes(d, k()?, gamma(), seed)?),
        "kamila" => Clustered::flat(kamila(d, k()?, cfg.cluster.runs, seed)?),
        "phillip_ottaway" => {
            let dist = pairwise(d, &gower_metric(cfg))?;
            let (p, h) = phillip_ottaway_matrix(&dist, k()?)?;
            Clustered {
                partition: p,
                hierarchy: Some(h),
                condensed_tree: None,
            }
        }
        "pretopomd" => {
            let res = pretopomd(d, &cfg.pretopo)?;
            Clustered {
                partition: res.partition,
                hierarchy: Some(res.hierarchy),
                condensed_tree: None,
            }
        }
        "pretopo_famd" => pretopo_on(&reduce(d, ReductionMethod::Famd, &cfg.reduce, seed)?, name, cfg)?,
        "pretopo_umap" => pretopo_on(&reduce(d, ReductionMethod::Umap, &cfg.reduce, seed)?, name, cfg)?,
        "pretopo_pacmap" => pretopo_on(&reduce(d, ReductionMethod::Pacmap, &cfg.reduce, seed)?, name, cfg)?,
        "denseclus" => Clustered::flat(denseclus(
            d,
            &DenseClusConfig {
                min_cluster_size: cfg.cluster.min_cluster_size,
                min_samples: cfg.cluster.min_samples,
                seed,
                ..DenseClusConfig::default()
            },
        )?),
        "hdbscan" => {
            let dist = pairwise(d, &Metric::Huang { gamma: gamma() })?;
            let res = hdbscan(&dist, cfg.cluster.min_cluster_size, cfg.cluster.min_samples)?;
            Clustered {
                condensed_tree: Some(res.tree.to_json()),
                partition: res.partition,
                hierarchy: None,
            }
        }
        "kmeans" => {
            let e = reduce(d, method(ReductionMethod::Famd), &cfg.reduce, seed)?;
            Clustered::flat(kmeans(&e, k()?, seed)?)
        }
        other => bail!(ConfigError::new("cluster.algorithm", format!("unknown algorithm `{other}`"))),
    })
}

/// FAMD coordinates and the Gower matrix used for every report.
pub fn evaluation_space(d: &MixedDataset, cfg: &PipelineConfig) -> Result<ReportSpace> {
    let mut space = report_space(d)?;
    if cfg.cluster.gower_literal {
        space.gower = pairwise(d, &Metric::GowerLiteral)?;
    }
    Ok(space)
}

pub fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let mut w = create(dir, name)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(dir.join(name))
}

pub fn write_report(dir: &Path, name: &str, rows: &[(String, ValidationReport)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(dir, name)?);
    w.write_record(ValidationReport::CSV_HEADER)?;
    for (alg, r) in rows {
        w.write_record(r.csv_row(alg))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_outputs(dir: &Path, name: &str, c: &Clustered) -> Result<()> {
    let mut w = create(dir, &format!("labels_{name}.csv"))?;
    c.partition.write_csv(&mut w)?;
    w.flush()?;
    if let Some(h) = &c.hierarchy {
        write_text(dir, &format!("hierarchy_{name}.json"), &h.to_json())?;
        write_text(dir, &format!("hierarchy_{name}.txt"), &h.to_text())?;
    }
    if let Some(t) = &c.condensed_tree {
        write_text(dir, &format!("condensed_tree_{name}.json"), t)?;
    }
    Ok(())
}

/// One row of the benchmark table.
pub struct BenchRow {
    pub algorithm: String,
    pub report: ValidationReport,
    pub status: &'static str,
    pub seconds: f64,
    pub message: String,
}

fn panic_message(e: Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panic".into())
}

/// Runs one algorithm with failures caught. Only the clustering call is timed.
pub fn bench_one(name: &str, d: &MixedDataset, k: Option<usize>, cfg: &PipelineConfig, space: &ReportSpace) -> BenchRow {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(|| run_algorithm(name, d, k, cfg)));
    let seconds = start.elapsed().as_secs_f64();
    let failure = |message: String| {
        let p = Partition::new(vec![None; d.n_rows()], name);
        BenchRow {
            algorithm: name.to_owned(),
            report: ValidationReport::degenerate(&p, message.clone()),
            status: "error",
            seconds,
            message,
        }
    };
    match result {
        Ok(Ok(c)) => {
            let report = report_in(space, &c.partition);
            let (status, message) = match &report.degenerate {
                Some(reason) => ("degenerate", reason.clone()),
                None => ("ok", String::new()),
            };
            BenchRow {
                algorithm: name.to_owned(),
                report,
                status,
                seconds,
                message,
            }
        }
        Ok(Err(e)) => failure(format!("{e:#}")),
        Err(p) => failure(format!("panicked: {}", panic_message(p))),
    }
}

pub const BENCH_HEADER: [&str; 10] = [
    "algorithm",
    "status",
    "CH",
    "sil_famd",
    "sil_gower",
    "DB",
    "outlier_fraction",
    "k",
    "wall_time_s",
    "message",
];

pub fn write_bench(dir: &Path, rows: &[BenchRow]) -> Result<PathBuf> {
    let name = "bench.csv";
    let mut w = csv::Writer::from_writer(create(dir, name)?);
    w.write_record(BENCH_HEADER)?;
    for r in rows {
        let cells = r.report.csv_row(&r.algorithm);
        w.write_record([
            cells[0].as_str(),
            r.status,
            &cells[1],
            &cells[2],
            &cells[3],
            &cells[4],
            &cells[5],
            &cells[6],
            &format!("{:.6}", r.seconds),
            &r.message,
        ])?;
    }
    w.flush()?;
    Ok(dir.join(name))
}

/// Hopkins statistic and iVAT matrix of one embedding.
pub fn tendency_of(e: &Embedding, cfg: &PipelineConfig, dir: &Path) -> Result<f64> {
    let h = hopkins_mean(e, cfg.evaluate.hopkins_fraction, cfg.seed, cfg.evaluate.hopkins_runs)?;
    let iv = ivat(&e.distance_matrix())?;
    let mut w = create(dir, &format!("ivat_{}.csv", e.method()))?;
    iv.matrix.write_csv(&mut w)?;
    w.flush()?;
    let mut w = csv::Writer::from_writer(create(dir, &format!("ivat_order_{}.csv", e.method()))?);
    w.write_record(["position", "row_index"])?;
    for (pos, row) in iv.order.iter().enumerate() {
        w.write_record([pos.to_string(), row.to_string()])?;
    }
    w.flush()?;
    Ok(h)
}
