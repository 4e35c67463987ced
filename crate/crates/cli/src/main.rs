//! `mixclust`: generate, reduce, cluster and benchmark mixed-type data.

mod config;
mod pipeline;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use mixclust::validation::report_in;
use mixclust::ReductionMethod;

use config::{ConfigError, Input, Overrides, PipelineConfig};
use pipeline::{bench_one, create};

#[derive(Parser, Debug)]
#[command(name = "mixclust", version, about = "Clustering pipelines for mixed numerical and categorical data")]
struct Cli {
    /// INI file with [generate], [reduce], [cluster], [pretopo] and [evaluate] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Run benchmark algorithms concurrently.
    #[arg(long, global = true)]
    parallel: bool,
    /// CSV input instead of the generator.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Comma-separated columns to read as categorical.
    #[arg(long, global = true)]
    categorical: Option<String>,
    /// Use |Δ|/R as the numeric Gower term.
    #[arg(long, global = true)]
    gower_literal: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic dataset and its ground truth.
    Generate,
    /// Hopkins statistic and iVAT matrix for the raw numerics and every reduction method.
    Tendency(ReduceArgs),
    /// Project the data with one reduction method.
    Reduce(ReduceArgs),
    /// Run one clustering algorithm.
    Cluster(ClusterArgs),
    /// Run several algorithms and tabulate their validity indices.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    dims: Option<usize>,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[arg(long)]
    algorithm: Option<String>,
    /// Number of clusters or `elbow`.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    method: Option<String>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Comma-separated algorithm names.
    #[arg(long)]
    algorithms: Option<String>,
    #[arg(long)]
    k: Option<String>,
}

fn overrides(cli: &Cli) -> Overrides {
    let mut ov = Overrides {
        seed: cli.seed,
        output_dir: cli.output_dir.clone(),
        parallel: cli.parallel,
        input: cli.input.clone(),
        categorical: cli.categorical.clone(),
        gower_literal: cli.gower_literal,
        ..Overrides::default()
    };
    match &cli.command {
        Command::Generate => {}
        Command::Tendency(a) | Command::Reduce(a) => {
            ov.method = a.method.clone();
            ov.dims = a.dims;
        }
        Command::Cluster(a) => {
            ov.algorithm = a.algorithm.clone();
            ov.k = a.k.clone();
            ov.method = a.method.clone();
        }
        Command::Bench(a) => {
            ov.algorithms = a.algorithms.clone();
            ov.k = a.k.clone();
        }
    }
    ov
}

fn cmd_generate(cfg: &PipelineConfig) -> Result<()> {
    let Input::Generate(g) = &cfg.input else {
        return Err(ConfigError::new("input", "generate needs a [generate] section, not a csv path").into());
    };
    let l = mixclust::generate(g)?;
    let dir = &cfg.output_dir;
    let mut w = create(dir, "data.csv")?;
    l.data.write_csv(&mut w)?;
    w.flush()?;
    let mut w = csv::Writer::from_writer(create(dir, "truth.csv")?);
    w.write_record(["row_index", "label"])?;
    for (i, t) in l.truth.iter().enumerate() {
        w.write_record([i.to_string(), t.to_string()])?;
    }
    w.flush()?;
    println!(
        "generated {} rows ({} numeric, {} categorical) in {} clusters, std {}, seed {} -> {}",
        g.n_samples,
        g.n_numeric,
        g.n_categorical,
        g.k_clusters,
        g.cluster_std,
        g.rng_seed,
        dir.display()
    );
    Ok(())
}

fn cmd_tendency(cfg: &PipelineConfig) -> Result<()> {
    let p = pipeline::load(cfg)?;
    let dir = &cfg.output_dir;
    let mut w = csv::Writer::from_writer(create(dir, "tendency.csv")?);
    w.write_record(["method", "status", "hopkins", "message"])?;
    // raw standardized numerics first, as the baseline the projections are read against
    let methods = std::iter::once(ReductionMethod::Identity).chain(ReductionMethod::ALL);
    for method in methods {
        let result = pipeline::reduce(&p, method, &cfg.reduce, cfg.seed)
            .and_then(|e| pipeline::tendency_of(&e, cfg, dir));
        match result {
            Ok(h) => {
                println!("{method:<10} hopkins {h:.4}");
                w.write_record([method.name(), "ok", &format!("{h:.6}"), ""])?;
            }
            Err(e) => {
                warn!("{method}: {e:#}");
                println!("{method:<10} error: {e:#}");
                w.write_record([method.name(), "error", "-1.000000", &format!("{e:#}")])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_reduce(cfg: &PipelineConfig) -> Result<()> {
    let p = pipeline::load(cfg)?;
    let method = cfg.reduce.method.unwrap_or(ReductionMethod::Famd);
    let e = pipeline::reduce(&p, method, &cfg.reduce, cfg.seed)?;
    let name = format!("embedding_{method}.csv");
    let mut w = create(&cfg.output_dir, &name)?;
    e.write_csv(&mut w)?;
    w.flush()?;
    match e.explained_inertia() {
        Some(r) => println!("{method}: {} x {} (explained inertia {:.2}%)", e.n(), e.dim(), 100.0 * r),
        None => println!("{method}: {} x {}", e.n(), e.dim()),
    }
    Ok(())
}

fn cmd_cluster(cfg: &PipelineConfig) -> Result<()> {
    let p = pipeline::load(cfg)?;
    let name = cfg.cluster.algorithm.clone();
    let k = pipeline::resolve_k(&p, cfg, std::slice::from_ref(&name))?;
    let start = Instant::now();
    let c = pipeline::run_algorithm(&name, &p, k, cfg)?;
    info!("{name} finished in {:.3}s", start.elapsed().as_secs_f64());
    pipeline::write_outputs(&cfg.output_dir, &name, &c)?;
    println!(
        "{name}: {} clusters, {} outliers, sizes {:?}",
        c.partition.k(),
        c.partition.outlier_count(),
        c.partition.cluster_sizes()
    );
    if cfg.evaluate.enabled {
        let space = pipeline::evaluation_space(&p, cfg)?;
        let r = report_in(&space, &c.partition);
        println!(
            "CH {:.3}  Sil-FAMD {:.3}  Sil-Gower {:.3}  DB {:.3}",
            r.calinski_harabasz, r.silhouette_embedded, r.silhouette_gower, r.davies_bouldin
        );
        pipeline::write_report(&cfg.output_dir, &format!("report_{name}.csv"), &[(name.clone(), r)])?;
    }
    Ok(())
}

fn cmd_bench(cfg: &PipelineConfig) -> Result<()> {
    let p = pipeline::load(cfg)?;
    let algorithms = &cfg.cluster.algorithms;
    let space = pipeline::evaluation_space(&p, cfg)?;
    // a failed elbow only fails the algorithms that needed it
    let k = match pipeline::resolve_k(&p, cfg, algorithms) {
        Ok(k) => k,
        Err(e) => {
            warn!("k selection failed: {e:#}");
            None
        }
    };
    let d = &p;
    let rows: Vec<_> = if cfg.parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = algorithms
                .iter()
                .map(|a| {
                    let space = &space;
                    s.spawn(move || bench_one(a, d, k, cfg, space))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("bench worker")).collect()
        })
    } else {
        algorithms.iter().map(|a| bench_one(a, d, k, cfg, &space)).collect()
    };
    let path = pipeline::write_bench(&cfg.output_dir, &rows)?;
    for r in &rows {
        println!(
            "{:<16} {:<10} k={:<3} CH {:>10.3}  Sil-FAMD {:>6.3}  Sil-Gower {:>6.3}  DB {:>6.3}  outliers {:>5.1}%  {:.2}s",
            r.algorithm,
            r.status,
            r.report.k,
            r.report.calinski_harabasz,
            r.report.silhouette_embedded,
            r.report.silhouette_gower,
            r.report.davies_bouldin,
            100.0 * r.report.outlier_fraction,
            r.seconds
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = PipelineConfig::load(cli.config.as_deref(), &overrides(cli))?;
    match &cli.command {
        Command::Generate => cmd_generate(&cfg),
        Command::Tendency(_) => cmd_tendency(&cfg),
        Command::Reduce(_) => cmd_reduce(&cfg),
        Command::Cluster(_) => cmd_cluster(&cfg),
        Command::Bench(_) => cmd_bench(&cfg),
    }
    .context("pipeline failed")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<ConfigError>()) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
