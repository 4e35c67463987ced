//! Pipeline configuration: a flat INI file whose values command-line flags
//! override.
//!
//! ```ini
//! input = penguins.csv          ; or a [generate] section, never both
//! categorical = year
//! seed = 7
//!
//! [reduce]
//! method = umap
//! dims = 2
//!
//! [cluster]
//! algorithm = kprototypes
//! algorithms = kprototypes, kamila, pretopomd
//! k = elbow
//!
//! [pretopo]
//! knn = 10
//! dnf = [[num],[cat]]
//!
//! [evaluate]
//! enabled = true
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use mixclust::dimred::ReductionMethod;
use mixclust::pretopo::parse_dnf;
use mixclust::{GeneratorConfig, PretopoConfig};

/// A configuration value that cannot be used. Reported with exit code 2.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config field `{}`: {}", self.field, self.reason)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

pub const ALGORITHMS: [&str; 10] = [
    "kprototypes",
    "kamila",
    "phillip_ottaway",
    "pretopomd",
    "pretopo_famd",
    "pretopo_umap",
    "pretopo_pacmap",
    "denseclus",
    "hdbscan",
    "kmeans",
];

/// Algorithms run by `bench` when none are configured.
pub const DEFAULT_SUITE: [&str; 5] = ["kprototypes", "kamila", "phillip_ottaway", "pretopomd", "denseclus"];

#[derive(Clone, Debug, PartialEq)]
pub enum Input {
    Generate(GeneratorConfig),
    Csv { path: PathBuf, categorical: Vec<String> },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KChoice {
    Fixed(usize),
    Elbow,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReduceConfig {
    pub method: Option<ReductionMethod>,
    pub dims: usize,
    pub neighbors: Option<usize>,
    pub epochs: usize,
    /// Heat-kernel scale for Laplacian eigenmaps; mean Huang distance when unset.
    pub t: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterConfig {
    pub algorithm: String,
    pub algorithms: Vec<String>,
    pub k: KChoice,
    pub k_max: usize,
    pub gamma: Option<f64>,
    /// KAMILA restarts.
    pub runs: usize,
    pub min_cluster_size: usize,
    pub min_samples: Option<usize>,
    pub gower_literal: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluateConfig {
    pub enabled: bool,
    pub hopkins_runs: usize,
    pub hopkins_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub input: Input,
    pub reduce: ReduceConfig,
    pub cluster: ClusterConfig,
    pub pretopo: PretopoConfig,
    pub evaluate: EvaluateConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub parallel: bool,
}

/// Values given on the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub parallel: bool,
    pub input: Option<PathBuf>,
    pub categorical: Option<String>,
    pub method: Option<String>,
    pub dims: Option<usize>,
    pub algorithm: Option<String>,
    pub algorithms: Option<String>,
    pub k: Option<String>,
    pub gower_literal: bool,
}

fn parse<T: FromStr>(field: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| ConfigError::new(field, format!("cannot parse `{}`", value.trim())))
}

fn parse_bool(field: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(ConfigError::new(field, format!("expected a boolean, got `{other}`"))),
    }
}

fn parse_k(value: &str) -> Result<KChoice> {
    if value.trim().eq_ignore_ascii_case("elbow") {
        return Ok(KChoice::Elbow);
    }
    let k: usize = parse("cluster.k", value)?;
    if k == 0 {
        return Err(ConfigError::new("cluster.k", "must be at least 1 or `elbow`"));
    }
    Ok(KChoice::Fixed(k))
}

fn parse_method(field: &str, value: &str) -> Result<Option<ReductionMethod>> {
    match value.trim().to_ascii_lowercase().as_str() {
        "" | "none" => Ok(None),
        v => match ReductionMethod::parse(v) {
            Some(ReductionMethod::Identity) => Ok(None),
            Some(m) => Ok(Some(m)),
            None => Err(ConfigError::new(field, format!("unknown reduction method `{v}`"))),
        },
    }
}

fn check_algorithm(field: &str, name: &str) -> Result<String> {
    let name = name.trim().to_ascii_lowercase();
    if ALGORITHMS.contains(&name.as_str()) {
        Ok(name)
    } else {
        Err(ConfigError::new(
            field,
            format!("unknown algorithm `{name}` (expected one of {})", ALGORITHMS.join(", ")),
        ))
    }
}

fn parse_list(field: &str, value: &str) -> Result<Vec<String>> {
    let names: Vec<String> = value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| check_algorithm(field, s))
        .collect::<Result<_>>()?;
    if names.is_empty() {
        return Err(ConfigError::new(field, "empty algorithm list"));
    }
    Ok(names)
}

fn split_names(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_owned())
        .filter(|s| !s.is_empty())
        .collect()
}

impl PipelineConfig {
    /// Reads `path` (if any) and applies `ov` on top.
    pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<Self> {
        let ini = match path {
            Some(p) => Ini::load_from_file(p)
                .map_err(|e| ConfigError::new("config", format!("{}: {e}", p.display())))?,
            None => Ini::new(),
        };
        Self::from_ini(&ini, ov)
    }

    pub fn from_ini(ini: &Ini, ov: &Overrides) -> Result<Self> {
        for (section, _) in ini.iter() {
            if let Some(s) = section {
                if !["generate", "reduce", "cluster", "pretopo", "evaluate"].contains(&s) {
                    return Err(ConfigError::new(s, "unknown section"));
                }
            }
        }

        let mut seed = 0u64;
        let mut output_dir = PathBuf::from(".");
        let mut input_path = None;
        let mut categorical = Vec::new();
        for (key, value) in ini.general_section().iter() {
            match key.trim() {
                "seed" => seed = parse("seed", value)?,
                "output_dir" => output_dir = PathBuf::from(value.trim()),
                "input" => input_path = Some(PathBuf::from(value.trim())),
                "categorical" => categorical = split_names(value),
                other => return Err(ConfigError::new(other, "unknown key")),
            }
        }
        if let Some(s) = ov.seed {
            seed = s;
        }
        if let Some(d) = &ov.output_dir {
            output_dir = d.clone();
        }
        if let Some(p) = &ov.input {
            input_path = Some(p.clone());
        }
        if let Some(c) = &ov.categorical {
            categorical = split_names(c);
        }

        let generate = ini.section(Some("generate"));
        let input = match (input_path, generate) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::new("input", "give either a csv path or a [generate] section, not both"))
            }
            (Some(path), None) => Input::Csv { path, categorical },
            (None, section) => {
                if !categorical.is_empty() {
                    return Err(ConfigError::new("categorical", "only applies to csv input"));
                }
                let mut g = GeneratorConfig {
                    rng_seed: seed,
                    ..GeneratorConfig::default()
                };
                if let Some(props) = section {
                    g.apply_pairs(props.iter()).map_err(generator_error)?;
                }
                if let Some(s) = ov.seed {
                    g.rng_seed = s;
                }
                g.validate().map_err(generator_error)?;
                Input::Generate(g)
            }
        };

        let mut reduce = ReduceConfig {
            method: None,
            dims: 2,
            neighbors: None,
            epochs: 200,
            t: None,
        };
        if let Some(props) = ini.section(Some("reduce")) {
            for (key, value) in props.iter() {
                match key.trim() {
                    "method" => reduce.method = parse_method("reduce.method", value)?,
                    "dims" => reduce.dims = parse("reduce.dims", value)?,
                    "neighbors" => reduce.neighbors = Some(parse("reduce.neighbors", value)?),
                    "epochs" => reduce.epochs = parse("reduce.epochs", value)?,
                    "t" => reduce.t = Some(parse("reduce.t", value)?),
                    other => return Err(ConfigError::new(format!("reduce.{other}"), "unknown key")),
                }
            }
        }
        if let Some(m) = &ov.method {
            reduce.method = parse_method("--method", m)?;
        }
        if let Some(d) = ov.dims {
            reduce.dims = d;
        }
        if reduce.dims == 0 {
            return Err(ConfigError::new("reduce.dims", "must be at least 1"));
        }
        if reduce.neighbors == Some(0) {
            return Err(ConfigError::new("reduce.neighbors", "must be at least 1"));
        }
        if reduce.epochs == 0 {
            return Err(ConfigError::new("reduce.epochs", "must be at least 1"));
        }
        if let Some(t) = reduce.t {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ConfigError::new("reduce.t", "must be a positive real"));
            }
        }

        let mut cluster = ClusterConfig {
            algorithm: "kprototypes".into(),
            algorithms: DEFAULT_SUITE.iter().map(|s| s.to_string()).collect(),
            k: KChoice::Elbow,
            k_max: 10,
            gamma: None,
            runs: 10,
            min_cluster_size: 100,
            min_samples: Some(15),
            gower_literal: false,
        };
        if let Some(props) = ini.section(Some("cluster")) {
            for (key, value) in props.iter() {
                match key.trim() {
                    "algorithm" => cluster.algorithm = check_algorithm("cluster.algorithm", value)?,
                    "algorithms" => cluster.algorithms = parse_list("cluster.algorithms", value)?,
                    "k" => cluster.k = parse_k(value)?,
                    "k_max" => cluster.k_max = parse("cluster.k_max", value)?,
                    "gamma" => cluster.gamma = Some(parse("cluster.gamma", value)?),
                    "runs" => cluster.runs = parse("cluster.runs", value)?,
                    "min_cluster_size" => cluster.min_cluster_size = parse("cluster.min_cluster_size", value)?,
                    "min_samples" => cluster.min_samples = Some(parse("cluster.min_samples", value)?),
                    "gower_literal" => cluster.gower_literal = parse_bool("cluster.gower_literal", value)?,
                    other => return Err(ConfigError::new(format!("cluster.{other}"), "unknown key")),
                }
            }
        }
        if let Some(a) = &ov.algorithm {
            cluster.algorithm = check_algorithm("--algorithm", a)?;
        }
        if let Some(a) = &ov.algorithms {
            cluster.algorithms = parse_list("--algorithms", a)?;
        }
        if let Some(k) = &ov.k {
            cluster.k = parse_k(k)?;
        }
        cluster.gower_literal |= ov.gower_literal;
        if cluster.k_max < 3 {
            return Err(ConfigError::new("cluster.k_max", "must be at least 3"));
        }
        if cluster.runs == 0 {
            return Err(ConfigError::new("cluster.runs", "must be at least 1"));
        }
        if cluster.min_cluster_size < 2 {
            return Err(ConfigError::new("cluster.min_cluster_size", "must be at least 2"));
        }
        if cluster.min_samples == Some(0) {
            return Err(ConfigError::new("cluster.min_samples", "must be at least 1"));
        }
        if let Some(g) = cluster.gamma {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(ConfigError::new("cluster.gamma", "must be a finite non-negative real"));
            }
        }

        let mut pretopo = PretopoConfig::default();
        if let Some(props) = ini.section(Some("pretopo")) {
            for (key, value) in props.iter() {
                match key.trim() {
                    "knn" => pretopo.knn = parse("pretopo.knn", value)?,
                    "edge_floor" => pretopo.edge_floor = parse("pretopo.edge_floor", value)?,
                    "threshold_quantile" => {
                        pretopo.threshold_quantile = parse("pretopo.threshold_quantile", value)?
                    }
                    "seeds" => pretopo.seeds = Some(parse("pretopo.seeds", value)?),
                    "dnf" => {
                        pretopo.dnf = Some(
                            parse_dnf(value).map_err(|e| ConfigError::new("pretopo.dnf", e.to_string()))?,
                        )
                    }
                    "merge_overlap" => pretopo.merge_overlap = Some(parse("pretopo.merge_overlap", value)?),
                    "min_cluster_size" => {
                        pretopo.min_cluster_size = Some(parse("pretopo.min_cluster_size", value)?)
                    }
                    other => return Err(ConfigError::new(format!("pretopo.{other}"), "unknown key")),
                }
            }
        }
        if pretopo.knn == 0 {
            return Err(ConfigError::new("pretopo.knn", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&pretopo.edge_floor) {
            return Err(ConfigError::new("pretopo.edge_floor", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&pretopo.threshold_quantile) {
            return Err(ConfigError::new("pretopo.threshold_quantile", "must lie in [0, 1]"));
        }
        if pretopo.seeds == Some(0) {
            return Err(ConfigError::new("pretopo.seeds", "must be at least 1"));
        }
        if let Some(j) = pretopo.merge_overlap {
            if !(0.0..=1.0).contains(&j) {
                return Err(ConfigError::new("pretopo.merge_overlap", "must lie in [0, 1]"));
            }
        }

        let mut evaluate = EvaluateConfig {
            enabled: true,
            hopkins_runs: 50,
            hopkins_fraction: 0.05,
        };
        if let Some(props) = ini.section(Some("evaluate")) {
            for (key, value) in props.iter() {
                match key.trim() {
                    "enabled" => evaluate.enabled = parse_bool("evaluate.enabled", value)?,
                    "hopkins_runs" => evaluate.hopkins_runs = parse("evaluate.hopkins_runs", value)?,
                    "hopkins_fraction" => evaluate.hopkins_fraction = parse("evaluate.hopkins_fraction", value)?,
                    other => return Err(ConfigError::new(format!("evaluate.{other}"), "unknown key")),
                }
            }
        }
        if evaluate.hopkins_runs == 0 {
            return Err(ConfigError::new("evaluate.hopkins_runs", "must be at least 1"));
        }
        if !(evaluate.hopkins_fraction > 0.0 && evaluate.hopkins_fraction < 1.0) {
            return Err(ConfigError::new("evaluate.hopkins_fraction", "must lie in (0, 1)"));
        }

        Ok(Self {
            input,
            reduce,
            cluster,
            pretopo,
            evaluate,
            seed,
            output_dir,
            parallel: ov.parallel,
        })
    }
}

fn generator_error(e: mixclust::Error) -> ConfigError {
    match e {
        mixclust::Error::InvalidParameter { name, reason } => ConfigError::new(format!("generate.{name}"), reason),
        other => ConfigError::new("generate", other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_str(text: &str) -> Result<PipelineConfig> {
        PipelineConfig::from_ini(&Ini::load_from_str(text).unwrap(), &Overrides::default())
    }

    #[test]
    fn defaults_generate_the_base_case() {
        let c = from_str("").unwrap();
        assert_eq!(c.input, Input::Generate(GeneratorConfig::default()));
        assert_eq!(c.cluster.k, KChoice::Elbow);
        assert!(c.evaluate.enabled);
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(from_str("[generate]\nclusters = 0\n").unwrap_err().field, "generate.clusters");
        assert_eq!(from_str("[cluster]\nk = 0\n").unwrap_err().field, "cluster.k");
        assert_eq!(from_str("[cluster]\nalgorithm = dbscan\n").unwrap_err().field, "cluster.algorithm");
        assert_eq!(from_str("[reduce]\nwidth = 3\n").unwrap_err().field, "reduce.width");
        assert_eq!(from_str("[plot]\n").unwrap_err().field, "plot");
        assert_eq!(from_str("input = a.csv\n[generate]\nsamples = 10\n").unwrap_err().field, "input");
    }

    #[test]
    fn flags_override_file_values() {
        let ini = Ini::load_from_str("seed = 3\n[cluster]\nk = 4\n").unwrap();
        let ov = Overrides {
            seed: Some(9),
            k: Some("elbow".into()),
            ..Overrides::default()
        };
        let c = PipelineConfig::from_ini(&ini, &ov).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.cluster.k, KChoice::Elbow);
        match c.input {
            Input::Generate(g) => assert_eq!(g.rng_seed, 9),
            _ => panic!("expected generator input"),
        }
    }

    #[test]
    fn pretopo_section_is_parsed() {
        let c = from_str("[pretopo]\nknn = 7\ndnf = [[num],[cat]]\n").unwrap();
        assert_eq!(c.pretopo.knn, 7);
        assert_eq!(c.pretopo.dnf.unwrap().len(), 2);
    }
}
