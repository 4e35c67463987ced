//! Column-typed mixed tables, CSV ingestion and the synthetic blob generator.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    Numerical,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub kind: FeatureKind,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: FeatureKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

/// Raw values for one column, `None` marking a missing cell.
#[derive(Clone, Debug)]
pub enum ColumnValues {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl ColumnValues {
    fn len(&self) -> usize {
        match self {
            ColumnValues::Numeric(v) => v.len(),
            ColumnValues::Categorical(v) => v.len(),
        }
    }
}

/// A table of numerical and categorical features.
///
/// Numerical values live in a row-major `n_rows × P` block (NaN in missing
/// cells) and categorical values in a row-major `n_rows × Q` block of level
/// indices (0 in missing cells). The missing mask is indexed by original
/// column position.
#[derive(Clone, Debug)]
pub struct MixedDataset {
    n_rows: usize,
    columns: Vec<Column>,
    /// For each column, its index inside the numeric or categorical block.
    block_index: Vec<usize>,
    numeric_pos: Vec<usize>,
    categorical_pos: Vec<usize>,
    numeric: Vec<f64>,
    categorical: Vec<u32>,
    levels: Vec<Vec<String>>,
    missing: Vec<bool>,
}

impl PartialEq for MixedDataset {
    fn eq(&self, other: &Self) -> bool {
        if self.n_rows != other.n_rows
            || self.columns != other.columns
            || self.levels != other.levels
            || self.missing != other.missing
        {
            return false;
        }
        let p = self.n_numeric();
        let q = self.n_categorical();
        (0..self.n_rows).all(|i| {
            (0..p).all(|j| {
                self.numeric_missing(i, j) || self.numeric[i * p + j] == other.numeric[i * p + j]
            }) && (0..q).all(|c| {
                self.categorical_missing(i, c)
                    || self.categorical[i * q + c] == other.categorical[i * q + c]
            })
        })
    }
}

impl MixedDataset {
    /// Builds a dataset from named columns. Categorical levels are sorted
    /// lexicographically.
    pub fn from_columns(columns: Vec<(String, ColumnValues)>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidDataset("no columns".into()));
        }
        let n_rows = columns[0].1.len();
        if n_rows == 0 {
            return Err(Error::InvalidDataset("no rows".into()));
        }
        if let Some((name, _)) = columns.iter().find(|(_, v)| v.len() != n_rows) {
            return Err(Error::InvalidDataset(format!(
                "column `{name}` length differs from {n_rows}"
            )));
        }
        let mut numeric_cols = Vec::new();
        let mut categorical_cols = Vec::new();
        let mut cols = Vec::with_capacity(columns.len());
        for (name, values) in columns {
            match values {
                ColumnValues::Numeric(v) => {
                    cols.push(Column::new(name, FeatureKind::Numerical));
                    numeric_cols.push(v);
                }
                ColumnValues::Categorical(v) => {
                    cols.push(Column::new(name, FeatureKind::Categorical));
                    categorical_cols.push(v);
                }
            }
        }
        let p = numeric_cols.len();
        let q = categorical_cols.len();
        let mut numeric = vec![f64::NAN; n_rows * p];
        let mut categorical = vec![0u32; n_rows * q];
        let mut levels = Vec::with_capacity(q);
        let mut num_missing = vec![false; n_rows * p];
        let mut cat_missing = vec![false; n_rows * q];
        for (j, col) in numeric_cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                match v {
                    Some(x) if x.is_finite() => numeric[i * p + j] = *x,
                    _ => num_missing[i * p + j] = true,
                }
            }
        }
        for (c, col) in categorical_cols.iter().enumerate() {
            let set: BTreeSet<&str> = col.iter().flatten().map(String::as_str).collect();
            let lv: Vec<String> = set.into_iter().map(str::to_owned).collect();
            for (i, v) in col.iter().enumerate() {
                match v {
                    Some(s) => {
                        categorical[i * q + c] = lv.binary_search(s).expect("level present") as u32
                    }
                    None => cat_missing[i * q + c] = true,
                }
            }
            levels.push(lv);
        }
        let mut ds = Self::assemble(n_rows, cols, numeric, categorical, levels);
        for i in 0..n_rows {
            for j in 0..p {
                let pos = ds.numeric_pos[j];
                ds.missing[i * ds.columns.len() + pos] = num_missing[i * p + j];
            }
            for c in 0..q {
                let pos = ds.categorical_pos[c];
                ds.missing[i * ds.columns.len() + pos] = cat_missing[i * q + c];
            }
        }
        Ok(ds)
    }

    /// Numeric-only dataset from a row-major `n × p` matrix.
    pub fn from_numeric(n: usize, p: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * p {
            return Err(Error::SizeMismatch(format!(
                "expected {} values, got {}",
                n * p,
                values.len()
            )));
        }
        let cols = (0..p)
            .map(|j| {
                (
                    format!("x{j}"),
                    ColumnValues::Numeric((0..n).map(|i| Some(values[i * p + j])).collect()),
                )
            })
            .collect();
        Self::from_columns(cols)
    }

    /// Direct constructor for already-encoded blocks without missing values.
    pub fn from_blocks(
        n_rows: usize,
        numeric: Vec<f64>,
        n_numeric: usize,
        categorical: Vec<u32>,
        levels: Vec<Vec<String>>,
    ) -> Result<Self> {
        let q = levels.len();
        if numeric.len() != n_rows * n_numeric || categorical.len() != n_rows * q {
            return Err(Error::SizeMismatch("block sizes disagree with n_rows".into()));
        }
        if n_rows == 0 || n_numeric + q == 0 {
            return Err(Error::InvalidDataset("empty dataset".into()));
        }
        if numeric.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidDataset("non-finite numeric value".into()));
        }
        for i in 0..n_rows {
            for (c, lv) in levels.iter().enumerate() {
                if categorical[i * q + c] as usize >= lv.len() {
                    return Err(Error::InvalidDataset(format!(
                        "level index out of range at row {i}, categorical column {c}"
                    )));
                }
            }
        }
        let mut cols: Vec<Column> = (0..n_numeric)
            .map(|j| Column::new(format!("num_{j}"), FeatureKind::Numerical))
            .collect();
        cols.extend((0..q).map(|c| Column::new(format!("cat_{c}"), FeatureKind::Categorical)));
        Ok(Self::assemble(n_rows, cols, numeric, categorical, levels))
    }

    fn assemble(
        n_rows: usize,
        columns: Vec<Column>,
        numeric: Vec<f64>,
        categorical: Vec<u32>,
        levels: Vec<Vec<String>>,
    ) -> Self {
        let mut block_index = Vec::with_capacity(columns.len());
        let mut numeric_pos = Vec::new();
        let mut categorical_pos = Vec::new();
        for (pos, col) in columns.iter().enumerate() {
            match col.kind {
                FeatureKind::Numerical => {
                    block_index.push(numeric_pos.len());
                    numeric_pos.push(pos);
                }
                FeatureKind::Categorical => {
                    block_index.push(categorical_pos.len());
                    categorical_pos.push(pos);
                }
            }
        }
        let width = columns.len();
        Self {
            n_rows,
            columns,
            block_index,
            numeric_pos,
            categorical_pos,
            numeric,
            categorical,
            levels,
            missing: vec![false; n_rows * width],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Number of numerical columns (P).
    pub fn n_numeric(&self) -> usize {
        self.numeric_pos.len()
    }

    /// Number of categorical columns (Q).
    pub fn n_categorical(&self) -> usize {
        self.categorical_pos.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn numeric_row(&self, i: usize) -> &[f64] {
        let p = self.n_numeric();
        &self.numeric[i * p..(i + 1) * p]
    }

    pub fn categorical_row(&self, i: usize) -> &[u32] {
        let q = self.n_categorical();
        &self.categorical[i * q..(i + 1) * q]
    }

    /// Row-major numeric block.
    pub fn numeric_block(&self) -> &[f64] {
        &self.numeric
    }

    pub fn categorical_block(&self) -> &[u32] {
        &self.categorical
    }

    pub fn numeric_value(&self, i: usize, j: usize) -> f64 {
        self.numeric[i * self.n_numeric() + j]
    }

    pub fn categorical_value(&self, i: usize, c: usize) -> u32 {
        self.categorical[i * self.n_categorical() + c]
    }

    pub fn levels(&self, c: usize) -> &[String] {
        &self.levels[c]
    }

    pub fn all_levels(&self) -> &[Vec<String>] {
        &self.levels
    }

    pub fn numeric_name(&self, j: usize) -> &str {
        &self.columns[self.numeric_pos[j]].name
    }

    pub fn categorical_name(&self, c: usize) -> &str {
        &self.columns[self.categorical_pos[c]].name
    }

    /// Missing flag by original column position.
    pub fn is_missing(&self, i: usize, col: usize) -> bool {
        self.missing[i * self.columns.len() + col]
    }

    pub fn numeric_missing(&self, i: usize, j: usize) -> bool {
        self.is_missing(i, self.numeric_pos[j])
    }

    pub fn categorical_missing(&self, i: usize, c: usize) -> bool {
        self.is_missing(i, self.categorical_pos[c])
    }

    pub fn row_has_missing(&self, i: usize) -> bool {
        let w = self.columns.len();
        self.missing[i * w..(i + 1) * w].iter().any(|&m| m)
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|&m| m)
    }

    pub fn rows_with_missing(&self) -> Vec<usize> {
        (0..self.n_rows).filter(|&i| self.row_has_missing(i)).collect()
    }

    /// Fails with [`Error::MissingValues`] if any cell is missing.
    pub fn require_complete(&self) -> Result<()> {
        if self.has_missing() {
            Err(Error::MissingValues {
                rows: self.rows_with_missing(),
            })
        } else {
            Ok(())
        }
    }

    /// Column values of numeric feature `j`, skipping missing cells.
    pub fn numeric_column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows)
            .filter(|&i| !self.numeric_missing(i, j))
            .map(|i| self.numeric_value(i, j))
            .collect()
    }

    /// Sub-table with the given rows, in the given order. Level lists are kept.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidDataset("row selection is empty".into()));
        }
        let p = self.n_numeric();
        let q = self.n_categorical();
        let w = self.columns.len();
        let mut out = Self::assemble(
            rows.len(),
            self.columns.clone(),
            Vec::with_capacity(rows.len() * p),
            Vec::with_capacity(rows.len() * q),
            self.levels.clone(),
        );
        out.missing.clear();
        for &i in rows {
            if i >= self.n_rows {
                return Err(invalid("rows", format!("row {i} out of range")));
            }
            out.numeric.extend_from_slice(self.numeric_row(i));
            out.categorical.extend_from_slice(self.categorical_row(i));
            out.missing
                .extend_from_slice(&self.missing[i * w..(i + 1) * w]);
        }
        Ok(out)
    }

    /// Drops every row that has at least one missing cell.
    pub fn drop_missing_rows(&self) -> Result<Self> {
        let keep: Vec<usize> = (0..self.n_rows)
            .filter(|&i| !self.row_has_missing(i))
            .collect();
        self.select_rows(&keep)
    }

    /// Drops levels that no longer occur, re-indexing the categorical block.
    pub fn prune_levels(&self) -> Self {
        let q = self.n_categorical();
        let mut out = self.clone();
        for c in 0..q {
            let used: BTreeSet<u32> = (0..self.n_rows)
                .filter(|&i| !self.categorical_missing(i, c))
                .map(|i| self.categorical_value(i, c))
                .collect();
            if used.len() == self.levels[c].len() {
                continue;
            }
            let remap: Vec<Option<u32>> = (0..self.levels[c].len() as u32)
                .map(|l| used.iter().position(|&u| u == l).map(|x| x as u32))
                .collect();
            out.levels[c] = used
                .iter()
                .map(|&l| self.levels[c][l as usize].clone())
                .collect();
            for i in 0..self.n_rows {
                if !self.categorical_missing(i, c) {
                    out.categorical[i * q + c] =
                        remap[self.categorical_value(i, c) as usize].expect("used level");
                }
            }
        }
        out
    }

    /// Per-column population mean and standard deviation over non-missing cells.
    pub fn numeric_moments(&self) -> Vec<(f64, f64)> {
        (0..self.n_numeric())
            .map(|j| {
                let col = self.numeric_column(j);
                population_moments(&col)
            })
            .collect()
    }

    /// Z-scores every numerical column (population standard deviation).
    /// Zero-variance columns become all zeros; categoricals are untouched.
    pub fn standardize(&self) -> Self {
        let p = self.n_numeric();
        let moments = self.numeric_moments();
        let mut out = self.clone();
        for i in 0..self.n_rows {
            for (j, &(mean, sd)) in moments.iter().enumerate() {
                if self.numeric_missing(i, j) {
                    continue;
                }
                let x = self.numeric[i * p + j];
                out.numeric[i * p + j] = if sd > 0.0 { (x - mean) / sd } else { 0.0 };
            }
        }
        out
    }

    /// Reads a comma-separated file with a header row. Without a schema a
    /// column is numerical iff every non-missing cell parses as a real.
    pub fn load_csv(path: impl AsRef<Path>, schema: Option<&[Column]>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_csv(file, schema)
    }

    pub fn read_csv<R: Read>(reader: R, schema: Option<&[Column]>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let width = header.len();
        if let Some(schema) = schema {
            if schema.len() != width {
                return Err(Error::Schema(format!(
                    "schema has {} columns, file has {width}",
                    schema.len()
                )));
            }
            for (col, name) in schema.iter().zip(&header) {
                if &col.name != name {
                    return Err(Error::Schema(format!(
                        "schema column `{}` does not match header `{name}`",
                        col.name
                    )));
                }
            }
        }
        let mut cells: Vec<Vec<Option<String>>> = vec![Vec::new(); width];
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != width {
                return Err(Error::RaggedRow {
                    row: row + 1,
                    found: record.len(),
                    expected: width,
                });
            }
            for (j, field) in record.iter().enumerate() {
                let field = field.trim();
                cells[j].push(if field.is_empty() || field == "NA" {
                    None
                } else {
                    Some(field.to_owned())
                });
            }
        }
        let mut columns = Vec::with_capacity(width);
        for (j, raw) in cells.into_iter().enumerate() {
            let kind = match schema {
                Some(s) => s[j].kind,
                None => {
                    let numeric = raw.iter().flatten().all(|s| s.parse::<f64>().is_ok());
                    if numeric {
                        FeatureKind::Numerical
                    } else {
                        FeatureKind::Categorical
                    }
                }
            };
            let values = match kind {
                FeatureKind::Numerical => ColumnValues::Numeric(
                    raw.iter()
                        .map(|c| match c {
                            None => Ok(None),
                            Some(s) => s.parse::<f64>().map(Some).map_err(|_| {
                                Error::Schema(format!(
                                    "column `{}` declared numerical but holds `{s}`",
                                    header[j]
                                ))
                            }),
                        })
                        .collect::<Result<_>>()?,
                ),
                FeatureKind::Categorical => ColumnValues::Categorical(raw),
            };
            columns.push((header[j].clone(), values));
        }
        Self::from_columns(columns)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(file)
    }

    /// Writes the table with a header row; missing cells are written as `NA`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        let mut record = Vec::with_capacity(self.columns.len());
        for i in 0..self.n_rows {
            record.clear();
            for (pos, col) in self.columns.iter().enumerate() {
                if self.is_missing(i, pos) {
                    record.push("NA".to_owned());
                    continue;
                }
                let b = self.block_index[pos];
                record.push(match col.kind {
                    FeatureKind::Numerical => format!("{}", self.numeric_value(i, b)),
                    FeatureKind::Categorical => {
                        self.levels[b][self.categorical_value(i, b) as usize].clone()
                    }
                });
            }
            wtr.write_record(&record)?;
        }
        wtr.flush().map_err(|source| Error::Io {
            path: "<csv writer>".into(),
            source,
        })?;
        Ok(())
    }
}

pub(crate) fn population_moments(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Linearly interpolated quantile of an ascending, non-empty sample.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Parameters of the synthetic mixed-data generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_samples: usize,
    pub k_clusters: usize,
    pub n_numeric: usize,
    pub n_categorical: usize,
    /// Distinct values per categorical feature.
    pub cat_levels: usize,
    pub cluster_std: f64,
    pub rng_seed: u64,
}

impl Default for GeneratorConfig {
    /// The base configuration: 500 rows, 3 clusters, 5+5 features, 3 levels, σ=0.1.
    fn default() -> Self {
        Self {
            n_samples: 500,
            k_clusters: 3,
            n_numeric: 5,
            n_categorical: 5,
            cat_levels: 3,
            cluster_std: 0.1,
            rng_seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub const SECTION: &'static str = "generate";

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(invalid("samples", "must be at least 1"));
        }
        if self.k_clusters == 0 {
            return Err(invalid("clusters", "must be at least 1"));
        }
        if self.n_numeric + self.n_categorical == 0 {
            return Err(invalid("numeric", "numeric + categorical must be at least 1"));
        }
        if self.n_categorical > 0 && self.cat_levels < 2 {
            return Err(invalid("levels", "must be at least 2"));
        }
        if !(self.cluster_std >= 0.0) || !self.cluster_std.is_finite() {
            return Err(invalid("std", "must be a finite non-negative real"));
        }
        Ok(())
    }

    /// Applies `key = value` pairs of a `[generate]` section over `self`.
    pub fn apply_pairs<'a, I>(&mut self, pairs: I) -> Result<()>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        fn num<T: std::str::FromStr>(key: &'static str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| invalid(key, format!("cannot parse `{v}`")))
        }
        for (key, value) in pairs {
            match key.trim() {
                "samples" => self.n_samples = num("samples", value)?,
                "clusters" => self.k_clusters = num("clusters", value)?,
                "numeric" => self.n_numeric = num("numeric", value)?,
                "categorical" => self.n_categorical = num("categorical", value)?,
                "levels" => self.cat_levels = num("levels", value)?,
                "std" => self.cluster_std = num("std", value)?,
                "seed" => self.rng_seed = num("seed", value)?,
                other => {
                    return Err(Error::Config(format!(
                        "unknown key `{other}` in [generate]"
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("samples", self.n_samples.to_string()),
            ("clusters", self.k_clusters.to_string()),
            ("numeric", self.n_numeric.to_string()),
            ("categorical", self.n_categorical.to_string()),
            ("levels", self.cat_levels.to_string()),
            ("std", self.cluster_std.to_string()),
            ("seed", self.rng_seed.to_string()),
        ]
    }
}

/// A dataset together with the generating component of every row.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub data: MixedDataset,
    pub truth: Vec<usize>,
}

/// Draws an isotropic Gaussian mixture and discretizes its trailing
/// dimensions into categorical features by pooled quantile cuts.
///
/// Centers are drawn uniformly in the unit cube and rescaled so that their
/// mean pairwise Euclidean distance is 1. Rows pick a component uniformly.
pub fn generate(cfg: &GeneratorConfig) -> Result<LabeledDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let n = cfg.n_samples;
    let k = cfg.k_clusters;
    let p = cfg.n_numeric;
    let q = cfg.n_categorical;
    let dim = p + q;

    let mut centers: Vec<f64> = (0..k * dim).map(|_| rng.random::<f64>()).collect();
    if k >= 2 {
        let mut total = 0.0;
        let mut pairs = 0usize;
        for a in 0..k {
            for b in a + 1..k {
                let d2: f64 = (0..dim)
                    .map(|t| (centers[a * dim + t] - centers[b * dim + t]).powi(2))
                    .sum();
                total += d2.sqrt();
                pairs += 1;
            }
        }
        let mean = total / pairs as f64;
        if mean > 0.0 {
            centers.iter_mut().for_each(|c| *c /= mean);
        }
    }

    let mut truth = Vec::with_capacity(n);
    let mut raw = vec![0.0; n * dim];
    for i in 0..n {
        let comp = rng.random_range(0..k);
        truth.push(comp);
        for t in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            raw[i * dim + t] = centers[comp * dim + t] + cfg.cluster_std * z;
        }
    }

    let mut numeric = Vec::with_capacity(n * p);
    for i in 0..n {
        numeric.extend_from_slice(&raw[i * dim..i * dim + p]);
    }

    let width = (cfg.cat_levels.max(1) - 1).to_string().len();
    let mut categorical = vec![0u32; n * q];
    let mut levels = Vec::with_capacity(q);
    for c in 0..q {
        let values: Vec<f64> = (0..n).map(|i| raw[i * dim + p + c]).collect();
        let codes = quantile_codes(&values, cfg.cat_levels);
        let used: BTreeSet<usize> = codes.iter().copied().collect();
        let used: Vec<usize> = used.into_iter().collect();
        for (i, code) in codes.iter().enumerate() {
            categorical[i * q + c] = used.binary_search(code).expect("code used") as u32;
        }
        levels.push(
            used.iter()
                .map(|l| format!("c{l:0width$}"))
                .collect::<Vec<_>>(),
        );
    }

    let mut data = MixedDataset::from_blocks(n, numeric, p, categorical, levels)?;
    for (pos, col) in data.columns.iter_mut().enumerate() {
        let b = data.block_index[pos];
        col.name = match col.kind {
            FeatureKind::Numerical => format!("num_{b}"),
            FeatureKind::Categorical => format!("cat_{b}"),
        };
    }
    Ok(LabeledDataset { data, truth })
}

/// Equal-probability bins: the cut points are the order statistics at
/// ranks `l·n/levels`, and a value's code counts the cut points at or below it.
fn quantile_codes(values: &[f64], levels: usize) -> Vec<usize> {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cuts: Vec<f64> = (1..levels).map(|l| sorted[(l * n / levels).min(n - 1)]).collect();
    values
        .iter()
        .map(|x| cuts.partition_point(|c| *c <= *x))
        .collect()
}
