//! Low-dimensional projections of mixed data.

mod famd;
mod laplacian;
pub mod pacmap;
pub mod umap;

use std::fmt;
use std::io::Write;

use crate::distance::{DistanceMatrix, Metric};
use crate::error::{Error, Result};

pub use famd::{famd, famd_decompose, FamdDecomposition};
pub use laplacian::{generalized_laplacian_eigen, heat_kernel, laplacian_eigenmaps, spectral_embedding};
pub use pacmap::{pacmap, PacmapConfig};
pub use umap::{umap, UmapConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReductionMethod {
    Famd,
    Laplacian,
    Umap,
    Pacmap,
    /// Raw coordinates supplied by the caller.
    Identity,
}

impl ReductionMethod {
    pub const ALL: [ReductionMethod; 4] = [
        ReductionMethod::Famd,
        ReductionMethod::Laplacian,
        ReductionMethod::Umap,
        ReductionMethod::Pacmap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReductionMethod::Famd => "famd",
            ReductionMethod::Laplacian => "laplacian",
            ReductionMethod::Umap => "umap",
            ReductionMethod::Pacmap => "pacmap",
            ReductionMethod::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "famd" => Some(ReductionMethod::Famd),
            "laplacian" | "laplacian_eigenmaps" | "le" => Some(ReductionMethod::Laplacian),
            "umap" => Some(ReductionMethod::Umap),
            "pacmap" => Some(ReductionMethod::Pacmap),
            "identity" | "none" => Some(ReductionMethod::Identity),
            _ => None,
        }
    }
}

impl fmt::Display for ReductionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `n × dim` coordinates produced by a reduction method.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    n: usize,
    dim: usize,
    coords: Vec<f64>,
    method: ReductionMethod,
    explained_inertia: Option<f64>,
    params: Vec<(String, String)>,
}

impl Embedding {
    /// Wraps row-major coordinates, rejecting non-finite values.
    pub fn new(n: usize, dim: usize, coords: Vec<f64>, method: ReductionMethod) -> Result<Self> {
        if coords.len() != n * dim {
            return Err(Error::SizeMismatch(format!(
                "{} coordinates for {n}×{dim}",
                coords.len()
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dims",
                reason: "must be at least 1".into(),
            });
        }
        if let Some(pos) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::Degenerate(format!(
                "non-finite coordinate at row {}",
                pos / dim
            )));
        }
        Ok(Self {
            n,
            dim,
            coords,
            method,
            explained_inertia: None,
            params: Vec::new(),
        })
    }

    pub(crate) fn with_inertia(mut self, inertia: f64) -> Self {
        self.explained_inertia = Some(inertia);
        self
    }

    pub fn with_param(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.params.push((key.into(), value.to_string()));
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.coords[i * self.dim + c]).collect()
    }

    pub fn method(&self) -> ReductionMethod {
        self.method
    }

    /// Share of total inertia kept; only set for FAMD.
    pub fn explained_inertia(&self) -> Option<f64> {
        self.explained_inertia
    }

    pub fn params(&self) -> &[(String, String)] {
        &self.params
    }

    /// Keeps the first `dims` coordinates.
    pub fn truncate(&self, dims: usize) -> Result<Self> {
        if dims == 0 || dims > self.dim {
            return Err(Error::InvalidParameter {
                name: "dims",
                reason: format!("must be in 1..={}", self.dim),
            });
        }
        let coords = (0..self.n)
            .flat_map(|i| self.row(i)[..dims].to_vec())
            .collect();
        let mut out = Self::new(self.n, dims, coords, self.method)?;
        out.params = self.params.clone();
        Ok(out)
    }

    /// Euclidean distances between embedded points.
    pub fn distance_matrix(&self) -> DistanceMatrix {
        DistanceMatrix::euclidean(
            self.n,
            self.dim,
            &self.coords,
            Metric::Embedded(self.method.name().to_owned()),
        )
    }

    /// CSV with `#`-prefixed parameter lines, a `dim_0..` header, then rows.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        let io = |source| Error::Io {
            path: "<embedding writer>".into(),
            source,
        };
        writeln!(writer, "# method={}", self.method).map_err(io)?;
        if let Some(v) = self.explained_inertia {
            writeln!(writer, "# explained_inertia={v}").map_err(io)?;
        }
        for (k, v) in &self.params {
            writeln!(writer, "# {k}={v}").map_err(io)?;
        }
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record((0..self.dim).map(|c| format!("dim_{c}")))?;
        for i in 0..self.n {
            wtr.write_record(self.row(i).iter().map(|v| v.to_string()))?;
        }
        wtr.flush().map_err(io)
    }
}
