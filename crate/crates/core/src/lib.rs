//! Clustering toolkit for mixed numerical and categorical data.
//!
//! Distances ([`distance`]), projections ([`dimred`]), classical clusterers
//! ([`baselines`]), density hierarchies ([`hdbscan`]), pretopological
//! clustering ([`pretopo`]) and validity indices ([`validation`]) all work on
//! a [`MixedDataset`].

pub mod baselines;
pub mod dataset;
pub mod dimred;
pub mod distance;
pub mod error;
pub mod hdbscan;
pub mod linalg;
mod par;
pub mod partition;
pub mod pretopo;
pub mod validation;

pub use dataset::{generate, Column, ColumnValues, FeatureKind, GeneratorConfig, LabeledDataset, MixedDataset};
pub use distance::{DistanceMatrix, Metric};
pub use dimred::{Embedding, ReductionMethod};
pub use error::{Error, Result};
pub use partition::{Hierarchy, HierarchyNode, Partition, OUTLIER};
pub use pretopo::{pretopomd, PretopoConfig};
pub use validation::ValidationReport;
