//! Reference clusterers: k-prototypes, KAMILA, Gower average linkage,
//! k-medoids and the elbow selector.

mod agglomerative;
mod elbow;
mod kamila;
mod kmedoids;
mod kprototypes;

pub use agglomerative::{average_linkage, cut, dendrogram, phillip_ottaway, phillip_ottaway_matrix, Merge};
pub use elbow::{elbow_curve, elbow_from_curve, elbow_k};
pub use kamila::{kamila, kamila_with, log_kde, silverman_bandwidth, KamilaResult, KamilaState};
pub use kmedoids::{kmedoids, Medoids};
pub use kprototypes::{kmeans, kprototypes, kprototypes_with, KPrototypesConfig, KPrototypesResult, Prototype};
