//! k-means clustering with outliers.

pub mod baselines;
pub mod coreset;
pub mod datagen;
pub mod deadline;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod harness;
pub mod kmeans;
pub mod nkmeans;
pub mod objective;

pub use deadline::Deadline;
pub use error::{Error, Result};
pub use geometry::{nearest, sq_dist, CenterSet, Dataset};
pub use objective::{partition, z_cost, ClusteringResult, Instance, RunMeta};
