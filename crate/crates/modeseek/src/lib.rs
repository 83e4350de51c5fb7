//! Multi-resolution kNN mode seeking clustering with active-learning
//! classification.
//!
//! The library covers:
//!
//! - the exact mode seeking algorithm: per-object densities from the k-th
//!   neighbor distance and ascent links to the densest neighbor, for a whole
//!   schedule of neighborhood sizes in one run ([`exact`]);
//! - a fast variant that restricts every neighborhood search to prototype
//!   cells, bringing the distance count down to the order of n * sqrt(cn)
//!   ([`fast`]);
//! - a plain kMeans baseline with medoid extraction ([`kmeans`]);
//! - active-learning classification on top of any multi-level clustering:
//!   prototype labeling, confidence propagation across levels, nesting, and
//!   confidence-threshold rejection ([`labeling`]);
//! - evaluation: normalized mutual information, classification error, 1NN
//!   baselines, learning curves, and timing-scaling benchmarks
//!   ([`evaluation`]);
//! - file ingestion (CSV, raw f32, IDX), clustering artifacts, and curve
//!   emission ([`io`]).

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod exact;
pub mod fast;
pub mod io;
pub mod kmeans;
pub mod labeling;
pub mod multilevel;
mod passes;
pub mod random;
pub mod schedule;

pub use dataset::{Dataset, LabelAlphabet};
pub use error::{Error, Result};
pub use multilevel::{Algorithm, ClusteringLevel, MultiLevelClustering, Provenance};
pub use random::RandomSource;
pub use schedule::NeighborhoodSchedule;
