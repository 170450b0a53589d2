//! Dynamic protein structure networks (PSNs) and the classification pipeline
//! built on top of them.
//!
//! The crate covers the whole traditional-ML path:
//!
//! * [`structure`]: Cα coordinate ingestion (PDB `ATOM` records, canonical
//!   JSON-lines domain records, seeded synthetic corpora);
//! * [`psn`]: static PSNs, nested prefix snapshots and the timestamped edge
//!   event stream;
//! * [`graphlets`]: dynamic and static graphlet orbit catalogues, fast
//!   per-node orbit counting and a brute-force oracle;
//! * [`features`]: column filtering, graphlet correlation matrices,
//!   upper-triangle flattening and PCA;
//! * [`logreg`]: one-vs-rest L2 logistic regression with nested tuning;
//! * [`evaluation`]: stratified folds, misclassification, competition
//!   ranking, the one-sided Wilcoxon signed-rank test and runtime summaries.
//!
//! Numeric code is generic over [`Real`] (`f32`/`f64`); the aliases below fix
//! the scalar to `f64`, which is what the command-line pipeline uses.

pub mod error;
pub mod evaluation;
pub mod features;
pub mod fmt;
pub mod graphlets;
pub mod linalg;
pub mod logreg;
pub mod psn;
pub mod rng;
pub mod scalar;
pub mod structure;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Residue = structure::Residue<f64>;
pub type ProteinDomain = structure::ProteinDomain<f64>;
pub type Gcm = features::Gcm<f64>;
pub type PcaModel = features::PcaModel<f64>;
pub type FeatureSet = features::FeatureSet<f64>;
pub type BinaryLrModel = logreg::BinaryLrModel<f64>;
pub type OvrModel = logreg::OvrModel<f64>;
