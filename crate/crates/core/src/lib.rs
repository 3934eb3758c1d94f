//! Binary classification toolkit for tabular data.
//!
//! The crate covers the whole pipeline used by the `pcarf` experiment
//! harness:
//!
//! * [`linalg`]: dense row-major matrices and a cyclic Jacobi eigensolver,
//! * [`data`]: CSV ingestion and seeded stratified train/test splitting,
//! * [`pca`]: principal-component feature extraction,
//! * [`forest`]: CART trees with Gini splitting and a bagged random forest,
//! * [`mlp`]: a small feed-forward network trained by backpropagation,
//! * [`metrics`]: confusion-matrix metrics, ROC curves and AUC,
//! * [`experiment`]: the configuration-driven run harness and its reports.
//!
//! Everything that involves randomness draws from [`rng::SplitMix64`], so a
//! seed fully determines every result.

pub mod data;
pub mod error;
pub mod experiment;
pub mod forest;
pub mod linalg;
pub mod metrics;
pub mod mlp;
pub mod pca;
pub mod pipeline;
pub mod plot;
pub mod rng;
pub mod textfmt;

pub use error::{Error, Result};
pub use linalg::Matrix;
