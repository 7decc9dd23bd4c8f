//! Graph-level one-class anomaly detection with orthogonal hypersphere
//! contraction (DOHSC) and orthogonal bi-hypersphere compression (DO2HSC).
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] dense matrices and a one-sided Jacobi SVD,
//! * [`diffcore`] a reverse-mode autodiff tape over those matrices,
//! * [`graphdata`] TU-format ingestion, one-class splits and batching,
//! * [`encoder`] the GIN encoder and its node/graph heads,
//! * [`miloss`] the Jensen–Shannon mutual-information term,
//! * [`projection`] the SVD-fitted orthogonal projection layer,
//! * [`detector`] training loops, decision boundaries and scores,
//! * [`evalmetrics`] AUC, F1 and distance histograms,
//! * [`soapbubble`] high-dimensional Gaussian distance simulations,
//! * [`artifacts`] checkpoint, metadata and scores file formats.

pub mod artifacts;
pub mod detector;
pub mod diffcore;
pub mod encoder;
pub mod error;
pub mod evalmetrics;
pub mod graphdata;
pub mod linalg;
pub mod miloss;
pub mod projection;
pub mod soapbubble;

mod rng;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
