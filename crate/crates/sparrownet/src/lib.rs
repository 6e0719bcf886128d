//! Derivative-free anomaly detection toolkit: a sparrow search optimizer,
//! a forward-only convolutional/BiGRU network, evaluation metrics, and an
//! end-to-end pipeline that trains the network by direct weight search.
//!
//! The crate is organized around five building blocks:
//!
//! - [`tensor`] / [`rng`]: dense row-major tensors and a seeded,
//!   platform-stable random source everything else draws from.
//! - [`neural`]: conv / pool / residual / global-average-pool / dense layers
//!   plus GRU and bidirectional GRU cells, all forward-only, with a codec
//!   that maps every weight into one flat vector.
//! - [`ssa`]: the sparrow search algorithm over box-bounded real vectors,
//!   with the usual benchmark objectives.
//! - [`metrics`]: accuracy, ROC/AUC and regression error measures.
//! - [`pipeline`]: synthetic sequence generation, CSV ingestion,
//!   normalization, SSA-driven feature selection and SSA-driven training.
//!
//! The `examples/` directory has one runnable program per capability; the
//! `sparrownet` binary exposes the same flows as subcommands.

pub mod cli;
pub mod metrics;
pub mod neural;
pub mod pipeline;
pub mod rng;
pub mod ssa;
pub mod tensor;

pub use rng::Prng;
pub use tensor::Tensor;
