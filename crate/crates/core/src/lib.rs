//! Cross-modality semi-supervised subspace learning.
//!
//! Paired hyperspectral (HS) and multispectral (MS) samples are projected into
//! a common subspace by `Θ = [Θ_H, Θ_M]` with orthonormal rows, a regression
//! map `P` ties that subspace to the labels, and a joint graph over labeled
//! and unlabeled nodes keeps neighbours close. Three variants are provided:
//! CoSpace (labels only), S-CoSpace (fixed k-NN graph on unlabeled landmarks)
//! and LeMA (graph blocks learned jointly).
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

// `!(x > y)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod graph;
pub mod numerics;
pub mod pipeline;
pub mod scalar;
pub mod seed;
pub mod solvers;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Dense `f64` matrix.
pub type Matrix = numerics::Mat<f64>;
pub type Model = pipeline::AlignmentModel<f64>;
pub type Config = pipeline::SolverConfig<f64>;
pub type Report = pipeline::FitReport<f64>;
pub type Samples = data::ModalityMatrix<f64>;
