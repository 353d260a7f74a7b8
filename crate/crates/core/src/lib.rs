//! Greedy variable swapping for sparse linear regression.
//!
//! Given `y = Xβ* + w` with a `k`-sparse `β*`, [`swap::swap_run`] takes any
//! size-`k` support and repeatedly exchanges one selected variable for an
//! unselected one whenever the exchange lowers the least-squares loss
//! `‖Π⊥[S] y‖²`. It is meant as a wrapper around a cheaper initial estimator
//! (Lasso, FoBa, CoSaMP, ...), all of which live in [`solvers`].
//!
//! [`theory`] evaluates the correlation quantities that govern when the swap
//! iterations recover the true support, [`datagen`] builds the synthetic
//! designs used to benchmark them, and [`bench`] drives whole experiments.

pub mod bench;
pub mod datagen;
pub mod error;
pub mod ingest;
pub mod linalg;
pub mod solvers;
pub mod swap;
pub mod theory;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use linalg::{
    apply_swap, constrained_ls, fit_support, normalize_columns, swap_loss, ActiveFit,
    CoefficientVector, DesignMatrix, SupportSet,
};
pub use swap::{swap_m_run, swap_run, StopReason, SwapOptions, SwapStep, SwapTrace};
