//! Frequency-domain estimation of spot volatility matrices and integrated
//! volatility functionals from irregular, asynchronous multivariate
//! high-frequency observations.
//!
//! The pipeline:
//! 1. [`spectrum`] — nonuniform Fourier-Stieltjes transforms of the
//!    increments and their scaled (Bohr) convolution, giving Fourier
//!    coefficients of the spot covariance path;
//! 2. [`spot`] — Fourier-Fejér inversion of the coefficients onto a uniform
//!    grid, plus PSD conditioning;
//! 3. [`functionals`] — plug-in Riemann sums of smooth matrix functionals
//!    with boundary trimming;
//! 4. [`inference`] — asymptotic-variance and asynchronicity-bias
//!    estimation, studentization and confidence intervals.
//!
//! [`simulate`] generates ground-truth latent paths and asynchronous
//! samplings for validation, [`rv`] is the finite-difference baseline, and
//! [`kernels`] holds the trigonometric kernels and temporal-spacing
//! statistics everything else is built on.

// `!(x > 0.0)` guards are deliberate: they also reject NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod functionals;
pub mod grid;
pub mod inference;
pub mod kernels;
pub mod rv;
pub mod simulate;
pub mod spectrum;
pub mod spot;
pub mod stats;

pub use error::{Result, VolError};
pub use functionals::{Functional, TuningParams, VolFunctional};
pub use grid::{ObservationGrid, TickSeries};
pub use inference::EstimateReport;
pub use simulate::LatentPath;
pub use spectrum::{SpectrumEstimate, StieltjesTransform};
pub use spot::{SpotKind, SpotPath};
