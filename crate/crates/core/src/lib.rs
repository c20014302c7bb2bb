//! Reconstruction of the photon-number distribution of a single-mode field
//! from on/off (click / no-click) detection at many quantum efficiencies.
//!
//! The crate is organised bottom-up:
//!
//! * [`states`] builds ground-truth photon distributions (coherent, displaced
//!   squeezed, Fock superpositions) on a truncated number basis.
//! * [`detection`] models the on/off detector: efficiency grids, the response
//!   matrix `(1 - eta)^n`, exact no-click probabilities and Monte Carlo counts.
//! * [`inversion`] is the direct linear baseline (Vandermonde / least squares)
//!   together with conditioning diagnostics.
//! * [`em`] is the expectation-maximization reconstruction with its
//!   convergence diagnostics and Fisher-information error bars.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`). The
//! `*64` aliases below are what most callers want.
//!
//! ```
//! use onoff_core::{reconstruct, sample_dataset, EfficiencyGrid, EmConfig, StateSpec};
//!
//! let truth = StateSpec::Coherent { mean_photons: 5.2 }.distribution(20)?;
//! let grid = EfficiencyGrid::uniform(0.02, 0.99, 50)?;
//! let data = sample_dataset(&truth, &grid, 100_000, 1, None)?;
//! let result = reconstruct(&data, &grid, 20, &EmConfig::new(10_000), Some(&truth))?;
//! assert!(result.final_row().fidelity.unwrap() > 0.99);
//! # Ok::<(), onoff_core::Error>(())
//! ```

// `!(x > y)` range checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod em;
pub mod error;
pub mod inversion;
pub mod linalg;
pub mod scalar;
pub mod states;

pub use detection::{
    off_probabilities, off_probability, sample_dataset, sample_dataset_with_shots, EfficiencyGrid,
    OnOffDataset, ResponseMatrix,
};
pub use em::{
    em_step, error_bars, fidelity, fisher_information, normalization_drift, reconstruct,
    total_error, EmConfig, ReconstructionResult, TraceRow, UpdateNormalization,
};
pub use error::{Error, Result};
pub use inversion::{
    condition_number, invert_least_squares, invert_square, nonphysical_entries, VandermondeSystem,
};
pub use scalar::Scalar;
pub use states::{
    coherent_distribution, fock_superposition_distribution, squeezed_distribution,
    PhotonDistribution, SqueezeParameters, StateSpec,
};

pub type PhotonDistribution64 = PhotonDistribution<f64>;
pub type PhotonDistribution32 = PhotonDistribution<f32>;
pub type StateSpec64 = StateSpec<f64>;
pub type EfficiencyGrid64 = EfficiencyGrid<f64>;
pub type EfficiencyGrid32 = EfficiencyGrid<f32>;
pub type ResponseMatrix64 = ResponseMatrix<f64>;
pub type EmConfig64 = EmConfig<f64>;
pub type ReconstructionResult64 = ReconstructionResult<f64>;
pub type TraceRow64 = TraceRow<f64>;
