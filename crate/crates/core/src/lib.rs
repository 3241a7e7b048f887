//! Numerical verification of Lieb-Thirring inequalities for one-dimensional
//! Schrödinger operators with Hermitian matrix-valued potentials, the
//! matrix Sobolev inequality behind them, and the associated constants.

pub mod campaign;
pub mod constants;
mod eigensolver;
pub mod error;
pub mod extremal;
pub mod grid;
pub mod linalg;
pub mod ltcheck;
pub mod potentials;
pub mod quad;
pub mod report;
pub mod sobolev;
pub mod spectra;

pub use error::{Error, Result};
pub use grid::{richardson, Grid, GridFunction};
pub use potentials::{random_psd_potential, sample, trace_power_integral, MatrixPotentialField, PotentialSpec};
pub use spectra::{assemble, converged_spectrum, negative_eigenvalues, riesz_mean, DiscretizedOperator, Spectrum};
