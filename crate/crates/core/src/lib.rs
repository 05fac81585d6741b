//! Simulation and verification engine for a long-range interacting particle
//! system on a periodic 1-D lattice whose continuum limit is a stochastic
//! Ginzburg-Landau (Allen-Cahn) equation.
//!
//! The crate is organized around the objects of that system:
//!
//! * [`kernel`] — interaction profiles and their normalized lattice samples;
//! * [`operator`] — the long-range difference operator as a symmetric
//!   circulant, with closed-form spectra in both index conventions;
//! * [`semigroup`] — discrete and continuous heat kernels as spectral sums;
//! * [`noise`] — seeded space-time white noise on a master grid with exact
//!   aggregation to coarser grids, so multi-resolution runs share one sheet;
//! * [`dynamics`] — explicit and semi-implicit integration of the lattice
//!   SDE, truncated and one-sided drifts, and hitting-time detection;
//! * [`experiments`] — multi-resolution, multi-replica studies that turn
//!   convergence claims into measurable rate fits and bound checks;
//! * [`oracles`] — independent dense/quadrature reference paths used by the
//!   verification suite.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fft;
pub mod kernel;
pub mod noise;
pub mod operator;
pub mod oracles;
pub mod report;
pub mod semigroup;

pub use error::{Error, Result};
