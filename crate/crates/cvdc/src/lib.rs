//! Simulation and analysis toolkit for continuous-variable tripartite
//! entanglement and controlled dense coding.
//!
//! The crate models a three-party optical experiment: a two-mode squeezer
//! produces EPR-correlated beams, a small beamsplitter network distributes
//! them to a sender, a receiver and a controller, and photocurrent variances
//! of the resulting quadrature combinations are compared against the shot
//! noise limit. The same quantities are computed three independent ways:
//!
//! * [`gaussian`] + [`circuit`] + [`detection`]: an exact Gaussian-state
//!   engine (mean vector + covariance matrix, symplectic element maps) driven
//!   by a parsed optical netlist,
//! * [`analysis`]: scalar closed forms for the sum/difference photocurrent
//!   spectra, feed-forward gain optimization, and dense-coding channel
//!   capacities,
//! * [`montecarlo`]: seeded Gaussian sampling, synthetic photocurrent traces
//!   with a spectrum-analyzer emulation, and a binary pulse-code round trip.
//!
//! Conventions used throughout: quadratures are ordered `(X1, Y1, X2, Y2, ...)`
//! and normalized so the vacuum has unit variance per quadrature; noise powers
//! are reported relative to that shot noise limit, in linear units or as
//! `10*log10` decibels.

pub mod analysis;
pub mod circuit;
pub mod detection;
pub mod gaussian;
pub mod montecarlo;
pub mod numeric;
pub mod pipeline;

pub use analysis::{CapacityPoint, ExperimentParams};
pub use circuit::{CircuitSpec, SetupParams};
pub use detection::NoiseBudget;
pub use gaussian::{GaussianState, QuadratureForm};
