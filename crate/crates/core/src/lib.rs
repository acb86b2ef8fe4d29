//! Non-perturbative persistence and transition amplitudes of a two-level
//! system in a moving field, with the non-adiabatic corrections to its
//! geometric phase.
//!
//! The modules build on each other bottom-up:
//!
//! - [`spectral_path`]: field paths, gauge-fixed eigenvectors and couplings
//! - [`engine`]: evolution of the persistence factor `S` and its oracles
//! - [`rotating_frame`]: exact solution for a uniformly precessing field
//! - [`phase_corrections`]: `ρ(x)` sweeps and weak-drive approximations
//! - [`nmr`]: transverse magnetization at whole precession cycles
//! - [`validate`]: cross-checks of every route against its oracle

// `!(v > 0.0)` guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod nmr;
pub mod ode;
pub mod output;
pub mod phase_corrections;
pub mod quadrature;
pub mod rotating_frame;
pub mod spectral_path;
mod spline;
pub mod validate;

pub mod cli;

pub use engine::{assemble, evolve, series_persistence, sliced_propagator, AmplitudeResult, AmplitudeState, Trajectory};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use phase_corrections::{epsilon_sweep, epsilon_unwrap, figure1_dataset, PhaseCurve, SweepConfig};
pub use rotating_frame::{exact_s, exact_state, solve_rotating_frame, RotatingFrameSolution};
pub use spectral_path::{
    coupling_at, instantaneous_eigensystem, make_kernel, CouplingKernel, ParameterPath, PrecessingPath, SampledPath,
};
