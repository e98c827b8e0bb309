//! Numerical theory of a high-dimensional elastic polymer in a Gaussian
//! random potential.
//!
//! The crate evaluates the Parisi functional of the model and solves its
//! critical-point equations in closed form (replica symmetric, one-step and
//! full replica symmetry breaking), sweeps phase diagrams, computes the
//! mean-squared displacement and its wandering exponent, implements the
//! finite-size circulant-Laplacian resolvent family that converges to the
//! continuum formulas, and simulates the finite model by Monte Carlo.
//!
//! Modules, bottom-up:
//!
//! * [`correlator`] — the disorder covariance `B` and its shape tests.
//! * [`model`] — parameters, Parisi measures and solved phase points.
//! * [`kernels`] — continuum and lattice resolvent kernels, spectral sums.
//! * [`parisi`] — the Parisi functional and its stationarity residuals.
//! * [`phase`] — phase classification, Larkin mass and the pair solvers.
//! * [`displacement`] — mean-squared displacement and wandering exponents.
//! * [`simulator`] — random-feature environments and Langevin sampling.

pub mod correlator;
pub mod displacement;
pub mod error;
pub mod kernels;
pub mod model;
pub mod numerics;
pub mod parisi;
pub mod phase;
pub mod simulator;

pub use correlator::{Atom, Correlator, UbShape};
pub use error::{Error, Result};
pub use kernels::{CirculantSymbol, Flavor, ResolventKernel};
pub use model::{ModelParams, ParisiMeasure, Phase, RsbSolution};
pub use parisi::StationarityResiduals;
