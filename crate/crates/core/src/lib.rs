//! Harmonic-domain modeling and control for periodic systems.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`phasor`] lifts sampled signals into sliding-window Fourier
//!    coefficients (dynamic phasors) and back, with a consistency test for
//!    trajectories that possess a time-domain representative.
//! 2. [`toeplitz`] provides the truncated block-Toeplitz operator algebra
//!    that carries T-periodic matrix functions into the harmonic domain.
//! 3. [`model`] assembles harmonic models of linear time-periodic and
//!    bilinear affine plants; [`solvers`] solves the lifted Lyapunov,
//!    Sylvester and Riccati equations and cross-checks them against a
//!    time-domain periodic-ODE oracle.
//! 4. [`equilibrium`] shapes the steady state by optimizing the control
//!    phasors; [`control`] synthesizes stabilizing and disturbance-rejecting
//!    feedback laws from the harmonic solutions.
//! 5. [`sim`] validates everything by fixed-step time-domain simulation of
//!    the single-phase rectifier bridge under the synthesized controllers.

pub mod config;
pub mod control;
pub mod equilibrium;
pub mod error;
pub mod io;
pub mod model;
pub mod phasor;
pub mod sim;
pub mod solvers;
pub mod toeplitz;

pub use config::PhasorConfig;
pub use control::{ForwardingController, HarmonicController};
pub use equilibrium::{EquilibriumResult, EquilibriumSpec};
pub use error::{Error, Result};
pub use model::{BilinearAffineSystem, HarmonicBilinearModel, LtpSystem};
pub use phasor::{PhasorTrajectory, PhasorVector, SampledSignal};
pub use sim::{RectifierParams, Scenario, SimTrace};
pub use toeplitz::{PeriodicMatrixSamples, StructureReport, ToeplitzOperator};
