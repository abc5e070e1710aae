//! Fast-slow stochastic normal forms near critical transitions.
//!
//! The crate bundles the pieces needed to study early-warning signs on the
//! classical normal forms (fold, transcritical, pitchfork, Hopf) with a
//! slowly drifting parameter:
//!
//! - [`model`]: the model catalog, critical manifolds and their stability,
//!   recovery exponents and transition metadata.
//! - [`sde`]: seeded Euler–Maruyama paths and ensembles with absorbing walls.
//! - [`ou`]: Ornstein–Uhlenbeck closed forms, variance neighborhoods around
//!   the slow manifold and OU parameter estimation.
//! - [`fokker_planck`]: stationary densities with reflecting walls, the
//!   Arnold–Boxler closed forms and density shape classification.
//! - [`delay`]: fold jump delay, contraction and the Hopf way-in/way-out map.
//! - [`indicators`]: ensemble and sliding-window variance, lag-k
//!   autocorrelation and trend fits.
//! - [`config`], [`csv`], [`experiments`]: configuration parsing, CSV output
//!   and dataset recipes for each figure.

pub mod config;
pub mod csv;
pub mod delay;
pub mod error;
pub mod experiments;
pub mod fokker_planck;
pub mod indicators;
pub mod model;
pub mod numerics;
pub mod ou;
pub mod sde;

pub use error::{Error, Result};
pub use model::{ModelKind, ModelSpec, NoiseType};
