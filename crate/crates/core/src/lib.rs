//! Polarization moments of two-mode quantum states of light.
//!
//! States are handled excitation manifold by excitation manifold: the
//! `N`-photon block of a two-mode density matrix lives in the basis
//! `|m, N-m>`, `m = 0..=N`, where `m` counts photons in the horizontal mode.
//! Every matrix in this crate uses that ordering, so index `m` of a manifold
//! block is the eigenvector of `S3` with eigenvalue `2m - N`.
//!
//! The crate is organized by task:
//!
//! * [`fock_state`] builds and validates states from declarative specs.
//! * [`stokes_algebra`] provides the Stokes operators and the SU(2)
//!   rotations realizing measurements along arbitrary directions.
//! * [`moment_engine`] computes raw and central moments, packed as
//!   symmetric tensors, the covariance matrix and sphere scans.
//! * [`tomography`] reconstructs moment packs from directional statistics.
//! * [`experiment_sim`] simulates the photon-counting protocol.
//! * [`classifier`] decides order-by-order isotropy and the 3-photon classes.
//!
//! Data-parallel loops (scans, sampling, Monte Carlo) run on rayon when the
//! default `parallel` feature is enabled and sequentially otherwise; results
//! are identical either way.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod error;
pub mod experiment_sim;
pub mod fock_state;
pub mod format;
pub mod linalg;
pub mod moment_engine;
pub mod parallel;
pub mod stokes_algebra;
pub mod tomography;

pub use error::{Error, Result};
pub use fock_state::{ManifoldDensity, PolarizationState, StateSpec};
pub use moment_engine::{Manifold, MomentTensors, SymmetricPack};
pub use stokes_algebra::{Direction, StokesMatrices};
