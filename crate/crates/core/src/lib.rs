//! Unitarity of quantum and classical channels, compatible-unitarity-pair
//! (CUP) sets, and shot-level simulations of the estimation protocols.
//!
//! The crate is organized bottom-up:
//!
//! - [`operator`]: dense complex linear algebra (tensor products, partial
//!   traces, Haar sampling, fractional unitary powers);
//! - [`channel`]: Kraus-form quantum channels, Pauli-transfer blocks, Choi
//!   states and the concrete channel families of interest;
//! - [`classical`]: column-stochastic classical channels and the classical
//!   1-bit-to-2-bit constructions;
//! - [`unitarity`]: the unitarity of a channel computed by several
//!   independent routes, plus spectral lower bounds;
//! - [`cupset`]: CUP sample generation, band/no-hiding checks and the
//!   depolarizing deformation model;
//! - [`sim`]: a density-matrix circuit simulator with configurable noise and
//!   the SWAP-test / randomized-benchmarking estimation pipelines.

pub mod channel;
pub mod classical;
pub mod cupset;
pub mod error;
pub mod families;
pub mod operator;
pub mod sim;
pub mod unitarity;

pub use error::{Error, Result};
pub use operator::{DenseOperator, SeededRng, C64};
