//! Shot-level density-matrix circuit simulation with configurable noise,
//! and the CUP estimation protocols built on it.

pub mod circuit;
pub mod clifford;
pub mod fit;
pub mod noise;
pub mod protocols;
pub mod runner;
pub mod state;

pub use circuit::{CircuitSpec, Gate};
pub use fit::{fit_decay, DecayFit};
pub use noise::NoiseModel;
pub use protocols::{
    channel_dilation_circuit, estimate_cup_direct_choi, estimate_cup_direct_complementarity,
    interleaved_sequence_circuit, run_efficient_urb, run_interleaved_urb, CupEstimate, InputScheme,
    UrbOptions, UrbTarget,
};
pub use runner::{ground_state, run_circuit, swap_test};
pub use state::DensityState;
