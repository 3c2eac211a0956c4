//! Noisy execution of [`CircuitSpec`]s on the density-matrix state, plus the
//! SWAP-test overlap estimator.

use crate::error::{Error, Result};
use crate::operator::{
    cnot_ab, hadamard, pauli_x, ry, rz, sqrt_x, swap_gate, tensor, DenseOperator, SeededRng,
};
use crate::sim::circuit::{CircuitSpec, Gate};
use crate::sim::noise::NoiseModel;
use crate::sim::state::{mean_z, DensityState};

fn cswap_matrix() -> DenseOperator {
    // |0><0| (x) I_4 + |1><1| (x) SWAP, control = most significant.
    let p0 = DenseOperator::basis_projector(0, 2);
    let p1 = DenseOperator::basis_projector(1, 2);
    tensor(&p0, &DenseOperator::identity(4)).add(&tensor(&p1, &swap_gate()))
}

fn gate_matrix(gate: &Gate) -> Option<(DenseOperator, Vec<usize>)> {
    match gate {
        Gate::H(q) => Some((hadamard(), vec![*q])),
        Gate::X(q) => Some((pauli_x(), vec![*q])),
        Gate::SqrtX(q) => Some((sqrt_x(), vec![*q])),
        Gate::Ry(q, theta) => Some((ry(*theta), vec![*q])),
        Gate::Rz(q, theta) => Some((rz(*theta), vec![*q])),
        Gate::Cnot(c, t) => Some((cnot_ab(), vec![*c, *t])),
        Gate::Cswap(c, a, b) => Some((cswap_matrix(), vec![*c, *a, *b])),
        Gate::Swap(a, b) => Some((swap_gate(), vec![*a, *b])),
        Gate::Unitary(m, qs) => Some((m.clone(), qs.clone())),
        Gate::Reset(_) => None,
    }
}

/// Evolve `state` through one gate followed by that gate's depolarizing
/// noise on its support.
pub fn apply_gate_with_noise(state: &mut DensityState, gate: &Gate, noise: &NoiseModel) {
    match gate_matrix(gate) {
        Some((m, qs)) => {
            state.apply_unitary(&m, &qs);
            let p = noise.depolarizing_for(gate.noise_key());
            if p > 0.0 {
                state.depolarize(&qs, p);
            }
        }
        None => {
            if let Gate::Reset(q) = gate {
                state.reset(*q);
                let p = noise.depolarizing_for("reset");
                if p > 0.0 {
                    state.depolarize(&[*q], p);
                }
            }
        }
    }
}

/// Apply the prep-side SPAM error: one depolarizing pass over every qubit.
pub fn apply_prep_spam(state: &mut DensityState, noise: &NoiseModel) {
    if noise.spam_prep_error > 0.0 {
        for q in 0..state.n_qubits() {
            state.depolarize(&[q], noise.spam_prep_error);
        }
    }
}

/// Run a circuit with the given noise on an explicit input state, using an
/// explicit random stream for the shots. Returns the pre-measurement
/// density matrix and the sampled outcomes (empty when the circuit has no
/// measurement).
pub fn run_circuit_with_rng(
    spec: &CircuitSpec,
    noise: &NoiseModel,
    input_state: &DenseOperator,
    rng: &mut SeededRng,
) -> Result<(DenseOperator, Vec<u8>)> {
    spec.validate()?;
    noise.validate()?;
    let mut state = DensityState::from_density(spec.n_qubits, input_state)?;
    apply_prep_spam(&mut state, noise);
    for gate in &spec.ops {
        apply_gate_with_noise(&mut state, gate, noise);
    }
    let outcomes = match spec.measure {
        Some(q) => state.sample_z(q, noise.shots, noise.spam_meas_error, rng),
        None => Vec::new(),
    };
    Ok((state.density(), outcomes))
}

/// As [`run_circuit_with_rng`], seeding the shot stream from the noise
/// model; identical inputs give identical outcomes.
pub fn run_circuit(
    spec: &CircuitSpec,
    noise: &NoiseModel,
    input_state: &DenseOperator,
) -> Result<(DenseOperator, Vec<u8>)> {
    let mut rng = SeededRng::new(noise.seed);
    run_circuit_with_rng(spec, noise, input_state, &mut rng)
}

/// SWAP test between the states prepared by two equal-width circuits:
/// ancilla H, transversal controlled-SWAP, H, Z measurement. The returned
/// shot-estimated Z expectation approximates tr(rho sigma).
pub fn swap_test(
    rho_prep: &CircuitSpec,
    sigma_prep: &CircuitSpec,
    noise: &NoiseModel,
) -> Result<f64> {
    let mut rng = SeededRng::new(noise.seed);
    swap_test_with_rng(rho_prep, sigma_prep, noise, &mut rng)
}

pub fn swap_test_with_rng(
    rho_prep: &CircuitSpec,
    sigma_prep: &CircuitSpec,
    noise: &NoiseModel,
    rng: &mut SeededRng,
) -> Result<f64> {
    if rho_prep.n_qubits != sigma_prep.n_qubits {
        return Err(Error::Dimension(
            "SWAP test needs equal-dimension state preparations".into(),
        ));
    }
    let n = rho_prep.n_qubits;
    let mut spec = CircuitSpec::new(1 + 2 * n);
    let shift = |ops: &[Gate], offset: usize| -> Result<Vec<Gate>> {
        ops.iter()
            .map(|g| {
                Ok(match g {
                    Gate::H(q) => Gate::H(q + offset),
                    Gate::X(q) => Gate::X(q + offset),
                    Gate::SqrtX(q) => Gate::SqrtX(q + offset),
                    Gate::Ry(q, t) => Gate::Ry(q + offset, *t),
                    Gate::Rz(q, t) => Gate::Rz(q + offset, *t),
                    Gate::Cnot(c, t) => Gate::Cnot(c + offset, t + offset),
                    Gate::Cswap(c, a, b) => Gate::Cswap(c + offset, a + offset, b + offset),
                    Gate::Swap(a, b) => Gate::Swap(a + offset, b + offset),
                    Gate::Reset(q) => Gate::Reset(q + offset),
                    Gate::Unitary(m, qs) => {
                        Gate::Unitary(m.clone(), qs.iter().map(|q| q + offset).collect())
                    }
                })
            })
            .collect()
    };
    for g in shift(&rho_prep.ops, 1)? {
        spec.push(g);
    }
    for g in shift(&sigma_prep.ops, 1 + n)? {
        spec.push(g);
    }
    spec.push(Gate::H(0));
    for i in 0..n {
        spec.push(Gate::Cswap(0, 1 + i, 1 + n + i));
    }
    spec.push(Gate::H(0));
    let spec = spec.with_measurement(0);
    let (_, outcomes) = run_circuit_with_rng(&spec, noise, &ground_state(1 + 2 * n), rng)?;
    Ok(mean_z(&outcomes))
}

/// |0...0><0...0| on n qubits.
pub fn ground_state(n_qubits: usize) -> DenseOperator {
    let d = 1usize << n_qubits;
    DenseOperator::basis_projector(0, d)
}
