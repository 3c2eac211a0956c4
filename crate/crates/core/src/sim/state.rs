//! Multi-qubit density-matrix state with gate embedding, channel
//! application on qubit subsets, depolarizing noise, resets and Z-basis
//! sampling.

use nalgebra::DMatrix;
use rand::Rng;

use crate::channel::QuantumChannel;
use crate::error::{Error, Result};
use crate::operator::{DenseOperator, SeededRng, C64, ZERO};

/// Density matrix on `n_qubits` wires; qubit 0 is the most-significant bit
/// of the row/column index.
#[derive(Clone, Debug)]
pub struct DensityState {
    n_qubits: usize,
    rho: DMatrix<C64>,
}

impl DensityState {
    /// All qubits in |0>.
    pub fn ground(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        let mut rho = DMatrix::zeros(d, d);
        rho[(0, 0)] = C64::new(1.0, 0.0);
        Self { n_qubits, rho }
    }

    /// Start from an explicit density matrix on all wires.
    pub fn from_density(n_qubits: usize, rho: &DenseOperator) -> Result<Self> {
        let d = 1usize << n_qubits;
        if rho.rows() != d || rho.cols() != d {
            return Err(Error::Dimension(format!(
                "state is {}x{} but {n_qubits} qubits need {d}x{d}",
                rho.rows(),
                rho.cols()
            )));
        }
        Ok(Self {
            n_qubits,
            rho: rho.matrix().clone(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn density(&self) -> DenseOperator {
        DenseOperator::from_matrix(self.rho.clone())
    }

    fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    fn bit(&self, index: usize, qubit: usize) -> usize {
        (index >> (self.n_qubits - 1 - qubit)) & 1
    }

    /// Expand an operator on `qubits` (first listed = most significant of
    /// the small matrix) to the full register.
    fn embed(&self, op: &DenseOperator, qubits: &[usize]) -> DMatrix<C64> {
        let k = qubits.len();
        let d_sub = 1usize << k;
        debug_assert_eq!(op.rows(), d_sub);
        let d = self.dim();
        let mut full = DMatrix::zeros(d, d);
        for r in 0..d {
            let r_sub = {
                let mut x = 0usize;
                for &q in qubits {
                    x = (x << 1) | self.bit(r, q);
                }
                x
            };
            for c in 0..d {
                // Bits outside the support must agree.
                let mut outside_match = true;
                for q in 0..self.n_qubits {
                    if !qubits.contains(&q) && self.bit(r, q) != self.bit(c, q) {
                        outside_match = false;
                        break;
                    }
                }
                if !outside_match {
                    continue;
                }
                let c_sub = {
                    let mut x = 0usize;
                    for &q in qubits {
                        x = (x << 1) | self.bit(c, q);
                    }
                    x
                };
                let v = op.get(r_sub, c_sub);
                if v != ZERO {
                    full[(r, c)] = v;
                }
            }
        }
        full
    }

    /// Apply a unitary on the given qubits.
    pub fn apply_unitary(&mut self, op: &DenseOperator, qubits: &[usize]) {
        let full = self.embed(op, qubits);
        self.rho = &full * &self.rho * full.adjoint();
    }

    /// Apply a Kraus channel on the given qubits (channel dimension must be
    /// 2^k for k listed qubits, with equal input and output dimension).
    pub fn apply_channel(&mut self, ch: &QuantumChannel, qubits: &[usize]) -> Result<()> {
        let d_sub = 1usize << qubits.len();
        if ch.d_in() != d_sub || ch.d_out() != d_sub {
            return Err(Error::Dimension(format!(
                "channel is {}->{} but acts on {} qubits",
                ch.d_in(),
                ch.d_out(),
                qubits.len()
            )));
        }
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for k in ch.kraus() {
            let full = self.embed(k, qubits);
            out += &full * &self.rho * full.adjoint();
        }
        self.rho = out;
        Ok(())
    }

    /// Depolarize the listed qubits with probability p:
    /// rho -> (1-p) rho + p (I/2^k (x) tr_qubits rho).
    pub fn depolarize(&mut self, qubits: &[usize], p: f64) {
        if p <= 0.0 {
            return;
        }
        let d = self.dim();
        let k = qubits.len();
        let scale = 1.0 / (1usize << k) as f64;
        let mut mixed = DMatrix::zeros(d, d);
        // mixed[(r,c)] = delta on support bits * sum over support values of
        // rho entries with matching outside bits.
        for r in 0..d {
            for c in 0..d {
                let mut support_equal = true;
                for &q in qubits {
                    if self.bit(r, q) != self.bit(c, q) {
                        support_equal = false;
                        break;
                    }
                }
                if !support_equal {
                    continue;
                }
                // Sum rho over all assignments of the support bits shared by
                // row and column.
                let mut acc = ZERO;
                for assign in 0..(1usize << k) {
                    let mut rr = r;
                    let mut cc = c;
                    for (pos, &q) in qubits.iter().enumerate() {
                        let bit = (assign >> (k - 1 - pos)) & 1;
                        let mask = 1usize << (self.n_qubits - 1 - q);
                        rr = (rr & !mask) | (bit * mask);
                        cc = (cc & !mask) | (bit * mask);
                    }
                    acc += self.rho[(rr, cc)];
                }
                mixed[(r, c)] = acc * C64::new(scale, 0.0);
            }
        }
        self.rho = &self.rho * C64::new(1.0 - p, 0.0) + mixed * C64::new(p, 0.0);
    }

    /// Incoherent reset: trace out the qubit and re-prepare |0>.
    pub fn reset(&mut self, qubit: usize) {
        let p0 = DenseOperator::from_real_rows(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let p0_flip = DenseOperator::from_real_rows(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let ch = QuantumChannel::new(vec![p0, p0_flip]).expect("reset Kraus pair");
        self.apply_channel(&ch, &[qubit]).expect("qubit in range");
    }

    /// Probability of reading 1 on the qubit in the Z basis.
    pub fn prob_one(&self, qubit: usize) -> f64 {
        let d = self.dim();
        let mut p = 0.0;
        for r in 0..d {
            if self.bit(r, qubit) == 1 {
                p += self.rho[(r, r)].re;
            }
        }
        p.clamp(0.0, 1.0)
    }

    /// Sample `shots` Z-basis outcomes of one qubit, flipping each readout
    /// with probability `flip`.
    pub fn sample_z(&self, qubit: usize, shots: usize, flip: f64, rng: &mut SeededRng) -> Vec<u8> {
        let p1 = self.prob_one(qubit);
        (0..shots)
            .map(|_| {
                let mut o = u8::from(rng.gen::<f64>() < p1);
                if flip > 0.0 && rng.gen::<f64>() < flip {
                    o ^= 1;
                }
                o
            })
            .collect()
    }
}

/// Mean Z value of sampled outcomes (+1 for 0, -1 for 1).
pub fn mean_z(outcomes: &[u8]) -> f64 {
    if outcomes.is_empty() {
        return 0.0;
    }
    let ones: usize = outcomes.iter().map(|&o| o as usize).sum();
    1.0 - 2.0 * ones as f64 / outcomes.len() as f64
}

/// Unbiased estimate of (mean Z)^2 from +-1 shot outcomes:
/// (S^2 - n) / (n (n - 1)) for S the outcome sum.
pub fn unbiased_mean_z_squared(outcomes: &[u8]) -> f64 {
    let n = outcomes.len() as f64;
    if outcomes.len() < 2 {
        return mean_z(outcomes).powi(2);
    }
    let s: f64 = outcomes.iter().map(|&o| 1.0 - 2.0 * o as f64).sum();
    (s * s - n) / (n * (n - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{cnot_ab, hadamard, pauli_x, swap_gate, tensor, DenseOperator};

    #[test]
    fn embed_matches_kron_for_adjacent_qubits() {
        let mut s = DensityState::ground(3);
        s.apply_unitary(&pauli_x(), &[1]);
        // X on qubit 1 of |000> gives |010> = index 2.
        let rho = s.density();
        assert!((rho.get(2, 2).re - 1.0).abs() < 1e-14);

        let mut s = DensityState::ground(3);
        s.apply_unitary(&cnot_ab(), &[0, 1]);
        let expected = {
            let full = tensor(&cnot_ab(), &DenseOperator::identity(2));
            let mut t = DensityState::ground(3);
            t.apply_unitary(&full, &[0, 1, 2]);
            t.density()
        };
        assert!(s.density().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn embed_handles_permuted_qubits() {
        // CNOT with control 2, target 0 on |001> flips qubit 0 -> |101>.
        let mut s = DensityState::ground(3);
        s.apply_unitary(&pauli_x(), &[2]);
        s.apply_unitary(&cnot_ab(), &[2, 0]);
        let rho = s.density();
        assert!((rho.get(0b101, 0b101).re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn swap_via_embed() {
        let mut s = DensityState::ground(2);
        s.apply_unitary(&pauli_x(), &[1]); // |01>
        s.apply_unitary(&swap_gate(), &[0, 1]); // |10>
        assert!((s.density().get(2, 2).re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reset_discards_correlations() {
        // Bell pair, then reset qubit 1: qubit 0 stays mixed, qubit 1 is |0>.
        let mut s = DensityState::ground(2);
        s.apply_unitary(&hadamard(), &[0]);
        s.apply_unitary(&cnot_ab(), &[0, 1]);
        s.reset(1);
        let rho = s.density();
        let expected = tensor(
            &DenseOperator::maximally_mixed(2),
            &DenseOperator::basis_projector(0, 2),
        );
        assert!(rho.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn depolarize_full_strength_mixes_support() {
        let mut s = DensityState::ground(2);
        s.apply_unitary(&hadamard(), &[0]);
        s.apply_unitary(&cnot_ab(), &[0, 1]);
        s.depolarize(&[0], 1.0);
        let expected = tensor(
            &DenseOperator::maximally_mixed(2),
            &DenseOperator::maximally_mixed(2),
        );
        assert!(s.density().max_abs_diff(&expected) < 1e-12);
        // Trace preserved.
        assert!((s.density().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn depolarize_partial_keeps_convex_combination() {
        let mut s = DensityState::ground(1);
        s.apply_unitary(&hadamard(), &[0]);
        let pure = s.density();
        s.depolarize(&[0], 0.3);
        let expected = pure
            .scale_re(0.7)
            .add(&DenseOperator::maximally_mixed(2).scale_re(0.3));
        assert!(s.density().max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn sampling_statistics() {
        let mut s = DensityState::ground(1);
        s.apply_unitary(&hadamard(), &[0]);
        let mut rng = SeededRng::new(50);
        let outcomes = s.sample_z(0, 10_000, 0.0, &mut rng);
        let z = mean_z(&outcomes);
        assert!(z.abs() < 4.0 / 100.0, "mean Z {z}");
        // Readout flip of 1.0 inverts deterministic outcomes.
        let s0 = DensityState::ground(1);
        let flipped = s0.sample_z(0, 100, 1.0, &mut rng);
        assert!(flipped.iter().all(|&o| o == 1));
    }

    #[test]
    fn unbiased_square_estimator() {
        // For a deterministic outcome the estimator is exactly 1.
        let ones = vec![1u8; 50];
        assert!((unbiased_mean_z_squared(&ones) - 1.0).abs() < 1e-12);
        // For a fair coin the estimator is unbiased around 0.
        let mut rng = SeededRng::new(51);
        let s = {
            let mut st = DensityState::ground(1);
            st.apply_unitary(&hadamard(), &[0]);
            st
        };
        let mut acc = 0.0;
        let trials = 2000;
        for _ in 0..trials {
            let outcomes = s.sample_z(0, 20, 0.0, &mut rng);
            acc += unbiased_mean_z_squared(&outcomes);
        }
        let mean = acc / trials as f64;
        assert!(mean.abs() < 0.01, "biased estimator: {mean}");
    }
}
