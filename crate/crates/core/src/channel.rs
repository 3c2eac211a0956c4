//! Quantum channels in Kraus form, with derived Pauli-transfer and Choi
//! views, marginalization of global unitaries, and the concrete hiding /
//! recovery channels.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operator::{paulis, tensor, DenseOperator, SeededRng, C64, ONE, OP_TOL, ZERO};

/// Tolerance for the trace-preservation check sum_i K_i^dag K_i = I.
pub const TP_TOL: f64 = 1e-9;

/// Completely positive trace-preserving map with declared input/output
/// dimensions, stored as a Kraus list.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    d_in: usize,
    d_out: usize,
    kraus: Vec<DenseOperator>,
}

impl QuantumChannel {
    /// Build a channel from Kraus operators, enforcing trace preservation.
    pub fn new(kraus: Vec<DenseOperator>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidChannel("empty Kraus list".into()));
        }
        let d_out = kraus[0].rows();
        let d_in = kraus[0].cols();
        for k in &kraus {
            if k.rows() != d_out || k.cols() != d_in {
                return Err(Error::InvalidChannel(
                    "Kraus operators have inconsistent shapes".into(),
                ));
            }
        }
        let ch = Self { d_in, d_out, kraus };
        let dev = ch.tp_deviation();
        if dev > TP_TOL {
            return Err(Error::InvalidChannel(format!(
                "not trace preserving, deviation {dev:.3e}"
            )));
        }
        Ok(ch)
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kraus(&self) -> &[DenseOperator] {
        &self.kraus
    }

    /// max |(sum_i K_i^dag K_i - I)_{jk}|.
    pub fn tp_deviation(&self) -> f64 {
        let mut acc = DenseOperator::zeros(self.d_in, self.d_in);
        for k in &self.kraus {
            acc = acc.add(&k.dagger().dot(k));
        }
        acc.max_abs_diff(&DenseOperator::identity(self.d_in))
    }

    pub fn identity(d: usize) -> Self {
        Self {
            d_in: d,
            d_out: d,
            kraus: vec![DenseOperator::identity(d)],
        }
    }

    pub fn from_unitary(u: &DenseOperator) -> Result<Self> {
        if !u.is_unitary(OP_TOL) {
            return Err(Error::NotUnitary {
                deviation: u.unitarity_deviation(),
                tol: OP_TOL,
            });
        }
        Ok(Self {
            d_in: u.cols(),
            d_out: u.rows(),
            kraus: vec![u.clone()],
        })
    }

    /// Constant channel sending every input of dimension `d_in` to `sigma`.
    pub fn completely_depolarizing(d_in: usize, sigma: &DenseOperator) -> Result<Self> {
        sigma.check_density_matrix(OP_TOL)?;
        let mut kraus = Vec::new();
        for (p, v) in sigma.hermitian_eigen() {
            if p <= 1e-14 {
                continue;
            }
            let amp = C64::new(p.sqrt(), 0.0);
            for i in 0..d_in {
                // sqrt(p) |v><i|
                let bra = DenseOperator::ket(i, d_in).dagger();
                kraus.push(v.dot(&bra).scale(amp));
            }
        }
        Self::new(kraus)
    }

    /// D_p = (1-p) id + p D, with D constant to the maximally mixed state.
    pub fn depolarizing_mix(d: usize, p: f64) -> Result<Self> {
        let id = Self::identity(d);
        let dep = Self::completely_depolarizing(d, &DenseOperator::maximally_mixed(d))?;
        Self::mix(&[(1.0 - p, id), (p, dep)])
    }

    /// Convex mixture sum_i p_i E_i of channels with matching dimensions.
    pub fn mix(parts: &[(f64, QuantumChannel)]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidChannel("empty mixture".into()));
        }
        let (d_in, d_out) = (parts[0].1.d_in, parts[0].1.d_out);
        let mut kraus = Vec::new();
        for (p, ch) in parts {
            if ch.d_in != d_in || ch.d_out != d_out {
                return Err(Error::Dimension("mixture of mismatched channels".into()));
            }
            if *p < 0.0 {
                return Err(Error::InvalidArgument("negative mixture weight".into()));
            }
            let amp = C64::new(p.sqrt(), 0.0);
            for k in &ch.kraus {
                kraus.push(k.scale(amp));
            }
        }
        Self::new(kraus)
    }

    /// Composition self . other (apply `other` first).
    pub fn compose(&self, other: &QuantumChannel) -> Result<Self> {
        if other.d_out != self.d_in {
            return Err(Error::Dimension(format!(
                "cannot compose {}->{} after {}->{}",
                self.d_in, self.d_out, other.d_in, other.d_out
            )));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(a.dot(b));
            }
        }
        Self::new(kraus)
    }

    /// Apply the channel: sum_i K_i rho K_i^dag.
    pub fn apply(&self, rho: &DenseOperator) -> Result<DenseOperator> {
        if rho.rows() != self.d_in || rho.cols() != self.d_in {
            return Err(Error::Dimension(format!(
                "state is {}x{} but channel input dimension is {}",
                rho.rows(),
                rho.cols(),
                self.d_in
            )));
        }
        let mut out = DenseOperator::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            out = out.add(&k.dot(rho).dot(&k.dagger()));
        }
        Ok(out)
    }

    /// Minimum eigenvalue of the Choi state; >= -tol certifies complete
    /// positivity numerically.
    pub fn choi_min_eigenvalue(&self) -> f64 {
        let j = choi_state(self);
        j.hermitian_eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Both marginal channels of the global channel rho -> U (rho (x) ancilla)
/// U^dag: E keeps subsystem A (dimension `d_a`), the swapped marginal keeps
/// B. A pure ancilla yields a complementary pair; a mixed ancilla yields a
/// reversible pair.
pub fn marginal_channels(
    u_ab: &DenseOperator,
    d_a: usize,
    d_b: usize,
    ancilla: &DenseOperator,
) -> Result<(QuantumChannel, QuantumChannel)> {
    if !u_ab.is_unitary(OP_TOL) {
        return Err(Error::NotUnitary {
            deviation: if u_ab.is_square() {
                u_ab.unitarity_deviation()
            } else {
                f64::INFINITY
            },
            tol: OP_TOL,
        });
    }
    let d_total = d_a * d_b;
    if u_ab.rows() != d_total {
        return Err(Error::Dimension(format!(
            "unitary is {}x{} but d_A * d_B = {}",
            u_ab.rows(),
            u_ab.cols(),
            d_total
        )));
    }
    let d_anc = ancilla.rows();
    if d_anc == 0 || !d_total.is_multiple_of(d_anc) {
        return Err(Error::Dimension(format!(
            "ancilla dimension {d_anc} does not divide {d_total}"
        )));
    }
    ancilla.check_density_matrix(OP_TOL)?;
    let d_x = d_total / d_anc;

    // Spectral decomposition of the ancilla gives Kraus operators
    // K_{i,j} = sqrt(p_j) (bra_i on the traced factor) U (I_X (x) |psi_j>).
    let mut anc_kets: Vec<(f64, DenseOperator)> = Vec::new();
    for (p, v) in ancilla.hermitian_eigen() {
        if p > 1e-14 {
            anc_kets.push((p, v));
        }
    }

    let mut kraus_e = Vec::new();
    let mut kraus_ebar = Vec::new();
    for (p, psi) in &anc_kets {
        let inject = embed_ket_right(d_x, psi); // I_X (x) |psi>, shape d_total x d_x
        let u_inj = u_ab.dot(&inject);
        let amp = C64::new(p.sqrt(), 0.0);
        for i in 0..d_b {
            // (I_A (x) <i|_B) U (I_X (x) |psi>)
            kraus_e.push(project_out_b(&u_inj, d_a, d_b, i).scale(amp));
        }
        for i in 0..d_a {
            // (<i|_A (x) I_B) U (I_X (x) |psi>)
            kraus_ebar.push(project_out_a(&u_inj, d_a, d_b, i).scale(amp));
        }
    }
    Ok((
        QuantumChannel::new(kraus_e)?,
        QuantumChannel::new(kraus_ebar)?,
    ))
}

/// I_{d_x} (x) |psi> as a (d_x * d_anc) x d_x injection.
fn embed_ket_right(d_x: usize, psi: &DenseOperator) -> DenseOperator {
    let d_anc = psi.rows();
    let mut m = DMatrix::zeros(d_x * d_anc, d_x);
    for x in 0..d_x {
        for a in 0..d_anc {
            m[(x * d_anc + a, x)] = psi.get(a, 0);
        }
    }
    DenseOperator::from_matrix(m)
}

/// (I_A (x) <i|_B) M for M of shape (d_a * d_b) x w.
fn project_out_b(m: &DenseOperator, d_a: usize, d_b: usize, i: usize) -> DenseOperator {
    let w = m.cols();
    let mut out = DMatrix::zeros(d_a, w);
    for a in 0..d_a {
        for c in 0..w {
            out[(a, c)] = m.get(a * d_b + i, c);
        }
    }
    DenseOperator::from_matrix(out)
}

/// (<i|_A (x) I_B) M for M of shape (d_a * d_b) x w.
fn project_out_a(m: &DenseOperator, _d_a: usize, d_b: usize, i: usize) -> DenseOperator {
    let w = m.cols();
    let mut out = DMatrix::zeros(d_b, w);
    for b in 0..d_b {
        for c in 0..w {
            out[(b, c)] = m.get(i * d_b + b, c);
        }
    }
    DenseOperator::from_matrix(out)
}

/// The qubit hiding channel R(rho) = (1/4) sum_i P_i rho P_i (x) |i><i|,
/// mapping one qubit into qubit (x) 2-qubit register. Both marginals are
/// constant, yet the input is recoverable by [`pauli_recovery_channel`].
pub fn pauli_hiding_channel() -> QuantumChannel {
    let kraus = paulis()
        .iter()
        .enumerate()
        .map(|(i, p)| tensor(p, &DenseOperator::ket(i, 4)).scale_re(0.5))
        .collect();
    QuantumChannel::new(kraus).expect("hiding channel is trace preserving")
}

/// Recovery channel with Kraus {P_i (x) <i|}: reads the register, undoes the
/// Pauli, discards the register.
pub fn pauli_recovery_channel() -> QuantumChannel {
    let kraus = paulis()
        .iter()
        .enumerate()
        .map(|(i, p)| tensor(p, &DenseOperator::ket(i, 4).dagger()))
        .collect();
    QuantumChannel::new(kraus).expect("recovery channel is trace preserving")
}

/// Isometry V = (1/2) sum_i P_i (x) |i>_B (x) |i>_C dilating the hiding
/// channel; tracing out C recovers it.
pub fn pauli_hiding_isometry() -> DenseOperator {
    let mut acc = DenseOperator::zeros(32, 2);
    for (i, p) in paulis().iter().enumerate() {
        let tagged = tensor(
            &tensor(p, &DenseOperator::ket(i, 4)),
            &DenseOperator::ket(i, 4),
        );
        acc = acc.add(&tagged);
    }
    acc.scale_re(0.5)
}

/// Real unital block of a channel in a normalized traceless Hermitian basis
/// (Pauli/sqrt(2) for qubits, generalized Gell-Mann matrices otherwise),
/// together with the affine component picked up by the maximally mixed input.
#[derive(Clone, Debug)]
pub struct PauliTransferBlock {
    pub d_in: usize,
    pub d_out: usize,
    /// (d_out^2 - 1) x (d_in^2 - 1) real matrix.
    pub t: DMatrix<f64>,
    /// Traceless component of ch(I/d_in), length d_out^2 - 1.
    pub affine: DVector<f64>,
    pub trace_row_preserved: bool,
}

impl PauliTransferBlock {
    /// Frobenius norm squared of the unital block.
    pub fn t_frobenius_sq(&self) -> f64 {
        self.t.iter().map(|x| x * x).sum()
    }

    pub fn singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self
            .t
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .cloned()
            .collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sv
    }
}

/// Normalized traceless Hermitian basis of dimension d (d^2 - 1 elements,
/// <B_i, B_j> = delta_ij). For d = 2 this is exactly {X, Y, Z}/sqrt(2).
pub fn traceless_hermitian_basis(d: usize) -> Vec<DenseOperator> {
    let mut basis = Vec::with_capacity(d * d - 1);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for k in 1..d {
        for j in 0..k {
            // Symmetric (X-like).
            let mut sym = DenseOperator::zeros(d, d);
            sym.set(j, k, C64::new(inv_sqrt2, 0.0));
            sym.set(k, j, C64::new(inv_sqrt2, 0.0));
            basis.push(sym);
            // Antisymmetric (Y-like).
            let mut asym = DenseOperator::zeros(d, d);
            asym.set(j, k, C64::new(0.0, -inv_sqrt2));
            asym.set(k, j, C64::new(0.0, inv_sqrt2));
            basis.push(asym);
        }
    }
    for l in 1..d {
        // Diagonal (Z-like): proportional to diag(1,..,1,-l,0,..,0).
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut diag = DenseOperator::zeros(d, d);
        for i in 0..l {
            diag.set(i, i, C64::new(norm, 0.0));
        }
        diag.set(l, l, C64::new(-(l as f64) * norm, 0.0));
        basis.push(diag);
    }
    // For d = 2 reorder to the conventional X, Y, Z.
    basis
}

/// Pauli-transfer unital block `t[k][j] = <B_k^out, ch(B_j^in)>` plus affine
/// part from ch(I/d_in).
pub fn to_ptm(ch: &QuantumChannel) -> PauliTransferBlock {
    let bin = traceless_hermitian_basis(ch.d_in());
    let bout = traceless_hermitian_basis(ch.d_out());
    let n_in = bin.len();
    let n_out = bout.len();
    let mut t = DMatrix::zeros(n_out, n_in);
    for (j, bj) in bin.iter().enumerate() {
        let img = ch.apply_hermitian(bj);
        for (k, bk) in bout.iter().enumerate() {
            t[(k, j)] = bk.hs_inner(&img).re;
        }
    }
    let mm = ch
        .apply(&DenseOperator::maximally_mixed(ch.d_in()))
        .expect("dimension fixed by construction");
    let mut affine = DVector::zeros(n_out);
    for (k, bk) in bout.iter().enumerate() {
        affine[k] = bk.hs_inner(&mm).re;
    }
    PauliTransferBlock {
        d_in: ch.d_in(),
        d_out: ch.d_out(),
        t,
        affine,
        trace_row_preserved: ch.tp_deviation() <= TP_TOL,
    }
}

impl QuantumChannel {
    /// Apply to a Hermitian (not necessarily positive or normalized)
    /// operator; same Kraus action as `apply` without the state checks.
    pub fn apply_hermitian(&self, x: &DenseOperator) -> DenseOperator {
        let mut out = DenseOperator::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            out = out.add(&k.dot(x).dot(&k.dagger()));
        }
        out
    }
}

/// Choi state J(E) = (E (x) id)(|Phi+><Phi+|), a density matrix of dimension
/// d_out * d_in with the channel acting on the most-significant factor.
pub fn choi_state(ch: &QuantumChannel) -> DenseOperator {
    let d = ch.d_in();
    let mut j = DenseOperator::zeros(ch.d_out() * d, ch.d_out() * d);
    let scale = C64::new(1.0 / d as f64, 0.0);
    for i in 0..d {
        for k in 0..d {
            // E(|i><k|) (x) |i><k| / d
            let mut eik = DenseOperator::zeros(d, d);
            eik.set(i, k, ONE);
            let img = ch.apply_hermitian(&eik);
            let mut tag = DenseOperator::zeros(d, d);
            tag.set(i, k, ONE);
            j = j.add(&tensor(&img, &tag).scale(scale));
        }
    }
    j
}

/// A Haar-random channel on a qubit, built as the A-marginal of a Haar 2-qubit
/// unitary with a random ancilla (pure for `mixed_ancilla = false`).
pub fn random_qubit_channel(rng: &mut SeededRng, mixed_ancilla: bool) -> QuantumChannel {
    use rand::Rng;
    let u = crate::operator::haar_random_unitary(4, rng);
    let ancilla = if mixed_ancilla {
        let p: f64 = rng.gen_range(0.0..1.0);
        let v = crate::operator::haar_random_unitary(2, rng);
        let diag = DenseOperator::from_rows(
            2,
            2,
            &[C64::new(p, 0.0), ZERO, ZERO, C64::new(1.0 - p, 0.0)],
        )
        .unwrap();
        v.dot(&diag).dot(&v.dagger())
    } else {
        DenseOperator::projector(&crate::operator::haar_random_ket(2, rng))
    };
    marginal_channels(&u, 2, 2, &ancilla)
        .expect("Haar unitary with valid ancilla")
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use crate::operator::{
        cnot_ab, haar_random_ket, haar_random_unitary, hadamard, max_entangled_ket, pauli_x,
        swap_gate,
    };

    fn assert_close(a: &DenseOperator, b: &DenseOperator, tol: f64) {
        assert!(
            a.max_abs_diff(b) <= tol,
            "operators differ by {:.3e}",
            a.max_abs_diff(b)
        );
    }

    #[test]
    fn identity_channel_applies() {
        let ch = QuantumChannel::identity(2);
        let rho = DenseOperator::maximally_mixed(2);
        assert_close(&ch.apply(&rho).unwrap(), &rho, 0.0);
    }

    #[test]
    fn depolarizing_constant_channel() {
        let ch =
            QuantumChannel::completely_depolarizing(2, &DenseOperator::maximally_mixed(2)).unwrap();
        let mut rng = SeededRng::new(3);
        for _ in 0..5 {
            let rho = DenseOperator::projector(&haar_random_ket(2, &mut rng));
            assert_close(
                &ch.apply(&rho).unwrap(),
                &DenseOperator::maximally_mixed(2),
                1e-12,
            );
        }
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let ch = QuantumChannel::identity(2);
        assert!(ch.apply(&DenseOperator::maximally_mixed(4)).is_err());
    }

    #[test]
    fn cnot_marginal_dephases_plus_state() {
        // The A-marginal of CNOT with a |0> ancilla is the Z-dephasing
        // channel, so |+><+| goes to 1/2.
        let (e, _) =
            marginal_channels(&cnot_ab(), 2, 2, &DenseOperator::basis_projector(0, 2)).unwrap();
        let plus = DenseOperator::projector(&hadamard().dot(&DenseOperator::ket(0, 2)));
        assert_close(
            &e.apply(&plus).unwrap(),
            &DenseOperator::maximally_mixed(2),
            1e-12,
        );
    }

    #[test]
    fn marginals_of_identity_and_swap() {
        let anc = DenseOperator::basis_projector(0, 2);
        let mut rng = SeededRng::new(4);
        let rho = DenseOperator::projector(&haar_random_ket(2, &mut rng));

        let (e, ebar) = marginal_channels(&DenseOperator::identity(4), 2, 2, &anc).unwrap();
        assert_close(&e.apply(&rho).unwrap(), &rho, 1e-12);
        assert_close(&ebar.apply(&rho).unwrap(), &anc, 1e-12);

        let (e, ebar) = marginal_channels(&swap_gate(), 2, 2, &anc).unwrap();
        assert_close(&e.apply(&rho).unwrap(), &anc, 1e-12);
        assert_close(&ebar.apply(&rho).unwrap(), &rho, 1e-12);
    }

    #[test]
    fn marginal_outputs_are_density_matrices() {
        let mut rng = SeededRng::new(5);
        for _ in 0..10 {
            let u = haar_random_unitary(4, &mut rng);
            let anc = DenseOperator::projector(&haar_random_ket(2, &mut rng));
            let (e, ebar) = marginal_channels(&u, 2, 2, &anc).unwrap();
            let rho = DenseOperator::projector(&haar_random_ket(2, &mut rng));
            e.apply(&rho).unwrap().check_density_matrix(1e-9).unwrap();
            ebar.apply(&rho)
                .unwrap()
                .check_density_matrix(1e-9)
                .unwrap();
        }
    }

    #[test]
    fn marginal_rejects_non_unitary() {
        let m = DenseOperator::zeros(4, 4);
        assert!(marginal_channels(&m, 2, 2, &DenseOperator::basis_projector(0, 2)).is_err());
    }

    #[test]
    fn hiding_channel_marginals_and_recovery() {
        let hide = pauli_hiding_channel();
        let recover = pauli_recovery_channel();
        let mut rng = SeededRng::new(6);
        for _ in 0..20 {
            let rho = {
                // Random mixed state: normalized Wishart-like construction.
                let g = haar_random_unitary(2, &mut rng);
                let k = haar_random_ket(2, &mut rng);
                let raw = DenseOperator::projector(&k).scale_re(0.7).add(
                    &g.dot(&DenseOperator::maximally_mixed(2))
                        .dot(&g.dagger())
                        .scale_re(0.3),
                );
                raw.scale_re(1.0 / raw.trace().re)
            };
            let hidden = hide.apply(&rho).unwrap();
            // Marginal on the qubit is 1/2, on the register 1/4.
            let on_qubit = crate::operator::partial_trace(&hidden, &[2, 4], &[0]).unwrap();
            let on_register = crate::operator::partial_trace(&hidden, &[2, 4], &[1]).unwrap();
            assert_close(&on_qubit, &DenseOperator::maximally_mixed(2), 1e-10);
            assert_close(&on_register, &DenseOperator::maximally_mixed(4), 1e-10);
            // Recovery returns the input exactly.
            let back = recover.apply(&hidden).unwrap();
            assert!(back.max_abs_diff(&rho) <= 1e-10);
        }
    }

    #[test]
    fn recovery_kraus_completeness() {
        let recover = pauli_recovery_channel();
        assert!(recover.tp_deviation() <= 1e-12);
    }

    #[test]
    fn hiding_isometry_dilates_hiding_channel() {
        let v = pauli_hiding_isometry();
        // V^dag V = I_2.
        assert_close(&v.dagger().dot(&v), &DenseOperator::identity(2), 1e-12);
        let mut rng = SeededRng::new(7);
        let rho = DenseOperator::projector(&haar_random_ket(2, &mut rng));
        let global = v.dot(&rho).dot(&v.dagger());
        let traced_c = crate::operator::partial_trace(&global, &[2, 4, 4], &[0, 1]).unwrap();
        let hidden = pauli_hiding_channel().apply(&rho).unwrap();
        assert_close(&traced_c, &hidden, 1e-12);
    }

    #[test]
    fn ptm_identity_and_constant() {
        let id = to_ptm(&QuantumChannel::identity(2));
        assert!(id.t.is_identity(1e-12));
        assert!(id.affine.amax() <= 1e-12);

        let dep = to_ptm(
            &QuantumChannel::completely_depolarizing(2, &DenseOperator::maximally_mixed(2))
                .unwrap(),
        );
        assert!(dep.t.amax() <= 1e-12);
    }

    #[test]
    fn ptm_swap_alpha_marginal_matches_table() {
        // The A-marginal of SWAP^alpha has the block
        //   [ cos^2        -+ sin(pi a)/2  0 ]
        //   [ +- sin(pi a)/2  cos^2        0 ]
        //   [ 0              0             cos^2 ]
        // in the X,Y,Z / sqrt(2) basis: cos^2 on the diagonal and an
        // antisymmetric +-sin(pi a)/2 pair in the XY corner.
        for alpha in [0.3, 0.5, 0.8] {
            let u = families::family_swap_alpha(alpha).unwrap();
            let (e, _) =
                marginal_channels(&u, 2, 2, &DenseOperator::basis_projector(0, 2)).unwrap();
            let t = to_ptm(&e).t;
            let c2 = (std::f64::consts::PI * alpha / 2.0).cos().powi(2);
            let sh = (std::f64::consts::PI * alpha).sin() / 2.0;
            for i in 0..3 {
                assert!((t[(i, i)] - c2).abs() <= 1e-10, "alpha={alpha}");
            }
            assert!((t[(0, 1)] + t[(1, 0)]).abs() <= 1e-10, "alpha={alpha}");
            assert!((t[(0, 1)].abs() - sh).abs() <= 1e-10, "alpha={alpha}");
            for (i, j) in [(0, 2), (1, 2), (2, 0), (2, 1)] {
                assert!(t[(i, j)].abs() <= 1e-10, "alpha={alpha}");
            }
        }
    }

    #[test]
    fn ptm_unitary_block_is_orthogonal_with_unit_singular_values() {
        let mut rng = SeededRng::new(8);
        for d in [2usize, 3] {
            let u = haar_random_unitary(d, &mut rng);
            let ptm = to_ptm(&QuantumChannel::from_unitary(&u).unwrap());
            let gram = ptm.t.transpose() * &ptm.t;
            assert!(gram.is_identity(1e-9));
            for sv in ptm.singular_values() {
                assert!(sv <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn ptm_composition_homomorphism() {
        let mut rng = SeededRng::new(9);
        for _ in 0..10 {
            let a = random_qubit_channel(&mut rng, false);
            let b = random_qubit_channel(&mut rng, true);
            let composed = to_ptm(&b.compose(&a).unwrap());
            let prod = to_ptm(&b).t * to_ptm(&a).t;
            assert!((composed.t - prod).amax() <= 1e-9);
        }
    }

    #[test]
    fn dephasing_block_eigenvalues() {
        // The A-marginal of CNOT (alpha = 1) has unital block diag(0, 0, 1),
        // so its sorted eigenvalues are {1, 0, 0}.
        let (e, _) =
            marginal_channels(&cnot_ab(), 2, 2, &DenseOperator::basis_projector(0, 2)).unwrap();
        let t = to_ptm(&e).t;
        let mut block = DenseOperator::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                block.set(i, j, crate::operator::C64::new(t[(i, j)], 0.0));
            }
        }
        let eigs = crate::operator::eigenvalues(&block).unwrap();
        assert!((eigs[0] - crate::operator::ONE).norm() <= 1e-12);
        assert!(eigs[1].norm() <= 1e-12 && eigs[2].norm() <= 1e-12);
    }

    #[test]
    fn choi_of_identity_is_bell_state() {
        let j = choi_state(&QuantumChannel::identity(2));
        let bell = DenseOperator::projector(&max_entangled_ket(2));
        assert_close(&j, &bell, 1e-12);
    }

    #[test]
    fn choi_of_constant_channel_is_product() {
        let ch =
            QuantumChannel::completely_depolarizing(2, &DenseOperator::maximally_mixed(2)).unwrap();
        let j = choi_state(&ch);
        let expected = tensor(
            &DenseOperator::maximally_mixed(2),
            &DenseOperator::maximally_mixed(2),
        );
        assert_close(&j, &expected, 1e-12);
    }

    #[test]
    fn choi_trace_conditions_and_positivity() {
        let mut rng = SeededRng::new(10);
        for _ in 0..10 {
            let ch = random_qubit_channel(&mut rng, true);
            let j = choi_state(&ch);
            let reduced = crate::operator::partial_trace(&j, &[2, 2], &[1]).unwrap();
            assert_close(&reduced, &DenseOperator::maximally_mixed(2), 1e-10);
            assert!(ch.choi_min_eigenvalue() >= -1e-9);
        }
        // Larger-dimensional construction: the hiding channel.
        assert!(pauli_hiding_channel().choi_min_eigenvalue() >= -1e-9);
    }

    #[test]
    fn basis_is_orthonormal_and_traceless() {
        for d in [2usize, 3, 4] {
            let basis = traceless_hermitian_basis(d);
            assert_eq!(basis.len(), d * d - 1);
            for (i, bi) in basis.iter().enumerate() {
                assert!(bi.trace().norm() <= 1e-12);
                assert!(bi.is_hermitian(1e-12));
                for (j, bj) in basis.iter().enumerate() {
                    let ip = bi.hs_inner(bj);
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((ip.re - expected).abs() <= 1e-12 && ip.im.abs() <= 1e-12);
                }
            }
        }
        // d = 2 must be exactly X, Y, Z over sqrt(2).
        let basis = traceless_hermitian_basis(2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_close(&basis[0], &pauli_x().scale_re(s), 1e-15);
        assert_close(&basis[1], &crate::operator::pauli_y().scale_re(s), 1e-15);
        assert_close(&basis[2], &crate::operator::pauli_z().scale_re(s), 1e-15);
    }

    #[test]
    fn channel_validation_rejects_non_tp() {
        let bad = vec![DenseOperator::identity(2).scale_re(0.5)];
        assert!(QuantumChannel::new(bad).is_err());
        assert!(QuantumChannel::new(vec![]).is_err());
    }
}
