//! Dense complex operators and the linear-algebra primitives the rest of the
//! crate is built on: tensor products, partial traces, Haar sampling,
//! eigendecompositions and fractional powers of unitaries.
//!
//! Subsystem ordering convention, used everywhere: the *left* tensor factor is
//! subsystem A and carries the most-significant part of the row/column index.
//! For qubits this means qubit 0 is the high bit of a basis index.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Absolute tolerance for Hermiticity, unit trace, positivity and unitarity
/// checks on operators.
pub const OP_TOL: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I_UNIT: C64 = C64::new(0.0, 1.0);

/// Reproducible random stream. Identical seeds give identical sample
/// sequences; `fork` derives independent streams for parallel work.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    rng: ChaCha12Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive an independent stream keyed by `stream`. Pure in the master
    /// seed, so forks can be taken in any order or in parallel.
    pub fn fork(&self, stream: u64) -> Self {
        Self::new(split_mix(self.seed ^ split_mix(stream)))
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

fn split_mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Dense complex matrix with explicit dimensions. Carrier for states,
/// unitaries and Kraus operators.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    m: DMatrix<C64>,
}

impl DenseOperator {
    pub fn from_matrix(m: DMatrix<C64>) -> Self {
        Self { m }
    }

    /// Row-major complex entries.
    pub fn from_rows(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                entries.len()
            )));
        }
        Ok(Self {
            m: DMatrix::from_row_slice(rows, cols, entries),
        })
    }

    /// Row-major real entries.
    pub fn from_real_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_rows(rows, cols, &c)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            m: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            m: DMatrix::identity(d, d),
        }
    }

    /// The maximally mixed state 1/d.
    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            m: DMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0),
        }
    }

    /// Computational basis column vector |i> in dimension d.
    pub fn ket(i: usize, d: usize) -> Self {
        let mut m = DMatrix::zeros(d, 1);
        m[(i, 0)] = ONE;
        Self { m }
    }

    /// Projector |i><i| in dimension d.
    pub fn basis_projector(i: usize, d: usize) -> Self {
        let mut m = DMatrix::zeros(d, d);
        m[(i, i)] = ONE;
        Self { m }
    }

    /// |psi><psi| from a (normalized) column vector.
    pub fn projector(psi: &DenseOperator) -> Self {
        Self {
            m: &psi.m * psi.m.adjoint(),
        }
    }

    pub fn rows(&self) -> usize {
        self.m.nrows()
    }

    pub fn cols(&self) -> usize {
        self.m.ncols()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.m[(r, c)]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.m[(r, c)] = v;
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn dagger(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            m: self.m.transpose(),
        }
    }

    pub fn conjugate(&self) -> Self {
        Self {
            m: self.m.map(|z| z.conj()),
        }
    }

    pub fn dot(&self, other: &Self) -> Self {
        Self {
            m: &self.m * &other.m,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            m: &self.m + &other.m,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            m: &self.m - &other.m,
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { m: &self.m * s }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// Hilbert-Schmidt inner product <self, other> = tr(self^dag other).
    pub fn hs_inner(&self, other: &Self) -> C64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Squared Frobenius norm, i.e. tr(M^dag M).
    pub fn frobenius_sq(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest entrywise modulus of self - other.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.m.shape(), other.m.shape(), "shape mismatch");
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Deviation from unitarity, max |(U^dag U - I)_{ij}|.
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.cols();
        let prod = self.m.adjoint() * &self.m;
        let id = DMatrix::<C64>::identity(d, d);
        prod.iter()
            .zip(id.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square() && self.unitarity_deviation() <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.dagger()) <= tol
    }

    /// Density-matrix check: Hermitian, unit trace and positive semidefinite
    /// within `tol`.
    pub fn check_density_matrix(&self, tol: f64) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotDensityMatrix("not square".into()));
        }
        if !self.is_hermitian(tol) {
            return Err(Error::NotDensityMatrix("not Hermitian".into()));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > tol {
            return Err(Error::NotDensityMatrix(format!("trace {} is not 1", tr)));
        }
        let eigs = self.m.clone().symmetric_eigen().eigenvalues;
        let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(Error::NotDensityMatrix(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    /// Eigenvalues of a Hermitian operator (ascending), via the symmetric
    /// eigensolver.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .m
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    /// Spectral decomposition of a Hermitian operator: (eigenvalue, unit
    /// eigenvector) pairs.
    pub fn hermitian_eigen(&self) -> Vec<(f64, DenseOperator)> {
        let se = self.m.clone().symmetric_eigen();
        (0..se.eigenvalues.len())
            .map(|k| {
                let col = se.eigenvectors.column(k).into_owned();
                (
                    se.eigenvalues[k],
                    DenseOperator::from_matrix(DMatrix::from_column_slice(
                        col.len(),
                        1,
                        col.as_slice(),
                    )),
                )
            })
            .collect()
    }
}

impl std::ops::Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        self.dot(rhs)
    }
}

/// Kronecker product; the left factor is the most-significant subsystem.
pub fn tensor(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
    DenseOperator::from_matrix(a.matrix().kronecker(b.matrix()))
}

/// Reduce a square operator on a tensor product of subsystems (with the given
/// dimensions) to the subsystems listed in `keep`, tracing out the rest.
/// Kept subsystems stay in their original order.
pub fn partial_trace(m: &DenseOperator, dims: &[usize], keep: &[usize]) -> Result<DenseOperator> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.rows() != total {
        return Err(Error::Dimension(format!(
            "operator is {}x{} but subsystem dims multiply to {}",
            m.rows(),
            m.cols(),
            total
        )));
    }
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Dimension("keep index out of range".into()));
    }
    let mut keep_sorted: Vec<usize> = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() {
        return Err(Error::Dimension("duplicate keep index".into()));
    }

    let n = dims.len();
    // Row-major strides: subsystem 0 is most significant.
    let mut strides = vec![1usize; n];
    for j in (0..n.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * dims[j + 1];
    }
    let d_out: usize = keep_sorted.iter().map(|&k| dims[k]).product();

    let mut out = DenseOperator::zeros(d_out, d_out);
    let mut idx = vec![0usize; n];
    for r in 0..total {
        // Decompose the row index.
        let mut rr = r;
        for j in 0..n {
            idx[j] = rr / strides[j];
            rr %= strides[j];
        }
        let r_sub = idx.clone();
        for c in 0..total {
            let mut cc = c;
            let mut traced_match = true;
            let mut r_out = 0usize;
            let mut c_out = 0usize;
            for j in 0..n {
                let cj = cc / strides[j];
                cc %= strides[j];
                if keep_sorted.contains(&j) {
                    r_out = r_out * dims[j] + r_sub[j];
                    c_out = c_out * dims[j] + cj;
                } else if r_sub[j] != cj {
                    traced_match = false;
                    break;
                }
            }
            if traced_match {
                let v = out.get(r_out, c_out) + m.get(r, c);
                out.set(r_out, c_out, v);
            }
        }
    }
    Ok(out)
}

/// Eigenvalues of a square complex matrix, sorted by descending modulus with
/// ties broken by descending real part, then descending imaginary part.
pub fn eigenvalues(m: &DenseOperator) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::Dimension(
            "eigenvalues of a non-square matrix".into(),
        ));
    }
    let d = m.rows();
    if d == 0 {
        return Ok(Vec::new());
    }
    let schur = m
        .matrix()
        .clone()
        .try_schur(1e-14, 100_000)
        .ok_or(Error::EigenFailure)?;
    let (_, t) = schur.unpack();
    let mut vals: Vec<C64> = (0..d).map(|i| t[(i, i)]).collect();
    sort_eigenvalues(&mut vals);
    Ok(vals)
}

pub(crate) fn sort_eigenvalues(vals: &mut [C64]) {
    vals.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap()
            .then(b.re.partial_cmp(&a.re).unwrap())
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
}

/// Eigendecomposition of a normal (here: unitary) matrix via the complex
/// Schur form, which keeps the eigenbasis exactly unitary. Returns (V, w)
/// with M = V diag(w) V^dag.
fn normal_eigendecomposition(m: &DenseOperator) -> Result<(DMatrix<C64>, Vec<C64>)> {
    let schur = m
        .matrix()
        .clone()
        .try_schur(1e-14, 100_000)
        .ok_or(Error::EigenFailure)?;
    let (q, t) = schur.unpack();
    let d = m.rows();
    let vals: Vec<C64> = (0..d).map(|i| t[(i, i)]).collect();
    Ok((q, vals))
}

/// Fractional power U^alpha of a unitary, taking each eigenphase on the
/// principal branch (-pi, pi].
pub fn unitary_fractional_power(u: &DenseOperator, alpha: f64) -> Result<DenseOperator> {
    let dev = if u.is_square() {
        u.unitarity_deviation()
    } else {
        f64::INFINITY
    };
    if dev > OP_TOL {
        return Err(Error::NotUnitary {
            deviation: dev,
            tol: OP_TOL,
        });
    }
    let (q, vals) = normal_eigendecomposition(u)?;
    let d = u.rows();
    let powered = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            // arg() lands in (-pi, pi]; scaling the phase stays on the
            // principal sheet.
            let theta = vals[i].arg();
            C64::from_polar(1.0, alpha * theta)
        } else {
            ZERO
        }
    });
    Ok(DenseOperator::from_matrix(&q * powered * q.adjoint()))
}

/// Haar-random unitary of dimension d: QR of a complex Ginibre matrix with
/// the R-diagonal phase correction.
pub fn haar_random_unitary(d: usize, rng: &mut SeededRng) -> DenseOperator {
    assert!(d >= 1, "dimension must be positive");
    let g = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // Fix the phase ambiguity so the distribution is exactly Haar.
    let lambda = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            let rii = r[(i, i)];
            if rii.norm() == 0.0 {
                ONE
            } else {
                rii / rii.norm()
            }
        } else {
            ZERO
        }
    });
    DenseOperator::from_matrix(q * lambda)
}

/// Haar-random pure state of dimension d, as a column vector.
pub fn haar_random_ket(d: usize, rng: &mut SeededRng) -> DenseOperator {
    let u = haar_random_unitary(d, rng);
    let mut m = DMatrix::zeros(d, 1);
    for i in 0..d {
        m[(i, 0)] = u.get(i, 0);
    }
    DenseOperator::from_matrix(m)
}

// ---------------------------------------------------------------------------
// Standard gates and states.

pub fn pauli_i() -> DenseOperator {
    DenseOperator::identity(2)
}

pub fn pauli_x() -> DenseOperator {
    DenseOperator::from_rows(2, 2, &[ZERO, ONE, ONE, ZERO]).unwrap()
}

pub fn pauli_y() -> DenseOperator {
    DenseOperator::from_rows(2, 2, &[ZERO, -I_UNIT, I_UNIT, ZERO]).unwrap()
}

pub fn pauli_z() -> DenseOperator {
    DenseOperator::from_rows(2, 2, &[ONE, ZERO, ZERO, -ONE]).unwrap()
}

/// The four Pauli operators {I, X, Y, Z}.
pub fn paulis() -> [DenseOperator; 4] {
    [pauli_i(), pauli_x(), pauli_y(), pauli_z()]
}

pub fn hadamard() -> DenseOperator {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    DenseOperator::from_real_rows(2, 2, &[h, h, h, -h]).unwrap()
}

/// sqrt(X), squaring to the Pauli X gate.
pub fn sqrt_x() -> DenseOperator {
    let a = C64::new(0.5, 0.5);
    let b = C64::new(0.5, -0.5);
    DenseOperator::from_rows(2, 2, &[a, b, b, a]).unwrap()
}

/// R_Y(theta) = exp(-i theta Y / 2).
pub fn ry(theta: f64) -> DenseOperator {
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    DenseOperator::from_real_rows(2, 2, &[c, -s, s, c]).unwrap()
}

/// R_Z(theta) = exp(-i theta Z / 2).
pub fn rz(theta: f64) -> DenseOperator {
    DenseOperator::from_rows(
        2,
        2,
        &[
            C64::from_polar(1.0, -theta / 2.0),
            ZERO,
            ZERO,
            C64::from_polar(1.0, theta / 2.0),
        ],
    )
    .unwrap()
}

/// CNOT with qubit A (most significant) as control and B as target.
pub fn cnot_ab() -> DenseOperator {
    DenseOperator::from_real_rows(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, 1.0, 0.0,
        ],
    )
    .unwrap()
}

/// CNOT with qubit B (least significant) as control and A as target.
pub fn cnot_ba() -> DenseOperator {
    DenseOperator::from_real_rows(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 1.0, 0.0, 0.0,
        ],
    )
    .unwrap()
}

/// Two-qubit SWAP.
pub fn swap_gate() -> DenseOperator {
    DenseOperator::from_real_rows(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ],
    )
    .unwrap()
}

/// Normalized maximally entangled ket (1/sqrt(d)) sum_i |i>|i>.
pub fn max_entangled_ket(d: usize) -> DenseOperator {
    let mut m = DMatrix::zeros(d * d, 1);
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    for i in 0..d {
        m[(i * d + i, 0)] = amp;
    }
    DenseOperator::from_matrix(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn assert_close(a: &DenseOperator, b: &DenseOperator, tol: f64) {
        assert!(
            a.max_abs_diff(b) <= tol,
            "operators differ by {:.3e} (tol {:.1e})",
            a.max_abs_diff(b),
            tol
        );
    }

    #[test]
    fn tensor_identities() {
        let i2 = DenseOperator::identity(2);
        assert_close(&tensor(&i2, &i2), &DenseOperator::identity(4), 0.0);

        // |0><0| (x) |1><1| = diag(0, 1, 0, 0) under A-most-significant order.
        let p0 = DenseOperator::basis_projector(0, 2);
        let p1 = DenseOperator::basis_projector(1, 2);
        let t = tensor(&p0, &p1);
        let expected = DenseOperator::from_real_rows(4, 4, &{
            let mut e = [0.0; 16];
            e[5] = 1.0;
            e
        })
        .unwrap();
        assert_close(&t, &expected, 0.0);

        // (X (x) X)|00> = |11>
        let xx = tensor(&pauli_x(), &pauli_x());
        let k00 = DenseOperator::ket(0, 4);
        let k11 = DenseOperator::ket(3, 4);
        assert_close(&xx.dot(&k00), &k11, 0.0);
    }

    #[test]
    fn partial_trace_bell_state() {
        let bell = DenseOperator::projector(&max_entangled_ket(2));
        let reduced = partial_trace(&bell, &[2, 2], &[0]).unwrap();
        assert_close(&reduced, &DenseOperator::maximally_mixed(2), 1e-12);
    }

    #[test]
    fn partial_trace_product_state() {
        let mut rng = SeededRng::new(7);
        let u = haar_random_unitary(3, &mut rng);
        let rho = DenseOperator::projector(&haar_random_ket(3, &mut rng));
        let rho = &(&u * &rho) * &u.dagger();
        let sigma = DenseOperator::maximally_mixed(4);
        let prod = tensor(&rho, &sigma);
        let back = partial_trace(&prod, &[3, 4], &[0]).unwrap();
        assert_close(&back, &rho, 1e-12);
    }

    #[test]
    fn partial_trace_cnot_on_plus_zero() {
        // CNOT|+0> is a Bell state; tracing out qubit A leaves 1/2.
        let h = hadamard();
        let plus = h.dot(&DenseOperator::ket(0, 2));
        let input = DenseOperator::projector(&tensor(&plus, &DenseOperator::ket(0, 2)));
        let cnot = cnot_ab();
        let out = &(&cnot * &input) * &cnot.dagger();
        let reduced = partial_trace(&out, &[2, 2], &[1]).unwrap();
        assert_close(&reduced, &DenseOperator::maximally_mixed(2), 1e-12);
    }

    #[test]
    fn partial_trace_keep_all_and_trace_preservation() {
        let mut rng = SeededRng::new(11);
        let u = haar_random_unitary(6, &mut rng);
        let keep_all = partial_trace(&u, &[2, 3], &[0, 1]).unwrap();
        assert_close(&keep_all, &u, 0.0);
        let reduced = partial_trace(&u, &[2, 3], &[1]).unwrap();
        assert!((reduced.trace() - u.trace()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let m = DenseOperator::identity(6);
        assert!(partial_trace(&m, &[2, 2], &[0]).is_err());
        assert!(partial_trace(&m, &[2, 3], &[2]).is_err());
    }

    #[test]
    fn haar_unitary_is_unitary_and_deterministic() {
        let mut rng = SeededRng::new(42);
        for d in [1usize, 2, 3, 4, 8] {
            let u = haar_random_unitary(d, &mut rng);
            assert!(u.is_unitary(1e-12), "d={d}");
        }
        let a = haar_random_unitary(4, &mut SeededRng::new(5));
        let b = haar_random_unitary(4, &mut SeededRng::new(5));
        assert_close(&a, &b, 0.0);
        let c = haar_random_unitary(4, &mut SeededRng::new(6));
        assert!(a.max_abs_diff(&c) > 1e-3);
    }

    #[test]
    fn haar_d1_is_a_phase() {
        let mut rng = SeededRng::new(1);
        let u = haar_random_unitary(1, &mut rng);
        assert!((u.get(0, 0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_first_moment_is_maximally_mixed() {
        // E[U |0><0| U^dag] = 1/2 for d = 2.
        let n = 100_000;
        let mut rng = SeededRng::new(2024);
        let mut acc = DenseOperator::zeros(2, 2);
        for _ in 0..n {
            let u = haar_random_unitary(2, &mut rng);
            let psi = DenseOperator::projector(&{
                let mut m = DMatrix::zeros(2, 1);
                m[(0, 0)] = u.get(0, 0);
                m[(1, 0)] = u.get(1, 0);
                DenseOperator::from_matrix(m)
            });
            acc = acc.add(&psi);
        }
        let mean = acc.scale_re(1.0 / n as f64);
        // Per-entry standard error is ~ sqrt(Var)/sqrt(n) with Var <= 1/4.
        let se = 0.5 / (n as f64).sqrt();
        assert!(mean.max_abs_diff(&DenseOperator::maximally_mixed(2)) < 3.0 * se * 3.0);
    }

    #[test]
    fn haar_second_moment_matches_2_over_d_d_plus_1() {
        // E |<0|U|0>|^4 = 2/(d(d+1)).
        for d in [2usize, 3] {
            let n = 100_000;
            let mut rng = SeededRng::new(999 + d as u64);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..n {
                let u = haar_random_unitary(d, &mut rng);
                let x = u.get(0, 0).norm_sqr().powi(2);
                sum += x;
                sumsq += x * x;
            }
            let mean = sum / n as f64;
            let var = (sumsq / n as f64 - mean * mean).max(0.0);
            let se = (var / n as f64).sqrt();
            let expected = 2.0 / (d as f64 * (d + 1) as f64);
            assert!(
                (mean - expected).abs() < 3.0 * se,
                "d={d}: mean {mean} expected {expected} se {se}"
            );
        }
    }

    #[test]
    fn haar_overlap_distribution_is_uniform() {
        // |<0|U|0>|^2 for d = 2 is uniform on [0,1]; Kolmogorov-Smirnov
        // statistic must be below the 1% critical value 1.628/sqrt(n).
        let n = 100_000usize;
        let mut rng = SeededRng::new(31415);
        let mut xs: Vec<f64> = (0..n)
            .map(|_| haar_random_unitary(2, &mut rng).get(0, 0).norm_sqr())
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let ecdf_hi = (i + 1) as f64 / n as f64;
            let ecdf_lo = i as f64 / n as f64;
            ks = ks.max((ecdf_hi - x).abs()).max((x - ecdf_lo).abs());
        }
        let critical = 1.628 / (n as f64).sqrt();
        assert!(ks < critical, "KS statistic {ks} exceeds {critical}");
    }

    #[test]
    fn fractional_power_endpoints() {
        let swap = swap_gate();
        assert_close(&unitary_fractional_power(&swap, 1.0).unwrap(), &swap, 1e-12);
        assert_close(
            &unitary_fractional_power(&swap, 0.0).unwrap(),
            &DenseOperator::identity(4),
            1e-12,
        );
    }

    #[test]
    fn fractional_cnot_matches_closed_form() {
        // CNOT^alpha = |0><0| (x) I + (1+e^{i pi a})/2 |1><1| (x) I
        //            + (1-e^{i pi a})/2 |1><1| (x) X.
        for alpha in [0.25, 0.5, 0.9] {
            let powered = unitary_fractional_power(&cnot_ab(), alpha).unwrap();
            let e = C64::from_polar(1.0, PI * alpha);
            let cp = (ONE + e) * C64::new(0.5, 0.0);
            let cm = (ONE - e) * C64::new(0.5, 0.0);
            let p1 = DenseOperator::basis_projector(1, 2);
            let expected = tensor(&DenseOperator::basis_projector(0, 2), &pauli_i())
                .add(&tensor(&p1, &pauli_i()).scale(cp))
                .add(&tensor(&p1, &pauli_x()).scale(cm));
            assert_close(&powered, &expected, 1e-12);
        }
    }

    #[test]
    fn fractional_power_branch_consistency() {
        let mut rng = SeededRng::new(77);
        for _ in 0..20 {
            let u = haar_random_unitary(4, &mut rng);
            let alpha: f64 = rng.gen_range(0.0..1.0);
            let beta: f64 = rng.gen_range(0.0..(1.0 - alpha));
            let ua = unitary_fractional_power(&u, alpha).unwrap();
            let ub = unitary_fractional_power(&u, beta).unwrap();
            let uab = unitary_fractional_power(&u, alpha + beta).unwrap();
            assert!(ua.is_unitary(1e-10));
            assert!(ua.dot(&ub).max_abs_diff(&uab) <= 1e-9);
        }
    }

    #[test]
    fn fractional_power_rejects_non_unitary() {
        let m = DenseOperator::from_real_rows(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            unitary_fractional_power(&m, 0.5),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn eigenvalue_ordering() {
        let i3 = DenseOperator::identity(3);
        let v = eigenvalues(&i3).unwrap();
        assert!(v.iter().all(|z| (z - ONE).norm() < 1e-12));

        let d = DenseOperator::from_real_rows(2, 2, &[0.3, 0.0, 0.0, -0.5]).unwrap();
        let v = eigenvalues(&d).unwrap();
        assert!((v[0] - C64::new(-0.5, 0.0)).norm() < 1e-12);
        assert!((v[1] - C64::new(0.3, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gates_are_unitary() {
        for g in [
            hadamard(),
            sqrt_x(),
            ry(0.3),
            rz(-1.2),
            cnot_ab(),
            cnot_ba(),
            swap_gate(),
        ] {
            assert!(g.is_unitary(1e-12));
        }
        assert_close(&sqrt_x().dot(&sqrt_x()), &pauli_x(), 1e-12);
    }

    #[test]
    fn density_matrix_check() {
        assert!(DenseOperator::maximally_mixed(4)
            .check_density_matrix(OP_TOL)
            .is_ok());
        assert!(pauli_x().check_density_matrix(OP_TOL).is_err());
        let not_normalized = DenseOperator::identity(2);
        assert!(not_normalized.check_density_matrix(OP_TOL).is_err());
    }

    #[test]
    fn seeded_rng_fork_is_pure() {
        let base = SeededRng::new(123);
        let mut a = base.fork(5);
        let mut b = base.fork(5);
        assert_eq!(a.next_u64(), b.next_u64());
        let mut c = base.fork(6);
        assert_ne!(a.next_u64(), c.next_u64());
    }
}
