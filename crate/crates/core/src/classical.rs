//! Column-stochastic classical channels and the exact 1-bit-to-2-bit
//! constructions: the finite isometry enumeration and the reversible
//! hide/broadcast families built from a biased auxiliary bit and a CNOT.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tolerance for the column-sum check on stochastic matrices.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Classical channel as a column-stochastic matrix acting on probability
/// vectors: (S p)_i = sum_j S_ij p_j.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalChannel {
    d_in: usize,
    d_out: usize,
    s: DMatrix<f64>,
}

impl ClassicalChannel {
    pub fn new(s: DMatrix<f64>) -> Result<Self> {
        let (d_out, d_in) = s.shape();
        if d_in == 0 || d_out == 0 {
            return Err(Error::Dimension("empty stochastic matrix".into()));
        }
        for j in 0..d_in {
            let col_sum: f64 = (0..d_out).map(|i| s[(i, j)]).sum();
            if (col_sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic(format!(
                    "column {j} sums to {col_sum}"
                )));
            }
            for i in 0..d_out {
                if !(-STOCHASTIC_TOL..=1.0 + STOCHASTIC_TOL).contains(&s[(i, j)]) {
                    return Err(Error::NotStochastic(format!(
                        "entry ({i},{j}) = {} outside [0,1]",
                        s[(i, j)]
                    )));
                }
            }
        }
        Ok(Self { d_in, d_out, s })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            d_in: d,
            d_out: d,
            s: DMatrix::identity(d, d),
        }
    }

    /// Deterministic channel from an output assignment `j -> map[j]`.
    pub fn deterministic(d_out: usize, map: &[usize]) -> Result<Self> {
        let d_in = map.len();
        let mut s = DMatrix::zeros(d_out, d_in);
        for (j, &i) in map.iter().enumerate() {
            if i >= d_out {
                return Err(Error::Dimension("deterministic map out of range".into()));
            }
            s[(i, j)] = 1.0;
        }
        Self::new(s)
    }

    /// Constant channel sending everything to `target`.
    pub fn constant(d_in: usize, target: &[f64]) -> Result<Self> {
        let d_out = target.len();
        let mut s = DMatrix::zeros(d_out, d_in);
        for j in 0..d_in {
            for i in 0..d_out {
                s[(i, j)] = target[i];
            }
        }
        Self::new(s)
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.d_in {
            return Err(Error::Dimension(format!(
                "distribution has length {} but channel input dimension is {}",
                p.len(),
                self.d_in
            )));
        }
        let v = &self.s * DVector::from_column_slice(p);
        Ok(v.iter().cloned().collect())
    }

    /// Composition self . other (apply `other` first). Column-stochasticity
    /// is preserved exactly up to floating point rounding.
    pub fn compose(&self, other: &ClassicalChannel) -> Result<Self> {
        if other.d_out != self.d_in {
            return Err(Error::Dimension("composition dimension mismatch".into()));
        }
        Self::new(&self.s * &other.s)
    }
}

/// Marginal channels of a global classical channel to a product of two
/// registers of sizes d_a * d_b: (keep A, keep B).
pub fn classical_marginals(
    ch: &ClassicalChannel,
    d_a: usize,
    d_b: usize,
) -> Result<(ClassicalChannel, ClassicalChannel)> {
    if ch.d_out != d_a * d_b {
        return Err(Error::Dimension(format!(
            "output dimension {} is not {d_a} * {d_b}",
            ch.d_out
        )));
    }
    let mut sa = DMatrix::zeros(d_a, ch.d_in);
    let mut sb = DMatrix::zeros(d_b, ch.d_in);
    for j in 0..ch.d_in {
        for a in 0..d_a {
            for b in 0..d_b {
                let v = ch.s[(a * d_b + b, j)];
                sa[(a, j)] += v;
                sb[(b, j)] += v;
            }
        }
    }
    Ok((ClassicalChannel::new(sa)?, ClassicalChannel::new(sb)?))
}

/// CNOT on two bits with the most-significant bit as control.
pub fn cnot_bits_ab() -> ClassicalChannel {
    ClassicalChannel::deterministic(4, &[0, 1, 3, 2]).unwrap()
}

/// CNOT on two bits with the least-significant bit as control.
pub fn cnot_bits_ba() -> ClassicalChannel {
    ClassicalChannel::deterministic(4, &[0, 3, 2, 1]).unwrap()
}

/// Swap of the two output bits.
pub fn swap_bits() -> ClassicalChannel {
    ClassicalChannel::deterministic(4, &[0, 2, 1, 3]).unwrap()
}

/// All 1-bit-to-2-bit classical isometries: injections x -> pi(x (x) x_0)
/// over the 24 output permutations, deduplicated.
pub fn classical_isometries_1to2() -> Vec<ClassicalChannel> {
    let mut perms = Vec::new();
    permutations(&mut [0, 1, 2, 3], 0, &mut perms);
    let inject = ClassicalChannel::deterministic(4, &[0, 2]).unwrap(); // x -> x (x) x_0
    let mut out: Vec<ClassicalChannel> = Vec::new();
    for p in perms {
        let ch = ClassicalChannel::deterministic(4, &p)
            .unwrap()
            .compose(&inject)
            .unwrap();
        if !out.iter().any(|c| c == &ch) {
            out.push(ch);
        }
    }
    out
}

fn permutations(items: &mut [usize], k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.to_vec());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Which CNOT follows the auxiliary-bit preparation in a reversible family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReversibleKind {
    /// CNOT with the data bit as control: marginals (id, binary-symmetric).
    Hide,
    /// CNOT with the auxiliary bit as control: marginals
    /// (binary-symmetric, constant); p = 1/2 hides perfectly.
    Broadcast,
}

/// Reversible 1-bit-to-2-bit channel R_p(x) = x (x) (p x_0 + (1-p) x_1)
/// followed by a CNOT; `swapped` exchanges the two output bits.
pub fn classical_reversible_family(
    kind: ReversibleKind,
    p: f64,
    swapped: bool,
) -> Result<ClassicalChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p = {p} outside [0,1]")));
    }
    // x -> x (x) (p, 1-p)
    let mut r = DMatrix::zeros(4, 2);
    r[(0, 0)] = p;
    r[(1, 0)] = 1.0 - p;
    r[(2, 1)] = p;
    r[(3, 1)] = 1.0 - p;
    let rp = ClassicalChannel::new(r)?;
    let gate = match kind {
        ReversibleKind::Hide => cnot_bits_ab(),
        ReversibleKind::Broadcast => cnot_bits_ba(),
    };
    let ch = gate.compose(&rp)?;
    if swapped {
        swap_bits().compose(&ch)
    } else {
        Ok(ch)
    }
}
