//! Gate-level circuit description consumed by the density-matrix runner.

use crate::error::{Error, Result};
use crate::operator::DenseOperator;

/// One gate application. Qubit 0 is the most-significant wire.
#[derive(Clone, Debug)]
pub enum Gate {
    H(usize),
    X(usize),
    SqrtX(usize),
    Ry(usize, f64),
    Rz(usize, f64),
    Cnot(usize, usize),
    Cswap(usize, usize, usize),
    Swap(usize, usize),
    /// Trace out the qubit and re-prepare |0>; incoherent by construction.
    Reset(usize),
    /// Arbitrary unitary on the listed qubits (first entry = most
    /// significant index of the matrix).
    Unitary(DenseOperator, Vec<usize>),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::H(q) | Gate::X(q) | Gate::SqrtX(q) | Gate::Ry(q, _) | Gate::Rz(q, _) => {
                vec![*q]
            }
            Gate::Cnot(c, t) => vec![*c, *t],
            Gate::Cswap(c, a, b) => vec![*c, *a, *b],
            Gate::Swap(a, b) => vec![*a, *b],
            Gate::Reset(q) => vec![*q],
            Gate::Unitary(_, qs) => qs.clone(),
        }
    }

    /// Key used to look up depolarizing strength in the noise model.
    pub fn noise_key(&self) -> &'static str {
        match self {
            Gate::H(_) => "h",
            Gate::X(_) => "x",
            Gate::SqrtX(_) => "sx",
            Gate::Ry(..) => "ry",
            Gate::Rz(..) => "rz",
            Gate::Cnot(..) => "cnot",
            Gate::Cswap(..) => "cswap",
            Gate::Swap(..) => "swap",
            Gate::Reset(_) => "reset",
            Gate::Unitary(..) => "unitary",
        }
    }
}

/// Ordered gate list on `n_qubits` wires with an optional final Z-basis
/// measurement of one qubit.
#[derive(Clone, Debug, Default)]
pub struct CircuitSpec {
    pub n_qubits: usize,
    pub ops: Vec<Gate>,
    /// Qubit measured in the Z basis at the end, if any.
    pub measure: Option<usize>,
}

impl CircuitSpec {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            ops: Vec::new(),
            measure: None,
        }
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.ops.push(gate);
        self
    }

    pub fn with_measurement(mut self, qubit: usize) -> Self {
        self.measure = Some(qubit);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::Dimension("circuit needs at least one qubit".into()));
        }
        for gate in &self.ops {
            let qs = gate.qubits();
            for &q in &qs {
                if q >= self.n_qubits {
                    return Err(Error::Dimension(format!(
                        "gate touches qubit {q} but the circuit has {} qubits",
                        self.n_qubits
                    )));
                }
            }
            let mut sorted = qs.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != qs.len() {
                return Err(Error::Dimension("gate repeats a qubit".into()));
            }
            match gate {
                Gate::Ry(_, theta) | Gate::Rz(_, theta) => {
                    if !theta.is_finite() {
                        return Err(Error::InvalidArgument("non-finite angle".into()));
                    }
                }
                Gate::Unitary(m, qs) => {
                    let d = 1usize << qs.len();
                    if m.rows() != d || m.cols() != d {
                        return Err(Error::Dimension(format!(
                            "unitary is {}x{} but acts on {} qubits",
                            m.rows(),
                            m.cols(),
                            qs.len()
                        )));
                    }
                }
                _ => {}
            }
        }
        if let Some(q) = self.measure {
            if q >= self.n_qubits {
                return Err(Error::Dimension("measured qubit out of range".into()));
            }
        }
        Ok(())
    }
}
