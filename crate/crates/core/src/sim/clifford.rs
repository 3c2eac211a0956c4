//! The 24-element single-qubit Clifford group, enumerated exactly as
//! matrices (up to global phase) by closing {H, S} under multiplication.

use std::sync::OnceLock;

use crate::operator::{hadamard, DenseOperator, C64};

fn phase_gate() -> DenseOperator {
    DenseOperator::from_rows(
        2,
        2,
        &[
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 1.0),
        ],
    )
    .unwrap()
}

/// Fix the global phase so the first entry with modulus > 1e-9 is positive
/// real; makes equality-up-to-phase a plain comparison.
fn canonicalize_phase(u: &DenseOperator) -> DenseOperator {
    for r in 0..u.rows() {
        for c in 0..u.cols() {
            let z = u.get(r, c);
            if z.norm() > 1e-9 {
                return u.scale(z.conj() / z.norm());
            }
        }
    }
    u.clone()
}

fn generate() -> Vec<DenseOperator> {
    let gens = [hadamard(), phase_gate()];
    let mut elems: Vec<DenseOperator> = vec![canonicalize_phase(&DenseOperator::identity(2))];
    let mut frontier = elems.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for e in &frontier {
            for g in &gens {
                let candidate = canonicalize_phase(&g.dot(e));
                if !elems.iter().any(|x| x.max_abs_diff(&candidate) < 1e-8) {
                    elems.push(candidate.clone());
                    next.push(candidate);
                }
            }
        }
        frontier = next;
    }
    elems
}

/// All 24 single-qubit Clifford unitaries, phase-canonicalized.
pub fn single_qubit_cliffords() -> &'static [DenseOperator] {
    static CLIFFORDS: OnceLock<Vec<DenseOperator>> = OnceLock::new();
    CLIFFORDS.get_or_init(generate)
}
