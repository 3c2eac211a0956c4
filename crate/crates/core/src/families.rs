//! Two-qubit unitary families whose marginals trace out the boundary of the
//! (2,2,2) CUP-set, plus the parametrized isometry circuits that cover its
//! interior.

use std::f64::consts::FRAC_PI_2;

use crate::error::Result;
use crate::operator::{
    cnot_ab, cnot_ba, ry, rz, swap_gate, tensor, unitary_fractional_power, DenseOperator,
};

/// SWAP^alpha for alpha in [0, 1].
pub fn family_swap_alpha(alpha: f64) -> Result<DenseOperator> {
    unitary_fractional_power(&swap_gate(), alpha)
}

/// CNOT_AB^alpha (control on A).
pub fn family_cnot_ab_alpha(alpha: f64) -> Result<DenseOperator> {
    unitary_fractional_power(&cnot_ab(), alpha)
}

/// CNOT_BA^alpha composed after CNOT_AB.
pub fn family_cnotba_cnotab(alpha: f64) -> Result<DenseOperator> {
    Ok(unitary_fractional_power(&cnot_ba(), alpha)?.dot(&cnot_ab()))
}

/// CNOT_AB^alpha composed after CNOT_BA after CNOT_AB; with a maximally
/// mixed ancilla this family pins the u = 0 edge of the reversible set.
pub fn family_cnotab_alpha_cnotba_cnotab(alpha: f64) -> Result<DenseOperator> {
    Ok(unitary_fractional_power(&cnot_ab(), alpha)?
        .dot(&cnot_ba())
        .dot(&cnot_ab()))
}

/// Two-parameter 2-qubit isometry circuit: R_Y(pi/2 - 2 alpha) on the
/// ancilla, CNOT with qubit 0 as control, R_Y(2 beta - pi/2) on the ancilla,
/// CNOT with qubit 1 as control. Sweeping alpha, beta over [0, pi] generates
/// every point of the (2,2,2) CUP-set.
pub fn isometry_family_two_param(alpha: f64, beta: f64) -> DenseOperator {
    let i2 = DenseOperator::identity(2);
    let step1 = tensor(&i2, &ry(FRAC_PI_2 - 2.0 * alpha));
    let step2 = cnot_ab();
    let step3 = tensor(&i2, &ry(2.0 * beta - FRAC_PI_2));
    let step4 = cnot_ba();
    step4.dot(&step3).dot(&step2).dot(&step1)
}

/// Three-parameter generic 2-qubit isometry circuit; the extra R_Z pair acts
/// as local rotations so the (u, ubar) image coincides with the
/// two-parameter family.
pub fn isometry_family_generic(alpha: f64, beta: f64, gamma: f64) -> DenseOperator {
    let i2 = DenseOperator::identity(2);
    let mut u = tensor(&i2, &rz(FRAC_PI_2));
    u = cnot_ba().dot(&u);
    u = tensor(&rz(2.0 * gamma - FRAC_PI_2), &ry(FRAC_PI_2 - 2.0 * alpha)).dot(&u);
    u = cnot_ab().dot(&u);
    u = tensor(&i2, &ry(2.0 * beta - FRAC_PI_2)).dot(&u);
    u = cnot_ba().dot(&u);
    tensor(&rz(-FRAC_PI_2), &i2).dot(&u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{SeededRng, OP_TOL};
    use rand::Rng;

    #[test]
    fn swap_family_endpoints() {
        let s1 = family_swap_alpha(1.0).unwrap();
        assert!(s1.max_abs_diff(&swap_gate()) <= 1e-12);
        let s0 = family_swap_alpha(0.0).unwrap();
        assert!(s0.max_abs_diff(&DenseOperator::identity(4)) <= 1e-12);
    }

    #[test]
    fn cnot_half_power_coefficients() {
        // At alpha = 1/2 the target-block coefficients are (1 +- i)/2.
        let u = family_cnot_ab_alpha(0.5).unwrap();
        let c = u.get(2, 2);
        assert!((c - crate::operator::C64::new(0.5, 0.5)).norm() <= 1e-12);
        let x = u.get(2, 3);
        assert!((x - crate::operator::C64::new(0.5, -0.5)).norm() <= 1e-12);
    }

    #[test]
    fn cnotba_cnotab_at_zero_is_cnotab() {
        let u = family_cnotba_cnotab(0.0).unwrap();
        assert!(u.max_abs_diff(&cnot_ab()) <= 1e-12);
    }

    #[test]
    fn two_param_family_is_unitary() {
        let mut rng = SeededRng::new(12);
        for _ in 0..100 {
            let a: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            let b: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            assert!(isometry_family_two_param(a, b).is_unitary(OP_TOL));
        }
    }

    #[test]
    fn generic_family_is_unitary() {
        let mut rng = SeededRng::new(13);
        for _ in 0..100 {
            let a: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            let b: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            let g: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            assert!(isometry_family_generic(a, b, g).is_unitary(OP_TOL));
        }
    }
}
