//! The unitarity of a channel is its average output purity over the traceless
//! parts of Haar-random pure inputs. It is computed here by several routes,
//! together with eigenvalue-based lower bounds.
//!
//! Routes implemented:
//! - `PtmNorm`: Frobenius norm of the Pauli-transfer unital block,
//!   u = tr(T^T T) / (d_in^2 - 1);
//! - `HaarMonteCarlo`: direct Monte-Carlo average over Haar-random pure
//!   states;
//! - `ComplementaryPurity`: purity of the maximally mixed image through the
//!   channel and any complementary channel;
//! - `ChoiPurity`: purity of the Choi state;
//! - `ClassicalSum`: exact finite sum over classical pure states.

use nalgebra::DMatrix;
use rand::Rng;

use crate::channel::{choi_state, to_ptm, QuantumChannel};
use crate::classical::ClassicalChannel;
use crate::error::{Error, Result};
use crate::operator::{
    eigenvalues, haar_random_ket, haar_random_unitary, DenseOperator, SeededRng, C64,
};

/// How a unitarity value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    HaarMonteCarlo,
    PtmNorm,
    ComplementaryPurity,
    ChoiPurity,
    ClassicalSum,
}

/// A unitarity value with its provenance. Deterministic routes report
/// `stderr = 0`.
#[derive(Clone, Copy, Debug)]
pub struct UnitarityEstimate {
    pub value: f64,
    pub route: Route,
    pub stderr: f64,
    pub samples: usize,
}

impl UnitarityEstimate {
    fn exact(value: f64, route: Route) -> Self {
        Self {
            value,
            route,
            stderr: 0.0,
            samples: 0,
        }
    }
}

/// Purity tr(rho^dag rho); for Hermitian input this is tr(rho^2), and for a
/// traceless difference it is the squared Hilbert-Schmidt norm.
pub fn purity(rho: &DenseOperator) -> Result<f64> {
    if !rho.is_square() {
        return Err(Error::Dimension("purity of a non-square operator".into()));
    }
    Ok(rho.frobenius_sq())
}

/// Purity of a classical (sub-)distribution vector, sum_k v_k^2.
pub fn classical_purity(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Deterministic unitarity from the Pauli-transfer unital block:
/// u = tr(T^T T) / (d_in^2 - 1).
pub fn unitarity_ptm(ch: &QuantumChannel) -> UnitarityEstimate {
    let ptm = to_ptm(ch);
    let denom = (ch.d_in() * ch.d_in() - 1) as f64;
    UnitarityEstimate::exact(ptm.t_frobenius_sq() / denom, Route::PtmNorm)
}

/// Monte-Carlo unitarity over Haar-random pure inputs:
/// u = d/(d-1) * E_psi[ purity(ch(psi - I/d)) ].
pub fn unitarity_haar_mc(
    ch: &QuantumChannel,
    n_samples: usize,
    rng: &mut SeededRng,
) -> Result<UnitarityEstimate> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 Monte-Carlo samples".into(),
        ));
    }
    let d = ch.d_in();
    let scale = d as f64 / (d as f64 - 1.0);
    let mm = DenseOperator::maximally_mixed(d);
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..n_samples {
        let psi = DenseOperator::projector(&haar_random_ket(d, rng));
        let img = ch.apply_hermitian(&psi.sub(&mm));
        let g = img.frobenius_sq();
        sum += g;
        sumsq += g * g;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    // Sample variance of the summand.
    let var = ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(UnitarityEstimate {
        value: scale * mean,
        route: Route::HaarMonteCarlo,
        stderr: scale * (var / n).sqrt(),
        samples: n_samples,
    })
}

/// Unitarity from the purities of the maximally mixed image through the
/// channel and through a complementary channel:
/// u = d/(d^2-1) * (d * purity(comp(I/d)) - purity(ch(I/d))).
pub fn unitarity_complementary(
    ch: &QuantumChannel,
    comp: &QuantumChannel,
) -> Result<UnitarityEstimate> {
    if ch.d_in() != comp.d_in() {
        return Err(Error::Dimension(
            "complementary pair must share the input dimension".into(),
        ));
    }
    let d = ch.d_in() as f64;
    let mm = DenseOperator::maximally_mixed(ch.d_in());
    let g_ch = purity(&ch.apply(&mm)?)?;
    let g_comp = purity(&comp.apply(&mm)?)?;
    Ok(UnitarityEstimate::exact(
        d / (d * d - 1.0) * (d * g_comp - g_ch),
        Route::ComplementaryPurity,
    ))
}

/// Unitarity from the Choi-state purity:
/// u = d/(d^2-1) * (d * purity(J(ch)) - purity(ch(I/d))).
pub fn unitarity_choi(ch: &QuantumChannel) -> Result<UnitarityEstimate> {
    let d = ch.d_in() as f64;
    let mm = DenseOperator::maximally_mixed(ch.d_in());
    let g_j = purity(&choi_state(ch))?;
    let g_ch = purity(&ch.apply(&mm)?)?;
    Ok(UnitarityEstimate::exact(
        d / (d * d - 1.0) * (d * g_j - g_ch),
        Route::ChoiPurity,
    ))
}

/// Exact classical unitarity: u = 1/(d_in - 1) * sum_i purity(ch(x_i - eta)),
/// normalized so the identity channel scores 1.
pub fn unitarity_classical(ch: &ClassicalChannel) -> UnitarityEstimate {
    let d_in = ch.d_in();
    let d_out = ch.d_out();
    let s = ch.matrix();
    let eta = 1.0 / d_in as f64;
    let mut total = 0.0;
    for j in 0..d_in {
        // ch(x_j - eta), column j minus the row average.
        let mut g = 0.0;
        for i in 0..d_out {
            let row_avg: f64 = (0..d_in).map(|jj| s[(i, jj)]).sum::<f64>() * eta;
            let v = s[(i, j)] - row_avg;
            g += v * v;
        }
        total += g;
    }
    UnitarityEstimate::exact(total / (d_in as f64 - 1.0), Route::ClassicalSum)
}

fn unital_block_as_operator(t: &DMatrix<f64>) -> DenseOperator {
    let (r, c) = t.shape();
    let mut m = DenseOperator::zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            m.set(i, j, C64::new(t[(i, j)], 0.0));
        }
    }
    m
}

/// Sum of squared eigenvalue moduli of the unital block of
/// U_i . ch . U_j, divided by d^2 - 1. Never exceeds the unitarity.
fn eigenvalue_bound_for_setting(
    t_ch: &DMatrix<f64>,
    u_i: &DenseOperator,
    u_j: &DenseOperator,
) -> Result<f64> {
    let t_i = to_ptm(&QuantumChannel::from_unitary(u_i)?).t;
    let t_j = to_ptm(&QuantumChannel::from_unitary(u_j)?).t;
    let composed = t_i * t_ch * t_j;
    let n = composed.nrows() as f64;
    let eigs = eigenvalues(&unital_block_as_operator(&composed))?;
    Ok(eigs.iter().map(|z| z.norm_sqr()).sum::<f64>() / n)
}

/// Lower bound on the unitarity: maximum over `n_settings` sampled unitary
/// pairs (U_i, U_j) of the squared eigenvalue sum of the composed unital
/// block. The first setting conjugates by a single random frame
/// (U, U^dag); eigenvalues are frame-invariant, so this evaluates the
/// channel's own spectrum. The remaining settings draw independent
/// Haar pairs, which make the maximum converge to the unitarity.
pub fn spectral_lower_bound(
    ch: &QuantumChannel,
    n_settings: usize,
    rng: &mut SeededRng,
) -> Result<f64> {
    if ch.d_in() != ch.d_out() {
        return Err(Error::Dimension(
            "spectral bound needs equal input/output dimensions".into(),
        ));
    }
    if n_settings < 1 {
        return Err(Error::InvalidArgument("need at least one setting".into()));
    }
    let d = ch.d_in();
    let t_ch = to_ptm(ch).t;
    let mut best = f64::NEG_INFINITY;
    for setting in 0..n_settings {
        let u_i = haar_random_unitary(d, rng);
        let u_j = if setting == 0 {
            u_i.dagger()
        } else {
            haar_random_unitary(d, rng)
        };
        best = best.max(eigenvalue_bound_for_setting(&t_ch, &u_i, &u_j)?);
    }
    Ok(best)
}

/// Variational unitarity estimate for a single-qubit channel: the same
/// maximization as [`spectral_lower_bound`], which converges to the
/// unitarity itself as the number of settings grows.
pub fn spectral_variational(
    ch: &QuantumChannel,
    n_settings: usize,
    rng: &mut SeededRng,
) -> Result<f64> {
    if ch.d_in() != 2 || ch.d_out() != 2 {
        return Err(Error::UnsupportedDimension(
            "variational estimate is defined for single-qubit channels".into(),
        ));
    }
    spectral_lower_bound(ch, n_settings, rng)
}

/// Random projective (sharp) measurement in a Haar-rotated basis; used by
/// the purity-maximization check.
pub fn random_projective_measurement(d: usize, rng: &mut SeededRng) -> Vec<DenseOperator> {
    let u = haar_random_unitary(d, rng);
    (0..d)
        .map(|k| {
            let mut col = DenseOperator::zeros(d, 1);
            for i in 0..d {
                col.set(i, 0, u.get(i, k));
            }
            DenseOperator::projector(&col)
        })
        .collect()
}

/// Random mixed state of dimension d with Haar eigenbasis and uniform
/// simplex eigenvalues.
pub fn random_mixed_state(d: usize, rng: &mut SeededRng) -> DenseOperator {
    let u = haar_random_unitary(d, rng);
    // Uniform on the simplex via normalized exponentials.
    let mut w: Vec<f64> = (0..d).map(|_| -(1.0f64 - rng.gen::<f64>()).ln()).collect();
    let sum: f64 = w.iter().sum();
    for x in &mut w {
        *x /= sum;
    }
    let mut diag = DenseOperator::zeros(d, d);
    for (i, &wi) in w.iter().enumerate() {
        diag.set(i, i, C64::new(wi, 0.0));
    }
    u.dot(&diag).dot(&u.dagger())
}
