//! Generation and verification of CUP-set point clouds: closed-form boundary
//! curves, Haar-random clouds, the exact classical sets, band and no-hiding
//! checks, and the depolarizing deformation model with its least-squares fit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::channel::{marginal_channels, pauli_hiding_isometry, QuantumChannel};
use crate::classical::{
    classical_isometries_1to2, classical_marginals, classical_reversible_family, ReversibleKind,
};
use crate::error::{Error, Result};
use crate::families;
use crate::operator::{haar_random_ket, haar_random_unitary, DenseOperator, SeededRng};
use crate::unitarity::{unitarity_classical, unitarity_ptm};

/// Which class of global channels a sample was drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Isometric,
    Reversible,
    Full,
}

/// Generating family of a CUP sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    SwapAlpha,
    CnotAlpha,
    CnotBaCnotAb,
    CnotAlphaRev,
    TwoParamGrid,
    ThreeParamGrid,
    HaarRandom,
    ClassicalEnum,
    PauliHiding,
    Custom,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Variant::Isometric => "isometric",
            Variant::Reversible => "reversible",
            Variant::Full => "full",
        };
        write!(f, "{s}")
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "isometric" => Ok(Variant::Isometric),
            "reversible" => Ok(Variant::Reversible),
            "full" => Ok(Variant::Full),
            other => Err(Error::InvalidArgument(format!("unknown variant '{other}'"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::SwapAlpha => "swap-alpha",
            Family::CnotAlpha => "cnot-alpha",
            Family::CnotBaCnotAb => "cnot-ba-cnot-ab",
            Family::CnotAlphaRev => "cnot-rev",
            Family::TwoParamGrid => "two-param-grid",
            Family::ThreeParamGrid => "three-param-grid",
            Family::HaarRandom => "haar-random",
            Family::ClassicalEnum => "classical-enum",
            Family::PauliHiding => "pauli-hiding",
            Family::Custom => "custom",
        };
        write!(f, "{s}")
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "swap-alpha" => Ok(Family::SwapAlpha),
            "cnot-alpha" => Ok(Family::CnotAlpha),
            "cnot-ba-cnot-ab" => Ok(Family::CnotBaCnotAb),
            "cnot-rev" => Ok(Family::CnotAlphaRev),
            "two-param-grid" => Ok(Family::TwoParamGrid),
            "three-param-grid" => Ok(Family::ThreeParamGrid),
            "haar-random" => Ok(Family::HaarRandom),
            "classical-enum" => Ok(Family::ClassicalEnum),
            "pauli-hiding" => Ok(Family::PauliHiding),
            "custom" => Ok(Family::Custom),
            other => Err(Error::InvalidArgument(format!("unknown family '{other}'"))),
        }
    }
}

/// One point (u, ubar) of a CUP-set with its provenance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CupSample {
    pub u: f64,
    pub ubar: f64,
    pub variant: Variant,
    pub family: Family,
    pub params: Vec<f64>,
    pub dims: (usize, usize, usize),
}

/// Best-fit depolarizing deformation ((1-p_A)^2 u, (1-p_B)^2 ubar).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DepolarFit {
    pub p_a: f64,
    pub p_b: f64,
    pub residual: f64,
}

/// Closed-form boundary point of the SWAP^alpha family:
/// (u, ubar) = ((1-s)(3-s)/3, 1 - (1-s)(3+s)/3) with s = sin^2(pi alpha / 2).
pub fn boundary_swap_alpha(alpha: f64) -> CupSample {
    let s = (std::f64::consts::PI * alpha / 2.0).sin().powi(2);
    CupSample {
        u: (1.0 - s) * (3.0 - s) / 3.0,
        ubar: 1.0 - (1.0 - s) * (3.0 + s) / 3.0,
        variant: Variant::Isometric,
        family: Family::SwapAlpha,
        params: vec![alpha],
        dims: (2, 2, 2),
    }
}

/// Closed-form boundary point of the CNOT_AB^alpha family:
/// (u, ubar) = (1 - 2s/3, s/3).
pub fn boundary_cnot_ab(alpha: f64) -> CupSample {
    let s = (std::f64::consts::PI * alpha / 2.0).sin().powi(2);
    CupSample {
        u: 1.0 - 2.0 * s / 3.0,
        ubar: s / 3.0,
        variant: Variant::Isometric,
        family: Family::CnotAlpha,
        params: vec![alpha],
        dims: (2, 2, 2),
    }
}

/// Closed-form boundary point of the CNOT_BA^alpha . CNOT_AB family:
/// (u, ubar) = ((1-s)/3, 1 - 2(1-s)/3).
pub fn boundary_cnotba_cnotab(alpha: f64) -> CupSample {
    let s = (std::f64::consts::PI * alpha / 2.0).sin().powi(2);
    CupSample {
        u: (1.0 - s) / 3.0,
        ubar: 1.0 - 2.0 * (1.0 - s) / 3.0,
        variant: Variant::Isometric,
        family: Family::CnotBaCnotAb,
        params: vec![alpha],
        dims: (2, 2, 2),
    }
}

/// Upper boundary of the (2,2,2) CUP-set: ubar = 3 + u - 2 sqrt(1 + 3u).
pub fn upper_boundary_relation(u: f64) -> f64 {
    3.0 + u - 2.0 * (1.0 + 3.0 * u).sqrt()
}

/// Band bounds on u + ubar for isometric samples with the given dimensions:
/// lower = d_X/(d_X+1) (1/d_A + 1/d_B), upper = 1.
pub fn band_bounds(dims: (usize, usize, usize)) -> (f64, f64) {
    let (dx, da, db) = dims;
    let lower = dx as f64 / (dx as f64 + 1.0) * (1.0 / da as f64 + 1.0 / db as f64);
    (lower, 1.0)
}

/// True iff an isometric sample lies inside its dimensional band
/// (tolerance 1e-9 on both sides).
pub fn verify_band(sample: &CupSample) -> bool {
    let (lower, upper) = band_bounds(sample.dims);
    let s = sample.u + sample.ubar;
    s >= lower - 1e-9 && s <= upper + 1e-9
}

/// Numeric pipeline: build the global unitary, take both marginals with the
/// given ancilla, and score them through the transfer-block route.
pub fn cup_from_unitary(
    u_ab: &DenseOperator,
    d_a: usize,
    d_b: usize,
    ancilla: &DenseOperator,
    variant: Variant,
    family: Family,
    params: Vec<f64>,
) -> Result<CupSample> {
    let (e, ebar) = marginal_channels(u_ab, d_a, d_b, ancilla)?;
    let d_x = (d_a * d_b) / ancilla.rows();
    Ok(CupSample {
        u: unitarity_ptm(&e).value,
        ubar: unitarity_ptm(&ebar).value,
        variant,
        family,
        params,
        dims: (d_x, d_a, d_b),
    })
}

fn alpha_grid(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Grid over [0, pi] that includes the quarter-multiples of pi where the
/// extremal circuits of the two-parameter family sit.
fn angle_grid(n: usize) -> Vec<f64> {
    let n = n.max(2);
    // Round the node count up so that (count - 1) is a multiple of 4.
    let count = if (n - 1).is_multiple_of(4) {
        n
    } else {
        n + 4 - (n - 1) % 4
    };
    (0..count)
        .map(|i| std::f64::consts::PI * i as f64 / (count - 1) as f64)
        .collect()
}

/// Generate a CUP-set point cloud.
///
/// Parametric families take a uniform alpha grid of `n_points`; grid
/// families sweep `n_points` nodes per circuit parameter; `HaarRandom` draws
/// `n_points` Haar unitaries with a pure (isometric) or sampled-mixed
/// (reversible) ancilla. The reversible boundary families use the maximally
/// mixed ancilla. `Full` depolarizes isometric Haar samples by uniformly
/// sampled (p_A, p_B).
pub fn generate_cupset(
    variant: Variant,
    family: Family,
    n_points: usize,
    dims: (usize, usize, usize),
    rng: &mut SeededRng,
) -> Result<Vec<CupSample>> {
    let (d_x, d_a, d_b) = dims;
    let quantum_222 = dims == (2, 2, 2);
    if !quantum_222 && family != Family::PauliHiding {
        return Err(Error::UnsupportedDimension(format!(
            "family {family} is only generated at dims (2,2,2), got ({d_x},{d_a},{d_b})"
        )));
    }
    let pure_anc = DenseOperator::basis_projector(0, 2);
    let mixed_anc = DenseOperator::maximally_mixed(2);

    let samples: Vec<CupSample> = match family {
        Family::SwapAlpha => alpha_grid(n_points)
            .into_iter()
            .map(|a| {
                cup_from_unitary(
                    &families::family_swap_alpha(a)?,
                    2,
                    2,
                    &pure_anc,
                    Variant::Isometric,
                    Family::SwapAlpha,
                    vec![a],
                )
            })
            .collect::<Result<_>>()?,
        Family::CnotAlpha => {
            let (anc, variant_out) = match variant {
                Variant::Reversible => (&mixed_anc, Variant::Reversible),
                _ => (&pure_anc, Variant::Isometric),
            };
            alpha_grid(n_points)
                .into_iter()
                .map(|a| {
                    cup_from_unitary(
                        &families::family_cnot_ab_alpha(a)?,
                        2,
                        2,
                        anc,
                        variant_out,
                        Family::CnotAlpha,
                        vec![a],
                    )
                })
                .collect::<Result<_>>()?
        }
        Family::CnotBaCnotAb => {
            let (anc, variant_out) = match variant {
                Variant::Reversible => (&mixed_anc, Variant::Reversible),
                _ => (&pure_anc, Variant::Isometric),
            };
            alpha_grid(n_points)
                .into_iter()
                .map(|a| {
                    cup_from_unitary(
                        &families::family_cnotba_cnotab(a)?,
                        2,
                        2,
                        anc,
                        variant_out,
                        Family::CnotBaCnotAb,
                        vec![a],
                    )
                })
                .collect::<Result<_>>()?
        }
        Family::CnotAlphaRev => alpha_grid(n_points)
            .into_iter()
            .map(|a| {
                cup_from_unitary(
                    &families::family_cnotab_alpha_cnotba_cnotab(a)?,
                    2,
                    2,
                    &mixed_anc,
                    Variant::Reversible,
                    Family::CnotAlphaRev,
                    vec![a],
                )
            })
            .collect::<Result<_>>()?,
        Family::TwoParamGrid => {
            let grid = angle_grid(n_points);
            let mut out = Vec::with_capacity(grid.len() * grid.len());
            for &a in &grid {
                for &b in &grid {
                    out.push(cup_from_unitary(
                        &families::isometry_family_two_param(a, b),
                        2,
                        2,
                        &pure_anc,
                        Variant::Isometric,
                        Family::TwoParamGrid,
                        vec![a, b],
                    )?);
                }
            }
            out
        }
        Family::ThreeParamGrid => {
            let grid = angle_grid(n_points);
            let mut out = Vec::with_capacity(grid.len().pow(3));
            for &a in &grid {
                for &b in &grid {
                    for &g in &grid {
                        out.push(cup_from_unitary(
                            &families::isometry_family_generic(a, b, g),
                            2,
                            2,
                            &pure_anc,
                            Variant::Isometric,
                            Family::ThreeParamGrid,
                            vec![a, b, g],
                        )?);
                    }
                }
            }
            out
        }
        Family::HaarRandom => {
            let seeds: Vec<u64> = (0..n_points as u64).collect();
            let master = rng.seed();
            seeds
                .par_iter()
                .map(|&i| {
                    let mut local = SeededRng::new(master).fork(i);
                    let u = haar_random_unitary(4, &mut local);
                    match variant {
                        Variant::Isometric => {
                            let anc = DenseOperator::projector(&haar_random_ket(2, &mut local));
                            cup_from_unitary(
                                &u,
                                2,
                                2,
                                &anc,
                                Variant::Isometric,
                                Family::HaarRandom,
                                vec![i as f64],
                            )
                        }
                        Variant::Reversible => {
                            let anc = crate::unitarity::random_mixed_state(2, &mut local);
                            cup_from_unitary(
                                &u,
                                2,
                                2,
                                &anc,
                                Variant::Reversible,
                                Family::HaarRandom,
                                vec![i as f64],
                            )
                        }
                        Variant::Full => {
                            use rand::Rng;
                            let anc = DenseOperator::projector(&haar_random_ket(2, &mut local));
                            let base = cup_from_unitary(
                                &u,
                                2,
                                2,
                                &anc,
                                Variant::Isometric,
                                Family::HaarRandom,
                                vec![i as f64],
                            )?;
                            let p_a: f64 = local.gen_range(0.0..1.0);
                            let p_b: f64 = local.gen_range(0.0..1.0);
                            Ok(apply_depolarizing(&base, p_a, p_b))
                        }
                    }
                })
                .collect::<Result<Vec<_>>>()?
        }
        Family::PauliHiding => pauli_hiding_samples()?,
        Family::ClassicalEnum => classical_cupset(variant, n_points),
        Family::Custom => {
            return Err(Error::InvalidArgument(
                "custom family has no generator".into(),
            ))
        }
    };
    Ok(samples)
}

/// The hiding-channel point (0,0) as a reversible sample at dims (2,2,4),
/// plus the three bipartite groupings of its isometric dilation. All four
/// are marginal pairs of the dilation V: 2 -> 2 (x) 4 (x) 4.
pub fn pauli_hiding_samples() -> Result<Vec<CupSample>> {
    let v = pauli_hiding_isometry(); // 32 x 2
    let samples = vec![
        // Reversible point: A-marginal and register-marginal of the hiding
        // channel itself (dims (2,2,4)).
        {
            let (e, ebar) = isometry_marginals(&v, &[2, 4, 4], &[0], &[1])?;
            CupSample {
                u: unitarity_ptm(&e).value,
                ubar: unitarity_ptm(&ebar).value,
                variant: Variant::Reversible,
                family: Family::PauliHiding,
                params: vec![],
                dims: (2, 2, 4),
            }
        },
        // Isometric bipartitions of the full dilation: A|BC, B|AC, C|AB.
        {
            let (e, ebar) = isometry_marginals(&v, &[2, 4, 4], &[0], &[1, 2])?;
            CupSample {
                u: unitarity_ptm(&e).value,
                ubar: unitarity_ptm(&ebar).value,
                variant: Variant::Isometric,
                family: Family::PauliHiding,
                params: vec![0.0],
                dims: (2, 2, 16),
            }
        },
        {
            let (e, ebar) = isometry_marginals(&v, &[2, 4, 4], &[1], &[0, 2])?;
            CupSample {
                u: unitarity_ptm(&e).value,
                ubar: unitarity_ptm(&ebar).value,
                variant: Variant::Isometric,
                family: Family::PauliHiding,
                params: vec![1.0],
                dims: (2, 4, 8),
            }
        },
        {
            let (e, ebar) = isometry_marginals(&v, &[2, 4, 4], &[2], &[0, 1])?;
            CupSample {
                u: unitarity_ptm(&e).value,
                ubar: unitarity_ptm(&ebar).value,
                variant: Variant::Isometric,
                family: Family::PauliHiding,
                params: vec![2.0],
                dims: (2, 4, 8),
            }
        },
    ];
    Ok(samples)
}

/// Marginal channels of an explicit isometry V (columns = images of basis
/// kets), keeping the listed output subsystems.
fn isometry_marginals(
    v: &DenseOperator,
    out_dims: &[usize],
    keep_a: &[usize],
    keep_b: &[usize],
) -> Result<(QuantumChannel, QuantumChannel)> {
    let d_in = v.cols();
    let kraus_for = |keep: &[usize]| -> Result<Vec<DenseOperator>> {
        // E(rho) = tr_rest[ V rho V^dag ]; Kraus by projecting the traced
        // factor onto its basis.
        let traced: Vec<usize> = (0..out_dims.len()).filter(|j| !keep.contains(j)).collect();
        let d_keep: usize = keep.iter().map(|&j| out_dims[j]).product();
        let d_traced: usize = traced.iter().map(|&j| out_dims[j]).product();
        let n = out_dims.len();
        let mut strides = vec![1usize; n];
        for j in (0..n.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * out_dims[j + 1];
        }
        let mut kraus = vec![DenseOperator::zeros(d_keep, d_in); d_traced];
        let total: usize = out_dims.iter().product();
        for row in 0..total {
            let mut rr = row;
            let mut keep_idx = 0usize;
            let mut traced_idx = 0usize;
            for j in 0..n {
                let ij = rr / strides[j];
                rr %= strides[j];
                if keep.contains(&j) {
                    keep_idx = keep_idx * out_dims[j] + ij;
                } else {
                    traced_idx = traced_idx * out_dims[j] + ij;
                }
            }
            for c in 0..d_in {
                let val = v.get(row, c);
                let prev = kraus[traced_idx].get(keep_idx, c);
                kraus[traced_idx].set(keep_idx, c, prev + val);
            }
        }
        Ok(kraus)
    };
    Ok((
        QuantumChannel::new(kraus_for(keep_a)?)?,
        QuantumChannel::new(kraus_for(keep_b)?)?,
    ))
}

/// Exact classical CUP-sets for 1 bit into 2 bits.
///
/// - `Isometric`: dedup of the finite isometry enumeration (3 points);
/// - `Reversible`: p-grid over the hide/broadcast families and their
///   output-swapped versions (the border of the unit square);
/// - `Full`: reversible points squashed toward the origin by a p^2 grid.
pub fn classical_cupset(variant: Variant, n_points: usize) -> Vec<CupSample> {
    match variant {
        Variant::Isometric => {
            let mut points: Vec<CupSample> = Vec::new();
            for iso in classical_isometries_1to2() {
                let (ma, mb) = classical_marginals(&iso, 2, 2).expect("2x2 outputs");
                let u = unitarity_classical(&ma).value;
                let ubar = unitarity_classical(&mb).value;
                if !points
                    .iter()
                    .any(|p| (p.u - u).abs() < 1e-12 && (p.ubar - ubar).abs() < 1e-12)
                {
                    points.push(CupSample {
                        u,
                        ubar,
                        variant: Variant::Isometric,
                        family: Family::ClassicalEnum,
                        params: vec![],
                        dims: (2, 2, 2),
                    });
                }
            }
            points
        }
        Variant::Reversible => {
            let mut points = Vec::new();
            for (k, kind) in [ReversibleKind::Hide, ReversibleKind::Broadcast]
                .into_iter()
                .enumerate()
            {
                for swapped in [false, true] {
                    for p in alpha_grid(n_points.max(2)) {
                        let ch = classical_reversible_family(kind, p, swapped).expect("p in range");
                        let (ma, mb) = classical_marginals(&ch, 2, 2).expect("2x2 outputs");
                        points.push(CupSample {
                            u: unitarity_classical(&ma).value,
                            ubar: unitarity_classical(&mb).value,
                            variant: Variant::Reversible,
                            family: Family::ClassicalEnum,
                            params: vec![k as f64, if swapped { 1.0 } else { 0.0 }, p],
                            dims: (2, 2, 2),
                        });
                    }
                }
            }
            points
        }
        Variant::Full => {
            let border = classical_cupset(Variant::Reversible, n_points);
            let mut points = Vec::new();
            for sample in border {
                for q in alpha_grid(n_points.max(2)) {
                    let mut s = apply_depolarizing(&sample, 1.0 - q, 1.0 - q);
                    s.variant = Variant::Full;
                    points.push(s);
                }
            }
            points
        }
    }
}

/// Report from [`no_hiding_check`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoHidingReport {
    pub checked: usize,
    /// Samples with u <= eps.
    pub near_zero: usize,
    /// Near-zero samples violating ubar >= 1 - 2 eps - 1e-9.
    pub violations: Vec<CupSample>,
}

impl NoHidingReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// No-hiding frontier check for equal-dimension isometric samples: every
/// sample with u <= eps must satisfy ubar >= 1 - 2 eps - 1e-9 (the exact
/// frontier near u = 0 is the line ubar = 1 - 2u).
pub fn no_hiding_check(samples: &[CupSample], eps: f64) -> NoHidingReport {
    let mut near_zero = 0;
    let mut violations = Vec::new();
    for s in samples {
        if s.u <= eps {
            near_zero += 1;
            if s.ubar < 1.0 - 2.0 * eps - 1e-9 {
                violations.push(s.clone());
            }
        }
    }
    NoHidingReport {
        checked: samples.len(),
        near_zero,
        violations,
    }
}

/// Depolarize a sample: ((1-p_A)^2 u, (1-p_B)^2 ubar); the result belongs to
/// the full CUP-set.
pub fn apply_depolarizing(sample: &CupSample, p_a: f64, p_b: f64) -> CupSample {
    let mut out = sample.clone();
    out.u *= (1.0 - p_a) * (1.0 - p_a);
    out.ubar *= (1.0 - p_b) * (1.0 - p_b);
    out.variant = Variant::Full;
    out
}

/// Least-squares fit of the depolarizing deformation mapping `ideal` onto
/// `noisy`: linear in a = (1-p_A)^2 and b = (1-p_B)^2 per axis, clamped to
/// [0, 1].
pub fn fit_depolarizing(noisy: &[CupSample], ideal: &[CupSample]) -> Result<DepolarFit> {
    if noisy.is_empty() || ideal.is_empty() {
        return Err(Error::EmptyData("depolarizing fit needs data".into()));
    }
    if noisy.len() != ideal.len() {
        return Err(Error::Dimension(format!(
            "noisy and ideal lists must align ({} vs {})",
            noisy.len(),
            ideal.len()
        )));
    }
    let fit_axis = |pairs: &mut dyn Iterator<Item = (f64, f64)>| -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (ideal_v, noisy_v) in pairs {
            num += ideal_v * noisy_v;
            den += ideal_v * ideal_v;
        }
        if den <= 0.0 {
            // Axis carries no signal; no depolarization is identifiable.
            1.0
        } else {
            (num / den).clamp(0.0, 1.0)
        }
    };
    let a = fit_axis(&mut noisy.iter().zip(ideal).map(|(n, i)| (i.u, n.u)));
    let b = fit_axis(&mut noisy.iter().zip(ideal).map(|(n, i)| (i.ubar, n.ubar)));
    let mut residual = 0.0;
    for (n, i) in noisy.iter().zip(ideal) {
        residual += (a * i.u - n.u).powi(2) + (b * i.ubar - n.ubar).powi(2);
    }
    Ok(DepolarFit {
        p_a: 1.0 - a.sqrt(),
        p_b: 1.0 - b.sqrt(),
        residual,
    })
}
