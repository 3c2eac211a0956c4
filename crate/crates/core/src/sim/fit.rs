//! Exponential decay fitting y = c0 + c1 s^(k-1) by damped Gauss-Newton
//! (Levenberg-Marquardt) with a log-linear initialization.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Fitted decay parameters. `s_stderr` is derived from the Jacobian at the
/// optimum and is infinite when the decay rate is unidentifiable (flat
/// data).
#[derive(Clone, Copy, Debug)]
pub struct DecayFit {
    pub c0: f64,
    pub c1: f64,
    pub s: f64,
    pub residual: f64,
    pub s_stderr: f64,
}

const S_MAX: f64 = 1.05;

fn model(c0: f64, c1: f64, s: f64, k: usize) -> f64 {
    c0 + c1 * s.powi(k as i32 - 1)
}

fn residual_sq(xs: &[usize], ys: &[f64], c0: f64, c1: f64, s: f64) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&k, &y)| (y - model(c0, c1, s, k)).powi(2))
        .sum()
}

/// Log-linear initialization: regress ln(max(y - min(y), eps)) on (k - 1).
fn initial_guess(xs: &[usize], ys: &[f64], with_offset: bool) -> (f64, f64, f64) {
    let min_y = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let floor = if with_offset { min_y } else { 0.0 };
    let eps = 1e-9;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let n = xs.len() as f64;
    for (&k, &y) in xs.iter().zip(ys) {
        let x = (k - 1) as f64;
        let ly = (y - floor).max(eps).ln();
        sx += x;
        sy += ly;
        sxx += x * x;
        sxy += x * ly;
    }
    let denom = n * sxx - sx * sx;
    let (slope, intercept) = if denom.abs() < 1e-12 {
        (0.0, sy / n)
    } else {
        ((n * sxy - sx * sy) / denom, (sy * sxx - sx * sxy) / denom)
    };
    let s0 = slope.exp().clamp(1e-6, S_MAX);
    let c1_0 = intercept.exp();
    (floor, c1_0, s0)
}

/// Nonlinear least squares for y = c0 + c1 s^(k-1) with s constrained to
/// [0, 1.05]; c0 is fixed to 0 unless `with_offset`.
pub fn fit_decay(xs: &[usize], ys: &[f64], with_offset: bool) -> Result<DecayFit> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension("xs and ys lengths differ".into()));
    }
    if xs.len() < 3 {
        return Err(Error::EmptyData("decay fit needs at least 3 points".into()));
    }
    if xs.iter().any(|&k| k < 1) {
        return Err(Error::InvalidArgument(
            "sequence lengths must be at least 1".into(),
        ));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::Fit {
            reason: "non-finite observations".into(),
            xs: xs.to_vec(),
            ys: ys.to_vec(),
        });
    }

    let (mut c0, mut c1, mut s) = initial_guess(xs, ys, with_offset);
    if !with_offset {
        c0 = 0.0;
    }
    let n_params = if with_offset { 3 } else { 2 };
    let mut lambda = 1e-3;
    let mut sse = residual_sq(xs, ys, c0, c1, s);
    for _ in 0..500 {
        // Jacobian of residuals r_i = y_i - model(x_i).
        let m = xs.len();
        let mut jac = DMatrix::zeros(m, n_params);
        let mut r = DVector::zeros(m);
        for (i, (&k, &y)) in xs.iter().zip(ys).enumerate() {
            r[i] = y - model(c0, c1, s, k);
            let mut col = 0;
            if with_offset {
                jac[(i, col)] = -1.0;
                col += 1;
            }
            jac[(i, col)] = -s.powi(k as i32 - 1);
            col += 1;
            jac[(i, col)] = if k >= 2 {
                -c1 * (k as f64 - 1.0) * s.powi(k as i32 - 2)
            } else {
                0.0
            };
        }
        let jt = jac.transpose();
        let mut h = &jt * &jac;
        let g = &jt * &r;
        for d in 0..n_params {
            h[(d, d)] += lambda * (h[(d, d)].abs() + 1e-12);
        }
        let step = match h.clone().lu().solve(&(-&g)) {
            Some(x) => x,
            None => break,
        };
        let (nc0, nc1, ns) = if with_offset {
            (c0 + step[0], c1 + step[1], (s + step[2]).clamp(0.0, S_MAX))
        } else {
            (0.0, c1 + step[0], (s + step[1]).clamp(0.0, S_MAX))
        };
        let new_sse = residual_sq(xs, ys, nc0, nc1, ns);
        if new_sse <= sse {
            let moved = (nc0 - c0).abs() + (nc1 - c1).abs() + (ns - s).abs();
            c0 = nc0;
            c1 = nc1;
            s = ns;
            let improved = sse - new_sse;
            sse = new_sse;
            lambda = (lambda * 0.3).max(1e-12);
            if moved < 1e-14 || improved < 1e-18 {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }

    if !(c0.is_finite() && c1.is_finite() && s.is_finite()) {
        return Err(Error::Fit {
            reason: "optimizer diverged".into(),
            xs: xs.to_vec(),
            ys: ys.to_vec(),
        });
    }

    if with_offset {
        // With a free offset, flat data fits equally well for any s. Accept
        // the decaying model only when it beats the constant model by an
        // F-test margin; otherwise report "no decay" (s = 1) with an
        // unidentifiable rate.
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let sse_flat: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
        let dof = (xs.len() as f64 - 3.0).max(1.0);
        let f_stat = if sse > 0.0 {
            ((sse_flat - sse) / 2.0) / (sse / dof)
        } else if sse_flat > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if f_stat < 5.0 {
            return Ok(DecayFit {
                c0: 0.0,
                c1: mean,
                s: 1.0,
                residual: sse_flat,
                s_stderr: f64::INFINITY,
            });
        }
    }

    // Standard error of s from the Jacobian at the optimum.
    let m = xs.len();
    let dof = (m as f64 - n_params as f64).max(1.0);
    let sigma_sq = sse / dof;
    let mut jac = DMatrix::zeros(m, n_params);
    for (i, &k) in xs.iter().enumerate() {
        let mut col = 0;
        if with_offset {
            jac[(i, col)] = 1.0;
            col += 1;
        }
        jac[(i, col)] = s.powi(k as i32 - 1);
        col += 1;
        jac[(i, col)] = if k >= 2 {
            c1 * (k as f64 - 1.0) * s.powi(k as i32 - 2)
        } else {
            0.0
        };
    }
    let h = jac.transpose() * &jac;
    let s_stderr = match h.try_inverse() {
        Some(inv) => {
            let var = inv[(n_params - 1, n_params - 1)] * sigma_sq;
            if var.is_finite() && var >= 0.0 && inv[(n_params - 1, n_params - 1)] < 1e12 {
                var.sqrt()
            } else {
                f64::INFINITY
            }
        }
        None => f64::INFINITY,
    };

    Ok(DecayFit {
        c0,
        c1,
        s,
        residual: sse,
        s_stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn exact_recovery_without_offset() {
        let xs: Vec<usize> = (1..=10).collect();
        let (c1, s): (f64, f64) = (0.9, 0.5);
        let ys: Vec<f64> = xs.iter().map(|&k| c1 * s.powi(k as i32 - 1)).collect();
        let fit = fit_decay(&xs, &ys, false).unwrap();
        assert!((fit.s - s).abs() <= 1e-9, "s = {}", fit.s);
        assert!((fit.c1 - c1).abs() <= 1e-9);
        assert!(fit.residual <= 1e-18);
    }

    #[test]
    fn exact_recovery_with_offset() {
        let xs: Vec<usize> = (1..=10).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&k| 0.1 + 0.8 * 0.33f64.powi(k as i32 - 1))
            .collect();
        let fit = fit_decay(&xs, &ys, true).unwrap();
        assert!((fit.s - 0.33).abs() <= 1e-6, "s = {}", fit.s);
        assert!((fit.c0 - 0.1).abs() <= 1e-6);
        assert!((fit.c1 - 0.8).abs() <= 1e-6);
    }

    #[test]
    fn flat_data_reports_unit_decay_with_infinite_stderr() {
        let xs: Vec<usize> = (1..=8).collect();
        let ys = vec![1.0 / 3.0; 8];
        let fit = fit_decay(&xs, &ys, true).unwrap();
        assert!((fit.s - 1.0).abs() <= 0.02, "s = {}", fit.s);
        assert!(fit.s_stderr.is_infinite());
        // Forcing the offset to zero pins both c1 and s.
        let fit = fit_decay(&xs, &ys, false).unwrap();
        assert!((fit.s - 1.0).abs() <= 1e-9);
        assert!((fit.c1 - 1.0 / 3.0).abs() <= 1e-9);
    }

    #[test]
    fn noisy_recovery_calibration() {
        // With sigma = 0.005 jitter over lengths 1..10, the fitted s lands
        // within 3 stderr of the truth in at least 95% of trials.
        let xs: Vec<usize> = (1..=10).collect();
        let (c0, c1, s_true): (f64, f64, f64) = (0.05, 0.7, 0.6);
        let normal = Normal::new(0.0, 0.005).unwrap();
        let mut hits = 0;
        let trials = 500;
        let mut rng = crate::operator::SeededRng::new(60);
        for _ in 0..trials {
            let ys: Vec<f64> = xs
                .iter()
                .map(|&k| c0 + c1 * s_true.powi(k as i32 - 1) + normal.sample(&mut rng))
                .collect();
            let fit = fit_decay(&xs, &ys, true).unwrap();
            if (fit.s - s_true).abs() <= 3.0 * fit.s_stderr {
                hits += 1;
            }
        }
        assert!(
            hits as f64 >= 0.95 * trials as f64,
            "only {hits}/{trials} within 3 stderr"
        );
    }

    #[test]
    fn input_validation() {
        assert!(fit_decay(&[1, 2], &[1.0, 0.5], false).is_err());
        assert!(fit_decay(&[0, 1, 2], &[1.0, 0.5, 0.2], false).is_err());
        assert!(matches!(
            fit_decay(&[1, 2, 3], &[1.0, f64::NAN, 0.2], false),
            Err(Error::Fit { .. })
        ));
    }
}
