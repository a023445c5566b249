use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{FitError, FitResult, SweepData};

/// A model `y = f(x; p)` with an analytic Jacobian.
pub trait FitModel {
    fn n_params(&self) -> usize;
    fn value(&self, x: f64, p: &[f64]) -> f64;
    /// Writes `df/dp` into `grad`.
    fn gradient(&self, x: f64, p: &[f64], grad: &mut [f64]);
}

impl<M: FitModel + ?Sized> FitModel for &M {
    fn n_params(&self) -> usize {
        (**self).n_params()
    }
    fn value(&self, x: f64, p: &[f64]) -> f64 {
        (**self).value(x, p)
    }
    fn gradient(&self, x: f64, p: &[f64], grad: &mut [f64]) {
        (**self).gradient(x, p, grad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsqOptions {
    pub max_iter: usize,
    /// Converged when every `|dp_i| <= step_tol * (|p_i| + step_tol)`.
    pub step_tol: f64,
    /// Smallest accepted ratio of singular values of the weighted Jacobian.
    pub rank_tol: f64,
}

impl Default for LsqOptions {
    fn default() -> Self {
        LsqOptions {
            max_iter: 200,
            step_tol: 1e-9,
            rank_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsqFit {
    pub params: Vec<f64>,
    /// Weighted residual RMS.
    pub residual_rms: f64,
    /// `s² (JᵀWJ)⁻¹` at the solution, row-major.
    pub covariance: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl LsqFit {
    pub fn std_error(&self, i: usize) -> f64 {
        let n = self.params.len();
        self.covariance[i * n + i].sqrt()
    }
}

fn residuals<M: FitModel>(model: &M, data: &SweepData, p: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        data.len(),
        (0..data.len()).map(|i| data.weight(i).sqrt() * (data.y[i] - model.value(data.x[i], p))),
    )
}

fn jacobian<M: FitModel>(model: &M, data: &SweepData, p: &[f64]) -> DMatrix<f64> {
    let n = model.n_params();
    let mut j = DMatrix::zeros(data.len(), n);
    let mut g = vec![0.0; n];
    for i in 0..data.len() {
        model.gradient(data.x[i], p, &mut g);
        let sw = data.weight(i).sqrt();
        for k in 0..n {
            j[(i, k)] = sw * g[k];
        }
    }
    j
}

/// Levenberg-Marquardt minimisation of weighted squared residuals.
///
/// Damping is scaled by the diagonal of the normal matrix, which makes the
/// iteration invariant under rescaling of individual parameters.
pub fn least_squares<M: FitModel>(
    model: &M,
    data: &SweepData,
    init: &[f64],
    opts: LsqOptions,
) -> FitResult<LsqFit> {
    let n = model.n_params();
    if init.len() != n {
        return Err(FitError::Domain(format!(
            "expected {n} initial parameters, got {}",
            init.len()
        )));
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(FitError::Domain("initial parameters must be finite".into()));
    }
    data.validate(n)?;

    let mut p = init.to_vec();
    let mut r = residuals(model, data, &p);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let j = jacobian(model, data, &p);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let diag: Vec<f64> = (0..n).map(|k| jtj[(k, k)]).collect();
        if diag.iter().any(|d| !(*d > 0.0)) {
            return Err(FitError::RankDeficient {
                condition: f64::INFINITY,
            });
        }
        let mut stepped = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * diag[k];
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let dp = chol.solve(&g);
            let trial: Vec<f64> = p.iter().zip(dp.iter()).map(|(a, b)| a + b).collect();
            let r_trial = residuals(model, data, &trial);
            let c_trial = r_trial.norm_squared();
            if c_trial.is_finite() && c_trial <= cost {
                let small = p
                    .iter()
                    .zip(dp.iter())
                    .all(|(pi, di)| di.abs() <= opts.step_tol * (pi.abs() + opts.step_tol));
                p = trial;
                r = r_trial;
                cost = c_trial;
                lambda = (lambda / 10.0).max(1e-12);
                stepped = true;
                converged = small || cost == 0.0;
                break;
            }
            lambda *= 10.0;
        }
        if !stepped {
            // no downhill step at any damping: stationary to working precision
            converged = true;
        }
        if converged {
            break;
        }
    }

    let j = jacobian(model, data, &p);
    let sv = j.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if !(smax > 0.0) || smin < opts.rank_tol * smax {
        return Err(FitError::RankDeficient {
            condition: if smin > 0.0 {
                smax / smin
            } else {
                f64::INFINITY
            },
        });
    }
    let dof = data.len().saturating_sub(n).max(1) as f64;
    let s2 = cost / dof;
    let cov = (j.transpose() * &j)
        .try_inverse()
        .ok_or(FitError::RankDeficient {
            condition: smax / smin,
        })?
        * s2;
    Ok(LsqFit {
        params: p,
        residual_rms: (cost / data.len() as f64).sqrt(),
        covariance: cov.transpose().as_slice().to_vec(),
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Poly(usize);

    impl FitModel for Poly {
        fn n_params(&self) -> usize {
            self.0
        }
        fn value(&self, x: f64, p: &[f64]) -> f64 {
            p.iter().rev().fold(0.0, |acc, c| acc * x + c)
        }
        fn gradient(&self, x: f64, _p: &[f64], g: &mut [f64]) {
            let mut xk = 1.0;
            for gk in g.iter_mut() {
                *gk = xk;
                xk *= x;
            }
        }
    }

    #[test]
    fn line_is_recovered_exactly() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y = x.iter().map(|v| 2.5 * v - 1.25).collect();
        let d = SweepData::new(x, y).unwrap();
        let fit = least_squares(&Poly(2), &d, &[0.0, 0.0], LsqOptions::default()).unwrap();
        assert!((fit.params[0] + 1.25).abs() < 1e-12);
        assert!((fit.params[1] - 2.5).abs() < 1e-12);
        assert!(fit.converged);
    }

    #[test]
    fn quadratic_residual_vanishes() {
        let x: Vec<f64> = (0..15).map(|i| i as f64 * 0.3 - 2.0).collect();
        let y = x.iter().map(|v| 0.5 * v * v - v + 3.0).collect();
        let d = SweepData::new(x, y).unwrap();
        let fit = least_squares(&Poly(3), &d, &[1.0, 1.0, 1.0], LsqOptions::default()).unwrap();
        assert!(fit.residual_rms < 1e-12);
    }

    #[test]
    fn degenerate_design_is_rank_deficient() {
        let d = SweepData::new(vec![1.0; 6], vec![2.0, 2.1, 1.9, 2.0, 2.05, 1.95]).unwrap();
        let err = least_squares(&Poly(2), &d, &[0.0, 0.0], LsqOptions::default()).unwrap_err();
        assert!(matches!(err, FitError::RankDeficient { .. }));
    }

    #[test]
    fn weights_select_the_trusted_points() {
        let x = vec![0.0, 1.0, 2.0, 3.0];
        let y = vec![0.0, 1.0, 2.0, 10.0];
        let d = SweepData::with_weights(x, y, vec![1.0, 1.0, 1.0, 0.0]).unwrap();
        let fit = least_squares(&Poly(2), &d, &[0.5, 0.5], LsqOptions::default()).unwrap();
        assert!((fit.params[1] - 1.0).abs() < 1e-10);
    }
}
