use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lsq::{least_squares, FitModel, LsqFit, LsqOptions};
use super::{FitError, FitResult, SweepData};

/// `y = offset + amplitude * cos(pi x / vpi + phase)`, parameters in that order:
/// `[offset, amplitude, phase, vpi]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SineModel;

impl FitModel for SineModel {
    fn n_params(&self) -> usize {
        4
    }

    fn value(&self, x: f64, p: &[f64]) -> f64 {
        p[0] + p[1] * (PI * x / p[3] + p[2]).cos()
    }

    fn gradient(&self, x: f64, p: &[f64], g: &mut [f64]) {
        let theta = PI * x / p[3] + p[2];
        let (s, c) = theta.sin_cos();
        g[0] = 1.0;
        g[1] = c;
        g[2] = -p[1] * s;
        g[3] = p[1] * s * PI * x / (p[3] * p[3]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineFitResult {
    /// V, > 0.
    pub vpi: f64,
    /// >= 0.
    pub amplitude: f64,
    pub offset: f64,
    /// rad, in `(-pi, pi]`.
    pub phase: f64,
    pub residual_rms: f64,
}

/// Start values of the half-wave voltage when no hint is given: 20 sine
/// periods `2 vpi` logarithmically spaced over `[span/10, 2 span]`, halved.
pub fn sine_start_grid(span: f64) -> Vec<f64> {
    const N: usize = 20;
    let (lo, hi) = ((span / 10.0).ln(), (2.0 * span).ln());
    (0..N)
        .map(|i| 0.5 * (lo + (hi - lo) * i as f64 / (N - 1) as f64).exp())
        .collect()
}

/// Linear least squares for offset and quadrature amplitudes at fixed `vpi`.
fn linear_start(data: &SweepData, vpi: f64) -> Option<[f64; 4]> {
    let n = data.len();
    let mut a = DMatrix::zeros(n, 3);
    let mut b = DVector::zeros(n);
    for i in 0..n {
        let sw = data.weight(i).sqrt();
        let (s, c) = (PI * data.x[i] / vpi).sin_cos();
        a[(i, 0)] = sw;
        a[(i, 1)] = sw * c;
        a[(i, 2)] = sw * s;
        b[i] = sw * data.y[i];
    }
    let sol = a.svd(true, true).solve(&b, 1e-12).ok()?;
    let (o, cc, ss) = (sol[0], sol[1], sol[2]);
    // A cos(t + phi) = A cos(phi) cos t - A sin(phi) sin t
    let amp = cc.hypot(ss);
    let phase = (-ss).atan2(cc);
    amp.is_finite().then_some([o, amp, phase, vpi])
}

fn wrap_phase(phi: f64) -> f64 {
    let w = (phi + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

fn canonical(p: &[f64], residual_rms: f64) -> SineFitResult {
    let (mut amp, mut phase) = (p[1], p[2]);
    let mut vpi = p[3];
    if vpi < 0.0 {
        // cos(-t + phi) = cos(t - phi)
        vpi = -vpi;
        phase = -phase;
    }
    if amp < 0.0 {
        amp = -amp;
        phase += PI;
    }
    SineFitResult {
        vpi,
        amplitude: amp,
        offset: p[0],
        phase: wrap_phase(phase),
        residual_rms,
    }
}

/// Fits `offset + amplitude cos(pi x / vpi + phase)` and reports `vpi`.
///
/// With a hint the fit starts there; otherwise every value of
/// [`sine_start_grid`] is tried and the lowest residual wins, ties going to the
/// earlier start.
pub fn fit_sine_vpi(data: &SweepData, initial_vpi_hint: Option<f64>) -> FitResult<SineFitResult> {
    data.validate(4)?;
    let xmin = data.x.iter().cloned().fold(f64::INFINITY, f64::min);
    let xmax = data.x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = xmax - xmin;
    if !(span > 0.0) {
        return Err(FitError::NonIdentifiable("x does not vary".into()));
    }
    let ymin = data.y.iter().cloned().fold(f64::INFINITY, f64::min);
    let ymax = data.y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let yscale = ymax.abs().max(ymin.abs());
    if !(ymax - ymin > 1e-12 * yscale) || yscale == 0.0 {
        return Err(FitError::NonIdentifiable(
            "y is constant: amplitude cannot be resolved".into(),
        ));
    }
    let starts = match initial_vpi_hint {
        Some(h) if h > 0.0 && h.is_finite() => vec![h],
        Some(h) => return Err(FitError::Domain(format!("vpi hint must be > 0, got {h}"))),
        None => sine_start_grid(span),
    };

    let fits: Vec<Option<LsqFit>> = starts
        .par_iter()
        .map(|&v| {
            let init = linear_start(data, v)?;
            least_squares(&SineModel, data, &init, LsqOptions::default()).ok()
        })
        .collect();
    let best = fits
        .into_iter()
        .flatten()
        .filter(|f| f.params.iter().all(|v| v.is_finite()) && f.params[3] != 0.0)
        .fold(None::<LsqFit>, |acc, f| match acc {
            Some(a) if a.residual_rms <= f.residual_rms => Some(a),
            _ => Some(f),
        })
        .ok_or_else(|| FitError::NonIdentifiable("no start converged".into()))?;
    let result = canonical(&best.params, best.residual_rms);
    if span < 1.5 * result.vpi {
        return Err(FitError::NonIdentifiable(format!(
            "sweep span {span:.4} is below 1.5 x the fitted vpi {:.4}",
            result.vpi
        )));
    }
    if !(result.amplitude > 1e-9 * yscale) {
        return Err(FitError::NonIdentifiable("fitted amplitude is zero".into()));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(vpi: f64, phase: f64, n: usize, span: f64) -> SweepData {
        let x: Vec<f64> = (0..n).map(|i| span * i as f64 / (n - 1) as f64).collect();
        let y = x
            .iter()
            .map(|v| 0.5 + 0.4 * (PI * v / vpi + phase).cos())
            .collect();
        SweepData::new(x, y).unwrap()
    }

    #[test]
    fn grid_has_twenty_log_spaced_starts() {
        let g = sine_start_grid(15.0);
        assert_eq!(g.len(), 20);
        assert!((g[0] - 0.75).abs() < 1e-12 && (g[19] - 15.0).abs() < 1e-9);
        let r0 = g[1] / g[0];
        assert!(g.windows(2).all(|w| (w[1] / w[0] - r0).abs() < 1e-12));
    }

    #[test]
    fn recovers_generating_parameters() {
        let d = synth(6.6, 0.7, 151, 15.0);
        let f = fit_sine_vpi(&d, None).unwrap();
        assert!((f.vpi / 6.6 - 1.0).abs() < 1e-6);
        assert!((f.phase - 0.7).abs() < 1e-6);
        assert!((f.amplitude - 0.4).abs() < 1e-6);
        assert!((f.offset - 0.5).abs() < 1e-6);
    }

    #[test]
    fn constant_data_fails() {
        let d = SweepData::new((0..20).map(f64::from).collect(), vec![0.3; 20]).unwrap();
        assert!(matches!(
            fit_sine_vpi(&d, None),
            Err(FitError::NonIdentifiable(_))
        ));
    }

    #[test]
    fn short_span_fails() {
        let d = synth(6.6, 0.3, 60, 6.0);
        assert!(fit_sine_vpi(&d, Some(6.6)).is_err());
    }

    #[test]
    fn phase_wrapping() {
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(0.5) - 0.5).abs() < 1e-15);
    }
}
