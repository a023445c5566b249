//! Cryogenic photodiode as a nonlinear photovoltaic current source.
//!
//! The source law is
//!
//! ```text
//! I(V) = I_ph - I_k * (exp(V / n) - 1),   I_ph = responsivity * P + dark_current
//! I_k  = 1 µA * exp(-knee_voltage / n)
//! ```
//!
//! `n` is the knee sharpness. `knee_voltage` is approximately the open-circuit
//! voltage reached at 1 µA of photocurrent, which makes the parameter readable
//! as a voltage clamp scale.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::roots::{golden_max, solve_decreasing, RootTolerance};

/// Reference current defining `knee_voltage`.
pub const KNEE_REFERENCE_CURRENT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PhotodiodeParams {
    /// A/W
    pub responsivity: f64,
    /// V
    pub knee_voltage: f64,
    /// V
    pub knee_sharpness: f64,
    /// A
    pub dark_current: f64,
}

impl PhotodiodeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.responsivity > 0.0) {
            return Err(SimError::domain("responsivity must be > 0"));
        }
        if !(self.knee_voltage > 0.0) {
            return Err(SimError::domain("knee_voltage must be > 0"));
        }
        if !(self.knee_sharpness > 0.0) {
            return Err(SimError::domain("knee_sharpness must be > 0"));
        }
        if !(self.dark_current >= 0.0) {
            return Err(SimError::domain("dark_current must be >= 0"));
        }
        Ok(())
    }

    /// Knee saturation current `I_k` in amperes.
    pub fn knee_current(&self) -> f64 {
        KNEE_REFERENCE_CURRENT * (-self.knee_voltage / self.knee_sharpness).exp()
    }

    /// Forward knee current drawn at voltage `v`, and its derivative.
    fn knee_term(&self, v: f64) -> (f64, f64) {
        let ik = self.knee_current();
        let e = (v / self.knee_sharpness).exp();
        (ik * (e - 1.0), ik * e / self.knee_sharpness)
    }

    /// Open-circuit voltage for a given photocurrent.
    pub fn open_circuit_voltage_for(&self, photocurrent: f64) -> f64 {
        if photocurrent <= 0.0 {
            return 0.0;
        }
        self.knee_sharpness * (photocurrent / self.knee_current()).ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub voltage: f64,
    pub current: f64,
    pub electrical_power: f64,
}

impl OperatingPoint {
    pub fn new(voltage: f64, current: f64) -> Self {
        OperatingPoint {
            voltage,
            current,
            electrical_power: voltage * current,
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0)
    }
}

pub fn photocurrent(optical_power: f64, params: &PhotodiodeParams) -> Result<f64> {
    if !(optical_power >= 0.0) {
        return Err(SimError::domain(format!(
            "optical power must be >= 0, got {optical_power:e} W"
        )));
    }
    Ok(params.responsivity * optical_power + params.dark_current)
}

/// Source current delivered into a node held at `v`.
pub fn source_current_at_voltage(
    v: f64,
    optical_power: f64,
    params: &PhotodiodeParams,
) -> Result<f64> {
    if !(v >= 0.0) {
        return Err(SimError::domain(format!(
            "voltage must be >= 0, got {v:e} V"
        )));
    }
    let iph = photocurrent(optical_power, params)?;
    Ok(iph - params.knee_term(v).0)
}

/// Source current and its derivative dI/dV. No domain checks; used inside
/// solvers and the time-domain integrator, where `v` may sit anywhere on
/// the real line during a Newton iteration.
pub(crate) fn source_current_and_slope(
    v: f64,
    photocurrent: f64,
    params: &PhotodiodeParams,
) -> (f64, f64) {
    let (k, dk) = params.knee_term(v);
    (photocurrent - k, -dk)
}

/// Open-circuit voltage at the given illumination.
pub fn open_circuit_voltage(optical_power: f64, params: &PhotodiodeParams) -> Result<f64> {
    Ok(params.open_circuit_voltage_for(photocurrent(optical_power, params)?))
}

pub fn solve_operating_point(
    optical_power: f64,
    load_resistance: f64,
    params: &PhotodiodeParams,
) -> Result<OperatingPoint> {
    if !(load_resistance > 0.0) {
        return Err(SimError::domain(format!(
            "load resistance must be > 0, got {load_resistance:e} Ω"
        )));
    }
    let iph = photocurrent(optical_power, params)?;
    if iph == 0.0 {
        return Ok(OperatingPoint::zero());
    }
    let g = 1.0 / load_resistance;
    let voc = params.open_circuit_voltage_for(iph);
    let tol = RootTolerance {
        abs_residual: 1e-16,
        rel_residual: 1e-12,
        ..RootTolerance::default()
    };
    let v = solve_decreasing(
        |v| {
            let (i, di) = source_current_and_slope(v, iph, params);
            (i - v * g, di - g)
        },
        0.0,
        voc,
        iph,
        tol,
    )?;
    let i = iph - params.knee_term(v).0;
    Ok(OperatingPoint::new(v, i.max(0.0)))
}

pub fn load_sweep(
    optical_power: f64,
    loads: &[f64],
    params: &PhotodiodeParams,
) -> Result<Vec<OperatingPoint>> {
    loads
        .iter()
        .enumerate()
        .map(|(index, &r)| {
            solve_operating_point(optical_power, r, params).map_err(|e| SimError::AtIndex {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Load resistance maximising delivered electrical power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxPowerPoint {
    pub resistance: f64,
    pub power: f64,
    pub point: OperatingPoint,
}

pub fn max_power_point(
    optical_power: f64,
    params: &PhotodiodeParams,
    search_range: (f64, f64),
) -> Result<MaxPowerPoint> {
    if !(optical_power > 0.0) {
        return Err(SimError::domain(
            "no power to convert: optical power must be > 0",
        ));
    }
    let (lo, hi) = search_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(SimError::domain(format!(
            "invalid search range [{lo:e}, {hi:e}] Ω"
        )));
    }
    // power along the load line is unimodal in log(R)
    let mut failure = None;
    let (log_r, _) = golden_max(
        |lr| match solve_operating_point(optical_power, lr.exp(), params) {
            Ok(op) => op.electrical_power,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        lo.ln(),
        hi.ln(),
        1e-6,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let resistance = log_r.exp();
    let point = solve_operating_point(optical_power, resistance, params)?;
    Ok(MaxPowerPoint {
        resistance,
        power: point.electrical_power,
        point,
    })
}

/// Logarithmically spaced grid of `n` points spanning `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}
