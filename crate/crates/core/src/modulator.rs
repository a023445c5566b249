//! Michelson intensity modulator: transfer function, temperature dependent
//! half-wave voltage, and the fibre-to-fibre optical budget.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Half-wave voltage is pinned to the cold anchor at or below this temperature.
pub const COLD_ANCHOR_K: f64 = 4.0;
/// Half-wave voltage is pinned to the warm anchor at or above this temperature.
pub const WARM_ANCHOR_K: f64 = 290.0;
pub const MAX_TEMPERATURE_K: f64 = 350.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ModulatorParams {
    /// V, half-wave voltage at 1 K.
    pub vpi_cold: f64,
    /// V, half-wave voltage at room temperature.
    pub vpi_warm: f64,
    /// rad, interferometer phase at zero applied voltage.
    pub bias_phase: f64,
    pub fiber_to_fiber_efficiency: f64,
    /// Residual transmission floor from an imperfect 50:50 split, in `[0, 1)`.
    pub extinction_imbalance: f64,
    /// F, lumped modulator plus wiring capacitance.
    pub capacitance: f64,
    /// m
    pub electrode_length: f64,
    /// K, operating temperature.
    pub temperature: f64,
}

impl ModulatorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.vpi_cold > 0.0 && self.vpi_warm > 0.0) {
            return Err(SimError::domain("half-wave voltages must be > 0"));
        }
        if !(self.fiber_to_fiber_efficiency > 0.0 && self.fiber_to_fiber_efficiency <= 1.0) {
            return Err(SimError::domain(
                "fiber_to_fiber_efficiency must lie in (0, 1]",
            ));
        }
        if !(0.0..1.0).contains(&self.extinction_imbalance) {
            return Err(SimError::domain("extinction_imbalance must lie in [0, 1)"));
        }
        if !(self.capacitance > 0.0) {
            return Err(SimError::domain("capacitance must be > 0"));
        }
        if !(self.electrode_length >= 0.0) {
            return Err(SimError::domain("electrode_length must be >= 0"));
        }
        if !self.bias_phase.is_finite() {
            return Err(SimError::domain("bias_phase must be finite"));
        }
        vpi_at_temperature(self.temperature, self).map(|_| ())
    }

    /// Fringe visibility `m = 1 - imbalance`.
    pub fn visibility(&self) -> f64 {
        1.0 - self.extinction_imbalance
    }
}

/// Half-wave voltage at temperature `t` (K), linear between the anchors.
pub fn vpi_at_temperature(t: f64, params: &ModulatorParams) -> Result<f64> {
    if !(t > 0.0 && t <= MAX_TEMPERATURE_K) {
        return Err(SimError::domain(format!(
            "temperature must lie in (0, {MAX_TEMPERATURE_K}] K, got {t}"
        )));
    }
    if t <= COLD_ANCHOR_K {
        return Ok(params.vpi_cold);
    }
    if t >= WARM_ANCHOR_K {
        return Ok(params.vpi_warm);
    }
    let s = (t - COLD_ANCHOR_K) / (WARM_ANCHOR_K - COLD_ANCHOR_K);
    Ok(params.vpi_cold + s * (params.vpi_warm - params.vpi_cold))
}

/// Power transmission `η (1 + m cos(π v / V_π + φ)) / 2` for a known `V_π`.
pub fn transmission_with_vpi(v: f64, vpi: f64, params: &ModulatorParams) -> f64 {
    let m = params.visibility();
    params.fiber_to_fiber_efficiency * 0.5 * (1.0 + m * (PI * v / vpi + params.bias_phase).cos())
}

/// `d transmission / dv` for a known `V_π`.
pub fn transmission_slope_with_vpi(v: f64, vpi: f64, params: &ModulatorParams) -> f64 {
    let m = params.visibility();
    -params.fiber_to_fiber_efficiency
        * 0.5
        * m
        * (PI / vpi)
        * (PI * v / vpi + params.bias_phase).sin()
}

pub fn transmission(v: f64, t: f64, params: &ModulatorParams) -> Result<f64> {
    if !v.is_finite() {
        return Err(SimError::domain("applied voltage must be finite"));
    }
    Ok(transmission_with_vpi(
        v,
        vpi_at_temperature(t, params)?,
        params,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallSignalResponse {
    /// W, quadrature slope times the voltage step.
    pub linearized: f64,
    /// W, `P_in (T(ΔV) - T(0))`.
    pub exact: f64,
}

/// Output power change for a voltage step `delta_v` on top of zero bias.
///
/// The linearised value uses the transfer slope at the bias point; at
/// quadrature this is `P_in η m (π/2) ΔV / V_π` in magnitude.
pub fn small_signal_response(
    p_in: f64,
    delta_v: f64,
    t: f64,
    params: &ModulatorParams,
) -> Result<SmallSignalResponse> {
    let vpi = vpi_at_temperature(t, params)?;
    let linearized = p_in * transmission_slope_with_vpi(0.0, vpi, params) * delta_v;
    let exact = p_in
        * (transmission_with_vpi(delta_v, vpi, params) - transmission_with_vpi(0.0, vpi, params));
    Ok(SmallSignalResponse { linearized, exact })
}

/// Modulation strength in V·cm.
pub fn modulation_strength(vpi: f64, electrode_length: f64, passes: u32) -> Result<f64> {
    if !(vpi > 0.0) {
        return Err(SimError::domain("vpi must be > 0"));
    }
    if !(electrode_length >= 0.0) {
        return Err(SimError::domain("electrode length must be >= 0"));
    }
    if !(1..=2).contains(&passes) {
        return Err(SimError::domain("passes must be 1 or 2"));
    }
    Ok(vpi * (electrode_length * 100.0) * passes as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct OpticalBudget {
    pub mode_overlap_in: f64,
    pub mode_overlap_out: f64,
    /// Per-facet fibre/waveguide transmission, applied on entry and exit.
    pub interface_transmission: f64,
    /// dB/cm
    pub propagation_loss: f64,
    /// cm
    pub path_length_one_way: f64,
    pub mirror_reflectivity: f64,
}

impl OpticalBudget {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mode_overlap_in", self.mode_overlap_in),
            ("mode_overlap_out", self.mode_overlap_out),
            ("interface_transmission", self.interface_transmission),
            ("mirror_reflectivity", self.mirror_reflectivity),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(SimError::domain(format!(
                    "{name} must lie in (0, 1], got {v}"
                )));
            }
        }
        if !(self.propagation_loss >= 0.0) {
            return Err(SimError::domain("propagation_loss must be >= 0"));
        }
        if !(self.path_length_one_way >= 0.0) {
            return Err(SimError::domain("path_length_one_way must be >= 0"));
        }
        Ok(())
    }
}

/// Round-trip fibre-to-fibre efficiency of the reflective chip.
pub fn coupling_budget(budget: &OpticalBudget) -> Result<f64> {
    budget.validate()?;
    let propagation =
        10f64.powf(-budget.propagation_loss * 2.0 * budget.path_length_one_way / 10.0);
    Ok(budget.mode_overlap_in
        * budget.mode_overlap_out
        * budget.interface_transmission
        * budget.interface_transmission
        * propagation
        * budget.mirror_reflectivity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::calibrated_1k;

    fn ideal() -> ModulatorParams {
        ModulatorParams {
            bias_phase: 0.0,
            fiber_to_fiber_efficiency: 1.0,
            extinction_imbalance: 0.0,
            ..calibrated_1k().modulator
        }
    }

    #[test]
    fn vpi_anchors() {
        let p = calibrated_1k().modulator;
        assert_eq!(vpi_at_temperature(1.0, &p).unwrap(), 6.6);
        assert_eq!(vpi_at_temperature(300.0, &p).unwrap(), 5.9);
        let mid = vpi_at_temperature(147.0, &p).unwrap();
        assert!((mid - 6.25).abs() < 1e-12);
        assert!(vpi_at_temperature(0.0, &p).is_err());
        assert!(vpi_at_temperature(400.0, &p).is_err());
    }

    #[test]
    fn transfer_extremes() {
        let p = ideal();
        assert!((transmission(0.0, 1.0, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!(transmission(6.6, 1.0, &p).unwrap().abs() < 1e-15);
        let a = transmission(1.234, 1.0, &p).unwrap();
        let b = transmission(1.234 + 13.2, 1.0, &p).unwrap();
        assert!((a - b).abs() < 1e-14);
        assert!(transmission(f64::NAN, 1.0, &p).is_err());
    }

    #[test]
    fn imbalance_limits_swing() {
        let p = ModulatorParams {
            extinction_imbalance: 0.1,
            fiber_to_fiber_efficiency: 0.5,
            ..ideal()
        };
        assert!((transmission(0.0, 1.0, &p).unwrap() - 0.5 * 1.9 / 2.0).abs() < 1e-15);
        assert!((transmission(6.6, 1.0, &p).unwrap() - 0.5 * 0.1 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn small_signal_zero_step() {
        let r = small_signal_response(3.5e-3, 0.0, 1.0, &calibrated_1k().modulator).unwrap();
        assert_eq!(r.linearized, 0.0);
        assert_eq!(r.exact, 0.0);
    }

    #[test]
    fn strength_examples() {
        assert!((modulation_strength(5.9, 0.02, 2).unwrap() - 23.6).abs() < 1e-12);
        assert_eq!(modulation_strength(5.9, 0.0, 2).unwrap(), 0.0);
        assert!((modulation_strength(6.6, 0.02, 2).unwrap() - 26.4).abs() < 1e-12);
        assert!(modulation_strength(6.6, 0.02, 3).is_err());
    }

    #[test]
    fn budget_examples() {
        let ideal = OpticalBudget {
            mode_overlap_in: 1.0,
            mode_overlap_out: 1.0,
            interface_transmission: 1.0,
            propagation_loss: 0.0,
            path_length_one_way: 5.6,
            mirror_reflectivity: 1.0,
        };
        assert_eq!(coupling_budget(&ideal).unwrap(), 1.0);
        let mirror = OpticalBudget {
            mirror_reflectivity: 0.96,
            ..ideal
        };
        assert!((coupling_budget(&mirror).unwrap() - 0.96).abs() < 1e-15);
        let bad = OpticalBudget {
            mode_overlap_in: 0.0,
            ..ideal
        };
        assert!(coupling_budget(&bad).is_err());
    }
}
