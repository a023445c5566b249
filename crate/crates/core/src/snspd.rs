//! Shunt-free nanowire: photon triggering, latched hotspot growth, thermal
//! balance and reset.
//!
//! The hotspot is a single normal domain of length `ℓ = f · L`, where `f` is
//! the normal fraction and `L = R_n / ρ` the wire length. Joule heating
//! `I² f R_n` competes with substrate cooling `g ℓ ΔT`; the excess energy
//! drives the domain walls at the cost `c ΔT` per unit length:
//!
//! ```text
//! df/dt = (I² f R_n - g f L ΔT) / (c ΔT L) = f (I² ρ - g ΔT) / (c ΔT)
//! ```
//!
//! Both terms scale with the domain length, so the balance fixes the wire
//! current at the sustaining value `I_hs = sqrt(g ΔT / ρ)` independent of the
//! domain size.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::photodiode::{photocurrent, source_current_and_slope, OperatingPoint, PhotodiodeParams};
use crate::roots::{solve_decreasing, RootTolerance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct NanowireParams {
    /// Ω, full-wire normal-state resistance.
    pub normal_resistance: f64,
    /// Ω/m
    pub resistance_per_length: f64,
    /// J/(K·m)
    pub heat_capacity_per_length: f64,
    /// W/(K·m), coupling to the substrate.
    pub thermal_conductance_per_length: f64,
    /// K, T_c - T_bath.
    pub critical_temperature_offset: f64,
    /// A
    pub nominal_bias_current: f64,
    /// Detection efficiency reached at and above the nominal bias current.
    pub detection_plateau: f64,
    /// A, width of the saturating-exponential efficiency curve.
    pub efficiency_current_scale: f64,
    /// S, effective conductance in parallel with the wire.
    pub leak_conductance: f64,
    /// Ω, hotspot resistance right after an absorbed photon.
    pub seed_resistance: f64,
    /// A hotspot shrinking below this fraction of the seed heals back to the
    /// superconducting state.
    pub collapse_ratio: f64,
}

impl NanowireParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("normal_resistance", self.normal_resistance),
            ("resistance_per_length", self.resistance_per_length),
            ("heat_capacity_per_length", self.heat_capacity_per_length),
            (
                "thermal_conductance_per_length",
                self.thermal_conductance_per_length,
            ),
            (
                "critical_temperature_offset",
                self.critical_temperature_offset,
            ),
            ("nominal_bias_current", self.nominal_bias_current),
            ("efficiency_current_scale", self.efficiency_current_scale),
            ("seed_resistance", self.seed_resistance),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(SimError::domain(format!("{name} must be > 0, got {v:e}")));
            }
        }
        if !(0.0..=1.0).contains(&self.detection_plateau) {
            return Err(SimError::domain("detection_plateau must lie in [0, 1]"));
        }
        if !(self.leak_conductance >= 0.0) {
            return Err(SimError::domain("leak_conductance must be >= 0"));
        }
        if !(self.seed_resistance <= self.normal_resistance) {
            return Err(SimError::domain(
                "seed_resistance exceeds normal_resistance",
            ));
        }
        if !(self.collapse_ratio > 0.0 && self.collapse_ratio < 1.0) {
            return Err(SimError::domain("collapse_ratio must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Wire length in metres.
    pub fn wire_length(&self) -> f64 {
        self.normal_resistance / self.resistance_per_length
    }

    /// Wire current at which Joule heating balances substrate cooling.
    pub fn sustaining_current(&self) -> f64 {
        (self.thermal_conductance_per_length * self.critical_temperature_offset
            / self.resistance_per_length)
            .sqrt()
    }

    /// Thermal time constant `c / g`.
    pub fn thermal_time_constant(&self) -> f64 {
        self.heat_capacity_per_length / self.thermal_conductance_per_length
    }

    pub fn seed_fraction(&self) -> f64 {
        self.seed_resistance / self.normal_resistance
    }

    pub fn collapse_fraction(&self) -> f64 {
        self.collapse_ratio * self.seed_fraction()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HotspotState {
    pub resistance: f64,
    pub normal_fraction: f64,
    pub latched: bool,
    pub last_trigger_time: Option<f64>,
}

impl Default for HotspotState {
    fn default() -> Self {
        Self::superconducting()
    }
}

impl HotspotState {
    pub fn superconducting() -> Self {
        HotspotState {
            resistance: 0.0,
            normal_fraction: 0.0,
            latched: false,
            last_trigger_time: None,
        }
    }

    /// State with the given normal fraction, clamped to `[0, 1]`.
    pub fn with_fraction(
        fraction: f64,
        params: &NanowireParams,
        last_trigger_time: Option<f64>,
    ) -> Self {
        let f = fraction.clamp(0.0, 1.0);
        if f == 0.0 {
            return HotspotState {
                last_trigger_time,
                ..Self::superconducting()
            };
        }
        HotspotState {
            resistance: f * params.normal_resistance,
            normal_fraction: f,
            latched: true,
            last_trigger_time,
        }
    }

    /// Checks the fraction/resistance/latch coupling.
    pub fn is_consistent(&self, params: &NanowireParams) -> bool {
        let r_ok = (self.resistance - self.normal_fraction * params.normal_resistance).abs()
            <= 1e-12 * params.normal_resistance;
        (0.0..=1.0).contains(&self.normal_fraction)
            && r_ok
            && self.latched == (self.normal_fraction > 0.0)
    }
}

/// Probability that an incident photon triggers the wire at `bias_current`.
///
/// Saturating exponential `1 - exp(-I / s)`, rescaled to reach the plateau at
/// the nominal bias and held flat above it.
pub fn detection_efficiency(bias_current: f64, params: &NanowireParams) -> Result<f64> {
    if !(bias_current >= 0.0) {
        return Err(SimError::domain(format!(
            "bias current must be >= 0, got {bias_current:e} A"
        )));
    }
    if bias_current >= params.nominal_bias_current {
        return Ok(params.detection_plateau);
    }
    let s = params.efficiency_current_scale;
    let shape = (-bias_current / s).exp_m1() / (-params.nominal_bias_current / s).exp_m1();
    Ok(params.detection_plateau * shape)
}

/// Attempts to trigger the wire with one photon. `rng_draw` is a uniform
/// sample in `[0, 1)`; the photon is accepted when it falls below the
/// detection efficiency. A latched wire ignores further photons.
pub fn absorb_photon(
    state: HotspotState,
    time: f64,
    bias_current: f64,
    rng_draw: f64,
    params: &NanowireParams,
) -> HotspotState {
    if state.latched {
        return state;
    }
    let eta = detection_efficiency(bias_current.max(0.0), params).unwrap_or(0.0);
    if rng_draw < eta {
        HotspotState::with_fraction(params.seed_fraction(), params, Some(time))
    } else {
        state
    }
}

/// Rate of change of the normal fraction, in 1/s.
pub fn hotspot_growth_rate(
    state: &HotspotState,
    current_through_wire: f64,
    params: &NanowireParams,
) -> Result<f64> {
    if !state.latched {
        return Err(SimError::domain(
            "no hotspot to evolve: wire is superconducting",
        ));
    }
    let f = state.normal_fraction;
    let wire_length = params.wire_length();
    let joule = current_through_wire * current_through_wire * state.resistance;
    let dissipation = params.thermal_conductance_per_length
        * f
        * wire_length
        * params.critical_temperature_offset;
    let rate = (joule - dissipation)
        / (params.heat_capacity_per_length * params.critical_temperature_offset * wire_length);
    if f >= 1.0 && rate > 0.0 {
        return Ok(0.0);
    }
    Ok(rate)
}

pub fn reset(state: HotspotState) -> HotspotState {
    HotspotState {
        last_trigger_time: state.last_trigger_time,
        ..HotspotState::superconducting()
    }
}

/// Steady state of the photodiode feeding a latched hotspot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub voltage: f64,
    pub source_current: f64,
    pub wire_current: f64,
    pub leak_current: f64,
    pub hotspot: HotspotState,
}

impl Equilibrium {
    /// The photodiode's operating point at equilibrium.
    pub fn operating_point(&self) -> OperatingPoint {
        OperatingPoint::new(self.voltage, self.source_current)
    }

    /// Source current minus the currents leaving the node.
    pub fn node_residual(&self) -> f64 {
        self.source_current - self.wire_current - self.leak_current
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EquilibriumOutcome {
    Latched(Equilibrium),
    /// The source cannot drive the sustaining current; the wire returns to the
    /// superconducting state.
    NoLatch,
}

impl EquilibriumOutcome {
    pub fn latched(self) -> Option<Equilibrium> {
        match self {
            EquilibriumOutcome::Latched(eq) => Some(eq),
            EquilibriumOutcome::NoLatch => None,
        }
    }
}

pub fn equilibrium_point(
    optical_power: f64,
    pd_params: &PhotodiodeParams,
    params: &NanowireParams,
) -> Result<EquilibriumOutcome> {
    let iph = photocurrent(optical_power, pd_params)?;
    let i_hs = params.sustaining_current();
    if iph <= i_hs {
        return Ok(EquilibriumOutcome::NoLatch);
    }
    let g = params.leak_conductance;
    let voc = pd_params.open_circuit_voltage_for(iph);
    let tol = RootTolerance {
        abs_residual: 1e-18,
        rel_residual: 1e-14,
        ..RootTolerance::default()
    };

    let v = solve_decreasing(
        |v| {
            let (i, di) = source_current_and_slope(v, iph, pd_params);
            (i - g * v - i_hs, di - g)
        },
        0.0,
        voc,
        iph,
        tol,
    )?;
    let r = v / i_hs;
    if r <= params.normal_resistance {
        let hotspot = HotspotState::with_fraction(r / params.normal_resistance, params, None);
        let source_current = source_current_and_slope(v, iph, pd_params).0;
        return Ok(EquilibriumOutcome::Latched(Equilibrium {
            voltage: v,
            source_current,
            wire_current: v / hotspot.resistance,
            leak_current: g * v,
            hotspot,
        }));
    }

    // whole wire normal: the source drives R_n in parallel with the leak
    let g_total = g + 1.0 / params.normal_resistance;
    let v = solve_decreasing(
        |v| {
            let (i, di) = source_current_and_slope(v, iph, pd_params);
            (i - g_total * v, di - g_total)
        },
        0.0,
        voc,
        iph,
        tol,
    )?;
    let hotspot = HotspotState::with_fraction(1.0, params, None);
    Ok(EquilibriumOutcome::Latched(Equilibrium {
        voltage: v,
        source_current: source_current_and_slope(v, iph, pd_params).0,
        wire_current: v / params.normal_resistance,
        leak_current: g * v,
        hotspot,
    }))
}
