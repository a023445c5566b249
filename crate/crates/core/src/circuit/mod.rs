//! Time-domain co-simulation of the photodiode node, the nanowire hotspot and
//! the modulator capacitance, plus the room-temperature readout chain.
//!
//! Node equation, with `C` the modulator capacitance:
//!
//! ```text
//! C dV/dt = I_src(V) - V (1/R_hotspot + G_leak)
//! ```
//!
//! Each step solves the node equation with backward Euler (scalar monotone
//! root), then advances the hotspot with an exponential Euler step using the
//! updated wire current. While the wire is superconducting the node is
//! shorted and `V = 0`.

mod readout;
mod trace;

pub use readout::{readout_chain, Click, Discriminator, LowPass, ReadoutParams, ReadoutResult};
pub use trace::{edge_metrics, EdgeMetrics, EdgeOutcome, TimeTrace};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::modulator::{transmission_with_vpi, vpi_at_temperature, ModulatorParams};
use crate::photodiode::{photocurrent, source_current_and_slope, PhotodiodeParams};
use crate::roots::{solve_decreasing, RootTolerance};
use crate::snspd::{absorb_photon, hotspot_growth_rate, reset, HotspotState, NanowireParams};

/// Device parameters needed by the integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub photodiode: PhotodiodeParams,
    pub nanowire: NanowireParams,
    pub modulator: ModulatorParams,
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        self.photodiode.validate()?;
        self.nanowire.validate()?;
        self.modulator.validate()
    }
}

/// Periodic on/off optical bias plus the modulator probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalDrive {
    /// W, bias power while on.
    pub bias_power: f64,
    /// s
    pub period: f64,
    /// s, bias is on in `[0, on_time)` of each period.
    pub on_time: f64,
    /// s, candidate photon arrival times within each period.
    pub signal_photon_times: Vec<f64>,
    /// W, optical power launched into the modulator.
    pub probe_power: f64,
}

impl OpticalDrive {
    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0) {
            return Err(SimError::domain("drive period must be > 0"));
        }
        if !(self.on_time >= 0.0 && self.on_time <= self.period) {
            return Err(SimError::domain("bias on-time must lie in [0, period]"));
        }
        if !(self.bias_power >= 0.0 && self.probe_power >= 0.0) {
            return Err(SimError::domain("drive powers must be >= 0"));
        }
        if self
            .signal_photon_times
            .iter()
            .any(|&t| !(t >= 0.0 && t < self.period))
        {
            return Err(SimError::domain("photon times must lie in [0, period)"));
        }
        Ok(())
    }

    pub fn on_fraction(&self) -> f64 {
        self.on_time / self.period
    }

    /// Bias power at absolute time `t`.
    pub fn bias_at(&self, t: f64) -> f64 {
        let phase = t.rem_euclid(self.period);
        if phase < self.on_time {
            self.bias_power
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitState {
    pub node_voltage: f64,
    pub hotspot: HotspotState,
    pub time: f64,
}

impl CircuitState {
    pub fn initial() -> Self {
        CircuitState {
            node_voltage: 0.0,
            hotspot: HotspotState::superconducting(),
            time: 0.0,
        }
    }

    /// Current through the nanowire for a given drive.
    ///
    /// A superconducting wire shorts the node and carries the whole source
    /// current.
    pub fn wire_current(&self, drive_power: f64, params: &DeviceParams) -> f64 {
        if self.hotspot.latched {
            self.node_voltage / self.hotspot.resistance
        } else {
            let iph = params.photodiode.responsivity * drive_power.max(0.0)
                + params.photodiode.dark_current;
            source_current_and_slope(0.0, iph, &params.photodiode).0
        }
    }
}

/// Advances the coupled node/hotspot system by `dt` under a constant bias
/// power `drive_power`.
pub fn step(
    state: &CircuitState,
    dt: f64,
    drive_power: f64,
    params: &DeviceParams,
) -> Result<CircuitState> {
    if !(dt > 0.0) {
        return Err(SimError::domain("time step must be > 0"));
    }
    let time = state.time + dt;
    let iph = photocurrent(drive_power, &params.photodiode)?;
    if !state.hotspot.latched {
        return Ok(CircuitState {
            node_voltage: 0.0,
            hotspot: state.hotspot,
            time,
        });
    }

    let pd = &params.photodiode;
    let nw = &params.nanowire;
    let c_dt = params.modulator.capacitance / dt;
    let g_total = 1.0 / state.hotspot.resistance + nw.leak_conductance;
    let v0 = state.node_voltage;
    let hi = v0.max(pd.open_circuit_voltage_for(iph));
    let tol = RootTolerance {
        abs_residual: 1e-20,
        rel_residual: 1e-13,
        ..RootTolerance::default()
    };
    let v = solve_decreasing(
        |v| {
            let (i, di) = source_current_and_slope(v, iph, pd);
            (i - g_total * v - c_dt * (v - v0), di - g_total - c_dt)
        },
        0.0,
        hi,
        iph + c_dt * v0,
        tol,
    )
    .map_err(|e| {
        SimError::numerical(format!(
            "node solve failed at t = {time:e} s ({state:?}): {e}"
        ))
    })?;

    let wire_current = v / state.hotspot.resistance;
    let rate = hotspot_growth_rate(&state.hotspot, wire_current, nw)?;
    let f = state.hotspot.normal_fraction;
    let f_new = (f * (rate / f * dt).exp()).min(1.0);
    if !f_new.is_finite() || !v.is_finite() {
        return Err(SimError::numerical(format!(
            "integrator diverged at t = {time:e} s, state {state:?}"
        )));
    }
    if f_new < nw.collapse_fraction() {
        // the node discharges through the healed wire
        return Ok(CircuitState {
            node_voltage: 0.0,
            hotspot: reset(state.hotspot),
            time,
        });
    }
    Ok(CircuitState {
        node_voltage: v,
        hotspot: HotspotState::with_fraction(f_new, nw, state.hotspot.last_trigger_time),
        time,
    })
}

/// Integration settings for [`run_trace`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationSettings {
    /// s, integrator step.
    pub step: f64,
    /// s, output sample spacing; rounded to a whole number of steps.
    pub sample_period: f64,
}

impl IntegrationSettings {
    pub fn steps_per_sample(&self) -> Result<usize> {
        if !(self.step > 0.0 && self.sample_period > 0.0) {
            return Err(SimError::domain("step and sample period must be > 0"));
        }
        Ok(((self.sample_period / self.step).round() as usize).max(1))
    }
}

/// Index of the step `[k dt, (k+1) dt)` containing time `t`.
fn step_index(t: f64, dt: f64) -> u64 {
    // tolerate representation error for times that sit on the grid
    ((t / dt) + 1e-9).floor() as u64
}

/// Simulates `duration` seconds of the periodic drive.
///
/// At every signal photon time an absorption is attempted with the
/// instantaneous wire current; one uniform draw is consumed per attempt.
pub fn run_trace(
    drive: &OpticalDrive,
    params: &DeviceParams,
    duration: f64,
    settings: IntegrationSettings,
    rng_seed: u64,
) -> Result<TimeTrace> {
    drive.validate()?;
    params.validate()?;
    if !(duration >= drive.period) {
        return Err(SimError::domain(
            "trace duration must cover at least one period",
        ));
    }
    let per_sample = settings.steps_per_sample()?;
    let dt = settings.step;
    let vpi = vpi_at_temperature(params.modulator.temperature, &params.modulator)?;
    let steps_per_period = (drive.period / dt).round() as u64;
    let total_steps = (duration / dt).round() as u64;
    let mut photon_steps: Vec<u64> = drive
        .signal_photon_times
        .iter()
        .map(|&t| step_index(t, dt))
        .collect();
    photon_steps.sort_unstable();

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n_samples = (total_steps as usize) / per_sample + 1;
    let mut time = Vec::with_capacity(n_samples);
    let mut v_node = Vec::with_capacity(n_samples);
    let mut r_wire = Vec::with_capacity(n_samples);
    let mut p_out = Vec::with_capacity(n_samples);

    let mut state = CircuitState::initial();
    for k in 0..=total_steps {
        if (k as usize).is_multiple_of(per_sample) {
            time.push(k as f64 * dt);
            v_node.push(state.node_voltage);
            r_wire.push(state.hotspot.resistance);
            p_out.push(
                drive.probe_power
                    * transmission_with_vpi(state.node_voltage, vpi, &params.modulator),
            );
        }
        if k == total_steps {
            break;
        }
        let t = k as f64 * dt;
        let bias = drive.bias_at(t);
        let in_period = k % steps_per_period;
        for _ in photon_steps.iter().filter(|&&s| s == in_period) {
            let draw: f64 = rng.random();
            let current = state.wire_current(bias, params);
            state.hotspot =
                absorb_photon(state.hotspot, t, current.max(0.0), draw, &params.nanowire);
        }
        state = step(&state, dt, bias, params)?;
        state.time = (k + 1) as f64 * dt;
    }

    let mut trace = TimeTrace::new(dt * per_sample as f64, Some(drive.period));
    trace.push_channel("time_s", time);
    trace.push_channel("v_node_V", v_node);
    trace.push_channel("r_wire_ohm", r_wire);
    trace.push_channel("p_out_W", p_out);
    Ok(trace)
}

/// Integrates a constant drive from a freshly seeded hotspot for `duration`
/// seconds and returns the final state.
pub fn settle_latched(
    drive_power: f64,
    params: &DeviceParams,
    duration: f64,
    dt: f64,
) -> Result<CircuitState> {
    let mut state = CircuitState {
        node_voltage: 0.0,
        hotspot: HotspotState::with_fraction(
            params.nanowire.seed_fraction(),
            &params.nanowire,
            Some(0.0),
        ),
        time: 0.0,
    };
    let n = (duration / dt).round() as u64;
    for _ in 0..n {
        state = step(&state, dt, drive_power, params)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::calibrated_1k;
    use crate::snspd::equilibrium_point;

    fn dev() -> DeviceParams {
        calibrated_1k().device()
    }

    #[test]
    fn superconducting_node_stays_at_zero() {
        let p = dev();
        let mut s = CircuitState::initial();
        for _ in 0..1000 {
            s = step(&s, 10e-9, 6e-6, &p).unwrap();
            assert!(s.node_voltage.abs() < 1e-6);
        }
        // capacitor carries no charge: all source current flows in the wire
        let i_wire = s.wire_current(6e-6, &p);
        assert!((i_wire - 3.9e-6).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let p = dev();
        let eq = equilibrium_point(6e-6, &p.photodiode, &p.nanowire)
            .unwrap()
            .latched()
            .unwrap();
        let mut s = CircuitState {
            node_voltage: eq.voltage,
            hotspot: eq.hotspot,
            time: 0.0,
        };
        for _ in 0..1000 {
            s = step(&s, 10e-9, 6e-6, &p).unwrap();
        }
        assert!((s.node_voltage - eq.voltage).abs() / eq.voltage < 1e-6);
        assert!(
            (s.hotspot.resistance - eq.hotspot.resistance).abs() / eq.hotspot.resistance < 1e-6
        );
    }

    #[test]
    fn bias_off_collapses_hotspot() {
        let p = dev();
        let eq = equilibrium_point(6e-6, &p.photodiode, &p.nanowire)
            .unwrap()
            .latched()
            .unwrap();
        let mut s = CircuitState {
            node_voltage: eq.voltage,
            hotspot: eq.hotspot,
            time: 0.0,
        };
        let mut prev = s.node_voltage;
        for _ in 0..1600 {
            s = step(&s, 10e-9, 0.0, &p).unwrap();
            assert!(s.node_voltage <= prev + 1e-15);
            prev = s.node_voltage;
        }
        assert!(!s.hotspot.latched);
        assert_eq!(s.node_voltage, 0.0);
    }

    #[test]
    fn step_rejects_bad_dt() {
        assert!(step(&CircuitState::initial(), 0.0, 6e-6, &dev()).is_err());
    }

    #[test]
    fn drive_bias_windows() {
        let d = OpticalDrive {
            bias_power: 6e-6,
            period: 35e-6,
            on_time: 18.9e-6,
            signal_photon_times: vec![2.9e-6],
            probe_power: 3.5e-3,
        };
        assert_eq!(d.bias_at(1e-6), 6e-6);
        assert_eq!(d.bias_at(20e-6), 0.0);
        assert_eq!(d.bias_at(36e-6), 6e-6);
        assert!((d.on_fraction() - 0.54).abs() < 1e-12);
        let bad = OpticalDrive {
            signal_photon_times: vec![40e-6],
            ..d
        };
        assert!(bad.validate().is_err());
    }
}
