//! Monte Carlo photon counting over many bias periods.
//!
//! Each period draws its own random stream: a ChaCha8 generator seeded from
//! the master seed with the stream number set to the period index. Periods
//! are therefore independent of evaluation order and of the thread count.

mod histogram;

pub use histogram::{
    build_histogram, peak_stats, post_peak_counts, subtract_background, CountHistogram,
    PeakOutcome, PeakStats,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    step, CircuitState, DeviceParams, Discriminator, LowPass, OpticalDrive, ReadoutParams,
};
use crate::error::{Result, SimError};
use crate::modulator::{transmission_with_vpi, vpi_at_temperature};
use crate::snspd::{absorb_photon, detection_efficiency};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PhotonSource {
    pub mean_photons_per_pulse: f64,
    /// s, nominal signal arrival within the period.
    pub pulse_time_in_period: f64,
    /// s, rms spread of the signal arrival time.
    pub pulse_width: f64,
    /// 1/s, background (scatter and dark) events while the bias is on.
    pub background_rate: f64,
}

impl PhotonSource {
    pub fn validate(&self, period: f64) -> Result<()> {
        if !(self.mean_photons_per_pulse >= 0.0 && self.mean_photons_per_pulse.is_finite()) {
            return Err(SimError::domain("mean photon number must be >= 0"));
        }
        if !(self.background_rate >= 0.0 && self.background_rate.is_finite()) {
            return Err(SimError::domain("background rate must be >= 0"));
        }
        if !(self.pulse_width >= 0.0) {
            return Err(SimError::domain("pulse width must be >= 0"));
        }
        if !(self.pulse_time_in_period >= 0.0 && self.pulse_time_in_period < period) {
            return Err(SimError::domain("pulse time must lie within the period"));
        }
        Ok(())
    }
}

/// Random stream for one period of a run.
pub fn period_rng(master_seed: u64, period_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(period_index);
    rng
}

/// Number of signal photons in one pulse.
pub fn sample_pulse_photons<R: Rng + ?Sized>(source: &PhotonSource, rng: &mut R) -> u64 {
    let mean = source.mean_photons_per_pulse;
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng) as u64
}

/// Candidate photon events of one period, sorted by time.
pub fn period_events<R: Rng + ?Sized>(
    source: &PhotonSource,
    drive: &OpticalDrive,
    rng: &mut R,
) -> Vec<f64> {
    let n = sample_pulse_photons(source, rng);
    let mut events = Vec::with_capacity(n as usize + 4);
    if source.pulse_width > 0.0 {
        let jitter = Normal::new(0.0, source.pulse_width).expect("finite width");
        for _ in 0..n {
            events.push(source.pulse_time_in_period + jitter.sample(rng));
        }
    } else {
        events.extend((0..n).map(|_| source.pulse_time_in_period));
    }
    if source.background_rate > 0.0 && drive.on_time > 0.0 {
        let gap = Exp::new(source.background_rate).expect("positive rate");
        let mut t: f64 = gap.sample(rng);
        while t < drive.on_time {
            events.push(t);
            t += gap.sample(rng);
        }
    }
    events.retain(|&t| t >= 0.0 && t < drive.period);
    events.sort_by(f64::total_cmp);
    events
}

/// Readout and integration settings of a counting run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingSetup {
    pub readout: ReadoutParams,
    /// s, integrator step.
    pub step: f64,
}

/// Outcome of one simulated period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    /// s, click delay relative to the period start.
    pub click: Option<f64>,
    /// s, time the wire latched, if it did.
    pub latch_time: Option<f64>,
    pub candidate_events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingResult {
    /// Click delays in period order.
    pub delays: Vec<f64>,
    pub records: Vec<PeriodRecord>,
    pub n_periods: u64,
}

impl CountingResult {
    pub fn click_fraction(&self) -> f64 {
        self.delays.len() as f64 / self.n_periods as f64
    }
}

/// Simulates a single period from the reset state.
pub fn simulate_period(
    drive: &OpticalDrive,
    source: &PhotonSource,
    params: &DeviceParams,
    setup: &CountingSetup,
    rng: &mut ChaCha8Rng,
) -> Result<PeriodRecord> {
    let events = period_events(source, drive, rng);
    let draws: Vec<f64> = events.iter().map(|_| rng.random::<f64>()).collect();
    simulate_events(drive, &events, &draws, params, setup)
}

/// Integrates one period given sorted photon times and their acceptance draws.
pub fn simulate_events(
    drive: &OpticalDrive,
    events: &[f64],
    draws: &[f64],
    params: &DeviceParams,
    setup: &CountingSetup,
) -> Result<PeriodRecord> {
    let dt = setup.step;
    let vpi = vpi_at_temperature(params.modulator.temperature, &params.modulator)?;
    let total_steps = (drive.period / dt).round() as u64;
    let record = |click, latch_time| PeriodRecord {
        click,
        latch_time,
        candidate_events: events.len(),
    };

    // Until the first accepted photon the wire is superconducting and the node
    // sits at zero, so integration can start there.
    let idle = CircuitState::initial();
    let first = events.iter().zip(draws).position(|(&t, &u)| {
        let current = idle.wire_current(drive.bias_at(t), params).max(0.0);
        u < detection_efficiency(current, &params.nanowire).unwrap_or(0.0)
    });
    let Some(first) = first else {
        return Ok(record(None, None));
    };

    let readout = &setup.readout;
    let quiescent = drive.probe_power * transmission_with_vpi(0.0, vpi, &params.modulator);
    let baseline = readout.to_millivolts(quiescent);
    let mut lowpass = LowPass::settled(readout.lowpass_cutoff, dt, baseline);
    let mut disc = Discriminator::new(baseline, readout.threshold_mv);

    let start_step = (events[first] / dt + 1e-9).floor() as u64;
    let mut state = CircuitState {
        time: start_step as f64 * dt,
        ..idle
    };
    let mut next_event = first;
    let mut latch_time = None;
    for k in start_step..total_steps {
        let t = k as f64 * dt;
        let bias = drive.bias_at(t);
        while next_event < events.len() && events[next_event] < t + dt {
            let current = state.wire_current(bias, params).max(0.0);
            state.hotspot = absorb_photon(
                state.hotspot,
                t,
                current,
                draws[next_event],
                &params.nanowire,
            );
            if state.hotspot.latched && latch_time.is_none() {
                latch_time = Some(events[next_event]);
            }
            next_event += 1;
        }
        state = step(&state, dt, bias, params)?;
        let t_next = (k + 1) as f64 * dt;
        let optical =
            drive.probe_power * transmission_with_vpi(state.node_voltage, vpi, &params.modulator);
        let level = lowpass.push(readout.to_millivolts(optical));
        if let Some(tc) = disc.push(t_next, level) {
            return Ok(record(Some(tc), latch_time));
        }
        let quiet =
            !state.hotspot.latched && state.node_voltage == 0.0 && next_event >= events.len();
        if quiet && (level - baseline).abs() < 1e-6 * readout.threshold_mv {
            break;
        }
    }
    Ok(record(None, latch_time))
}

/// Runs `n_periods` independent bias periods and collects click delays.
///
/// Periods are evaluated in parallel on the current rayon pool; results are
/// ordered by period index.
pub fn run_counting_experiment(
    drive: &OpticalDrive,
    source: &PhotonSource,
    params: &DeviceParams,
    setup: &CountingSetup,
    n_periods: u64,
    rng_seed: u64,
) -> Result<CountingResult> {
    if n_periods == 0 {
        return Err(SimError::domain("n_periods must be >= 1"));
    }
    drive.validate()?;
    source.validate(drive.period)?;
    params.validate()?;
    setup.readout.validate()?;
    if !(setup.step > 0.0) {
        return Err(SimError::domain("integration step must be > 0"));
    }
    let records: Vec<PeriodRecord> = (0..n_periods)
        .into_par_iter()
        .map(|k| {
            let mut rng = period_rng(rng_seed, k);
            simulate_period(drive, source, params, setup, &mut rng).map_err(|e| SimError::AtIndex {
                index: k as usize,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let delays = records.iter().filter_map(|r| r.click).collect();
    Ok(CountingResult {
        delays,
        records,
        n_periods,
    })
}

/// Click delay of one photon absorbed with certainty at `arrival`, with no
/// background: the deterministic latency of the latch-and-readout chain.
pub fn single_photon_click_delay(
    drive: &OpticalDrive,
    arrival: f64,
    params: &DeviceParams,
    setup: &CountingSetup,
) -> Result<Option<f64>> {
    Ok(simulate_events(drive, &[arrival], &[0.0], params, setup)?.click)
}
