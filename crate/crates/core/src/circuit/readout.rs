//! Room-temperature readout: responsivity, first-order low-pass, threshold
//! discriminator.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

use super::trace::TimeTrace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ReadoutParams {
    /// mV per µW of optical power.
    pub responsivity_mv_per_uw: f64,
    /// Hz
    pub lowpass_cutoff: f64,
    /// mV above the quiescent level.
    pub threshold_mv: f64,
    /// dBm, optical pulse sensitivity of the receiver.
    pub min_pulse_power_dbm: f64,
}

impl ReadoutParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.responsivity_mv_per_uw > 0.0) {
            return Err(SimError::domain("readout responsivity must be > 0"));
        }
        if !(self.lowpass_cutoff > 0.0) {
            return Err(SimError::domain("low-pass cutoff must be > 0"));
        }
        if !(self.threshold_mv > 0.0) {
            return Err(SimError::domain("discriminator threshold must be > 0"));
        }
        if !self.min_pulse_power_dbm.is_finite() {
            return Err(SimError::domain("receiver sensitivity must be finite"));
        }
        Ok(())
    }

    /// Electrical level in mV for an optical power in W.
    pub fn to_millivolts(&self, optical_w: f64) -> f64 {
        optical_w * (self.responsivity_mv_per_uw * 1e6)
    }
}

/// First-order low-pass realised as exact exponential smoothing.
#[derive(Debug, Clone, Copy)]
pub struct LowPass {
    alpha: f64,
    y: Option<f64>,
}

impl LowPass {
    pub fn new(cutoff_hz: f64, dt: f64) -> Self {
        LowPass {
            alpha: -(-2.0 * PI * cutoff_hz * dt).exp_m1(),
            y: None,
        }
    }

    /// Starts the filter settled at `level`.
    pub fn settled(cutoff_hz: f64, dt: f64, level: f64) -> Self {
        LowPass {
            y: Some(level),
            ..Self::new(cutoff_hz, dt)
        }
    }

    pub fn push(&mut self, x: f64) -> f64 {
        let y = match self.y {
            None => x,
            Some(y) => y + self.alpha * (x - y),
        };
        self.y = Some(y);
        y
    }
}

/// Upward threshold crossing detector with re-arm hysteresis at half the
/// threshold. Crossing times are linearly interpolated between samples.
#[derive(Debug, Clone, Copy)]
pub struct Discriminator {
    baseline: f64,
    threshold: f64,
    armed: bool,
    prev: Option<(f64, f64)>,
}

impl Discriminator {
    pub fn new(baseline: f64, threshold: f64) -> Self {
        Discriminator {
            baseline,
            threshold,
            armed: true,
            prev: None,
        }
    }

    pub fn is_armed(&self) -> bool {
        self.armed
    }

    /// Feeds one filtered sample; returns the crossing time on a click.
    pub fn push(&mut self, t: f64, level: f64) -> Option<f64> {
        let x = level - self.baseline;
        let mut click = None;
        if self.armed && x >= self.threshold {
            let tc = match self.prev {
                Some((t0, x0)) if x0 < self.threshold && x > x0 => {
                    t0 + (t - t0) * (self.threshold - x0) / (x - x0)
                }
                _ => t,
            };
            self.armed = false;
            click = Some(tc);
        } else if !self.armed && x < 0.5 * self.threshold {
            self.armed = true;
        }
        self.prev = Some((t, x));
        click
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Click {
    /// s, interpolated threshold crossing.
    pub time: f64,
    /// W, peak optical excursion above the quiescent level during the pulse.
    pub optical_amplitude: f64,
    /// Peak optical excursion is below the receiver's specified sensitivity.
    pub sub_sensitivity: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutResult {
    pub trace: TimeTrace,
    pub clicks: Vec<Click>,
}

pub(crate) fn dbm(power_w: f64) -> f64 {
    10.0 * (power_w / 1e-3).log10()
}

/// Applies the readout chain to the optical output channel `p_out_W`.
///
/// Adds `v_readout_mV` (filtered) and `click` (1 at the sample where the
/// discriminator fires) to the returned trace. The quiescent level is the
/// first filtered sample, i.e. the receiver is AC coupled to the state at
/// the start of the record.
pub fn readout_chain(trace: &TimeTrace, readout: &ReadoutParams) -> Result<ReadoutResult> {
    readout.validate()?;
    let optical = trace
        .channel("p_out_W")
        .ok_or_else(|| SimError::contract("trace has no p_out_W channel"))?;
    let times = trace.times();
    let dt = trace.sample_period;
    let mut lp = LowPass::new(readout.lowpass_cutoff, dt);
    let filtered: Vec<f64> = optical
        .iter()
        .map(|&p| lp.push(readout.to_millivolts(p)))
        .collect();
    let baseline = filtered.first().copied().unwrap_or(0.0);
    let p_quiescent = optical.first().copied().unwrap_or(0.0);

    let mut disc = Discriminator::new(baseline, readout.threshold_mv);
    let mut click_flags = vec![0.0; filtered.len()];
    let mut pending: Vec<(usize, f64)> = Vec::new();
    for (i, (&t, &y)) in times.iter().zip(&filtered).enumerate() {
        if let Some(tc) = disc.push(t, y) {
            click_flags[i] = 1.0;
            pending.push((i, tc));
        }
    }

    let clicks = pending
        .iter()
        .enumerate()
        .map(|(n, &(i, tc))| {
            let end = pending.get(n + 1).map_or(optical.len(), |&(j, _)| j);
            let amplitude = optical[i..end]
                .iter()
                .map(|&p| p - p_quiescent)
                .fold(0.0, f64::max);
            Click {
                time: tc,
                optical_amplitude: amplitude,
                sub_sensitivity: amplitude <= 0.0 || dbm(amplitude) < readout.min_pulse_power_dbm,
            }
        })
        .collect();

    let mut out = trace.clone();
    out.set_channel("v_readout_mV", filtered);
    out.set_channel("click", click_flags);
    Ok(ReadoutResult { trace: out, clicks })
}
