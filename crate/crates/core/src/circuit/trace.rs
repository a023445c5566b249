use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Uniformly sampled multi-channel record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTrace {
    /// s
    pub sample_period: f64,
    /// s, drive period the record was generated with.
    pub period: Option<f64>,
    channels: Vec<(String, Vec<f64>)>,
}

/// Column order of the exported CSV.
pub const TRACE_COLUMNS: [&str; 6] = [
    "time_s",
    "v_node_V",
    "r_wire_ohm",
    "p_out_W",
    "v_readout_mV",
    "click",
];

impl TimeTrace {
    pub fn new(sample_period: f64, period: Option<f64>) -> Self {
        TimeTrace {
            sample_period,
            period,
            channels: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, |(_, d)| d.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends a channel. Panics if its length differs from existing channels.
    pub fn push_channel(&mut self, name: &str, data: Vec<f64>) {
        assert!(
            self.channels.is_empty() || data.len() == self.len(),
            "channel {name} has {} samples, trace has {}",
            data.len(),
            self.len()
        );
        self.channels.push((name.to_string(), data));
    }

    /// Inserts or replaces a channel.
    pub fn set_channel(&mut self, name: &str, data: Vec<f64>) {
        if let Some(slot) = self.channels.iter_mut().find(|(n, _)| n == name) {
            assert_eq!(slot.1.len(), data.len());
            slot.1 = data;
        } else {
            self.push_channel(name, data);
        }
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, d)| d.as_slice())
    }

    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.iter().map(|(n, _)| n.as_str())
    }

    /// Sample times; uses the `time_s` channel when present.
    pub fn times(&self) -> Vec<f64> {
        match self.channel("time_s") {
            Some(t) => t.to_vec(),
            None => (0..self.len())
                .map(|i| i as f64 * self.sample_period)
                .collect(),
        }
    }

    /// Writes the fixed CSV schema
    /// `time_s,v_node_V,r_wire_ohm,p_out_W,v_readout_mV,click`.
    /// Channels not yet computed are written as zeros.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", TRACE_COLUMNS.join(","))?;
        let times = self.times();
        let cols: Vec<Option<&[f64]>> =
            TRACE_COLUMNS[1..].iter().map(|c| self.channel(c)).collect();
        for (i, t) in times.iter().enumerate() {
            write!(w, "{t:e}")?;
            for (c, col) in TRACE_COLUMNS[1..].iter().zip(&cols) {
                let v = col.map_or(0.0, |d| d[i]);
                if *c == "click" {
                    write!(w, ",{}", v as u8)?;
                } else {
                    write!(w, ",{v:e}")?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeMetrics {
    /// s, 10 % to 90 % on the rising edge.
    pub rise_time_90: f64,
    /// s, 90 % to 10 % on the falling edge.
    pub fall_time_90: f64,
    /// Hz
    pub repetition_rate: f64,
    /// Number of periods the edges were averaged over.
    pub pulses: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EdgeOutcome {
    Pulse(EdgeMetrics),
    NoPulse,
}

impl EdgeOutcome {
    pub fn pulse(self) -> Option<EdgeMetrics> {
        match self {
            EdgeOutcome::Pulse(m) => Some(m),
            EdgeOutcome::NoPulse => None,
        }
    }
}

/// First time after `start` where the series crosses `level` in the given
/// direction, linearly interpolated.
fn crossing(t: &[f64], y: &[f64], start: usize, level: f64, rising: bool) -> Option<f64> {
    for i in start.max(1)..y.len() {
        let (a, b) = (y[i - 1], y[i]);
        let hit = if rising {
            a < level && b >= level
        } else {
            a > level && b <= level
        };
        if hit {
            return Some(t[i - 1] + (t[i] - t[i - 1]) * (level - a) / (b - a));
        }
    }
    None
}

fn window_edges(t: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let (min, max) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = max - min;
    if !(span > 1e-12 * max.abs().max(min.abs())) || span == 0.0 {
        return None;
    }
    let lo = min + 0.1 * span;
    let hi = min + 0.9 * span;
    let r10 = crossing(t, y, 0, lo, true)?;
    let i10 = t.iter().position(|&x| x >= r10)?;
    let r90 = crossing(t, y, i10, hi, true)?;
    let i_peak = y
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > y[best] { i } else { best });
    let f90 = crossing(t, y, i_peak, hi, false)?;
    let i90 = t.iter().position(|&x| x >= f90)?;
    let f10 = crossing(t, y, i90, lo, false)?;
    Some((r90 - r10, f10 - f90))
}

/// Rise and fall times of the pulses in `channel`, measured against the
/// minimum and maximum of each drive period and averaged over every complete
/// period that contains a pulse.
pub fn edge_metrics(trace: &TimeTrace, channel: &str) -> Result<EdgeOutcome> {
    let y = trace
        .channel(channel)
        .ok_or_else(|| SimError::contract(format!("trace has no {channel} channel")))?;
    let t = trace.times();
    let period = trace
        .period
        .unwrap_or(t.last().copied().unwrap_or(0.0) - t[0] + trace.sample_period);
    let per = ((period / trace.sample_period).round() as usize).max(2);
    let mut rise = 0.0;
    let mut fall = 0.0;
    let mut pulses = 0;
    let mut start = 0;
    while start + per <= y.len() {
        if let Some((r, f)) = window_edges(&t[start..start + per], &y[start..start + per]) {
            rise += r;
            fall += f;
            pulses += 1;
        }
        start += per;
    }
    if pulses == 0 {
        return Ok(EdgeOutcome::NoPulse);
    }
    Ok(EdgeOutcome::Pulse(EdgeMetrics {
        rise_time_90: rise / pulses as f64,
        fall_time_90: fall / pulses as f64,
        repetition_rate: 1.0 / period,
        pulses,
    }))
}
