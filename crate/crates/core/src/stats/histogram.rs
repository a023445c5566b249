use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Click-delay histogram with Poisson errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountHistogram {
    /// s, `counts.len() + 1` strictly increasing edges.
    pub bin_edges: Vec<f64>,
    /// Signed so that background-subtracted histograms share the type.
    pub counts: Vec<i64>,
    pub errors: Vec<f64>,
    pub n_periods: u64,
}

impl CountHistogram {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn centre(&self, i: usize) -> f64 {
        0.5 * (self.bin_edges[i] + self.bin_edges[i + 1])
    }

    pub fn total(&self) -> i64 {
        self.counts.iter().sum()
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "bin_lo_s,bin_hi_s,counts,error")?;
        for i in 0..self.n_bins() {
            writeln!(
                w,
                "{:e},{:e},{},{:e}",
                self.bin_edges[i],
                self.bin_edges[i + 1],
                self.counts[i],
                self.errors[i]
            )?;
        }
        w.flush()
    }
}

/// Bins `delays`; values outside the edges are dropped.
pub fn build_histogram(
    delays: &[f64],
    bin_edges: &[f64],
    n_periods: u64,
) -> Result<CountHistogram> {
    if bin_edges.len() < 2 || bin_edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SimError::domain(
            "bin edges must be strictly increasing, at least two",
        ));
    }
    let n = bin_edges.len() - 1;
    let mut counts = vec![0i64; n];
    let (lo, hi) = (bin_edges[0], bin_edges[n]);
    for &d in delays {
        if !(d >= lo && d < hi) {
            continue;
        }
        // first edge strictly greater than d, minus one
        let i = bin_edges.partition_point(|&e| e <= d) - 1;
        counts[i] += 1;
    }
    let errors = counts.iter().map(|&c| (c as f64).sqrt()).collect();
    Ok(CountHistogram {
        bin_edges: bin_edges.to_vec(),
        counts,
        errors,
        n_periods,
    })
}

/// Bin-wise `signal - background`, errors added in quadrature.
pub fn subtract_background(
    signal: &CountHistogram,
    background: &CountHistogram,
) -> Result<CountHistogram> {
    if signal.bin_edges != background.bin_edges {
        return Err(SimError::contract("histograms have different binning"));
    }
    if signal.n_periods != background.n_periods {
        return Err(SimError::contract(
            "histograms cover different numbers of periods",
        ));
    }
    let counts = signal
        .counts
        .iter()
        .zip(&background.counts)
        .map(|(s, b)| s - b)
        .collect();
    let errors = signal
        .errors
        .iter()
        .zip(&background.errors)
        .map(|(s, b)| s.hypot(*b))
        .collect();
    Ok(CountHistogram {
        bin_edges: signal.bin_edges.clone(),
        counts,
        errors,
        n_periods: signal.n_periods,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakStats {
    /// s, centre of the highest bin.
    pub peak_time: f64,
    pub peak_counts: i64,
    /// s, full width at half maximum from interpolated crossings.
    pub fwhm: f64,
    /// Counts within the half-maximum region.
    pub area: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PeakOutcome {
    Peak(PeakStats),
    NoPeak,
}

impl PeakOutcome {
    pub fn peak(self) -> Option<PeakStats> {
        match self {
            PeakOutcome::Peak(p) => Some(p),
            PeakOutcome::NoPeak => None,
        }
    }
}

/// Locates the dominant peak. The half-maximum crossings are interpolated
/// linearly between bin centres on each side of the maximum.
pub fn peak_stats(h: &CountHistogram) -> PeakOutcome {
    let Some((imax, &cmax)) = h
        .counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
    else {
        return PeakOutcome::NoPeak;
    };
    if cmax <= 0 {
        return PeakOutcome::NoPeak;
    }
    let half = cmax as f64 / 2.0;
    let c = |i: usize| h.counts[i] as f64;

    let mut left = h.bin_edges[0];
    let mut il = imax;
    while il > 0 {
        if c(il - 1) < half {
            let (x0, y0, x1, y1) = (h.centre(il - 1), c(il - 1), h.centre(il), c(il));
            left = x0 + (x1 - x0) * (half - y0) / (y1 - y0);
            break;
        }
        il -= 1;
    }
    let n = h.n_bins();
    let mut right = h.bin_edges[n];
    let mut ir = imax;
    while ir + 1 < n {
        if c(ir + 1) < half {
            let (x0, y0, x1, y1) = (h.centre(ir), c(ir), h.centre(ir + 1), c(ir + 1));
            right = x0 + (x1 - x0) * (y0 - half) / (y0 - y1);
            break;
        }
        ir += 1;
    }
    let area = h.counts[il..=ir].iter().sum();
    PeakOutcome::Peak(PeakStats {
        peak_time: h.centre(imax),
        peak_counts: cmax,
        fwhm: right - left,
        area,
    })
}

/// Counts of the first `n` bins lying entirely beyond one FWHM after the
/// peak, i.e. whose lower edge is at or past `peak_time + fwhm`.
pub fn post_peak_counts(h: &CountHistogram, peak: &PeakStats, n: usize) -> Vec<i64> {
    let start = h.bin_edges[..h.n_bins()].partition_point(|&e| e < peak.peak_time + peak.fwhm);
    h.counts.iter().skip(start).take(n).copied().collect()
}
