//! Measurement analysis: half-wave voltage from sinusoidal sweeps, waveguide
//! loss from Fabry-Pérot fringe contrast, and the least-squares engine both
//! share.

mod fabry_perot;
mod lsq;
mod sine;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fabry_perot::{
    contrast_from_loss, fabry_perot_fringes, fabry_perot_loss, fabry_perot_loss_from_fringes,
    fresnel_reflectivity, fringe_contrast,
};
pub use lsq::{least_squares, FitModel, LsqFit, LsqOptions};
pub use sine::{fit_sine_vpi, sine_start_grid, SineFitResult, SineModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("invalid input: {0}")]
    Domain(String),
    #[error("fit not identifiable: {0}")]
    NonIdentifiable(String),
    #[error("normal equations are rank deficient (condition {condition:e})")]
    RankDeficient { condition: f64 },
    #[error("inconsistent measurement: {0}")]
    Inconsistent(String),
    #[error("could not read sweep data: {0}")]
    Io(String),
}

pub type FitResult<T> = std::result::Result<T, FitError>;

/// Samples of a measured sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub weights: Option<Vec<f64>>,
}

impl SweepData {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> FitResult<Self> {
        let d = SweepData {
            x,
            y,
            weights: None,
        };
        d.validate(1)?;
        Ok(d)
    }

    pub fn with_weights(x: Vec<f64>, y: Vec<f64>, weights: Vec<f64>) -> FitResult<Self> {
        let d = SweepData {
            x,
            y,
            weights: Some(weights),
        };
        d.validate(1)?;
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    pub fn validate(&self, min_len: usize) -> FitResult<()> {
        if self.x.len() != self.y.len() {
            return Err(FitError::Domain("x and y lengths differ".into()));
        }
        if self.x.len() < min_len {
            return Err(FitError::Domain(format!(
                "need at least {min_len} samples, got {}",
                self.x.len()
            )));
        }
        if self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(FitError::Domain("samples must be finite".into()));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.x.len() {
                return Err(FitError::Domain("weights length differs".into()));
            }
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(FitError::Domain("weights must be finite and >= 0".into()));
            }
        }
        Ok(())
    }

    /// Divides `y` by its maximum.
    pub fn normalized(&self) -> FitResult<SweepData> {
        let max = self.y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(max > 0.0) {
            return Err(FitError::Domain(
                "cannot normalise: maximum is not positive".into(),
            ));
        }
        Ok(SweepData {
            y: self.y.iter().map(|v| v / max).collect(),
            ..self.clone()
        })
    }
}

/// Reads sweep rows: `x` and `y` are the first two columns.
///
/// Without a header a third column holds weights. With a header (a leading
/// non-numeric row) the weight column is the one named `weight`; other extra
/// columns are ignored.
pub fn read_sweep_csv(path: &Path) -> FitResult<SweepData> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_path(path)
        .map_err(|e| FitError::Io(e.to_string()))?;
    let (mut x, mut y, mut w) = (Vec::new(), Vec::new(), Vec::new());
    let mut weight_col = Some(2);
    let mut width = None;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| FitError::Io(e.to_string()))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let vals = match parsed {
            Ok(v) => v,
            Err(_) if row == 0 => {
                weight_col = rec.iter().position(|h| h.eq_ignore_ascii_case("weight"));
                width = Some(rec.len());
                continue;
            }
            Err(e) => return Err(FitError::Io(format!("row {}: {e}", row + 1))),
        };
        let bad_width = match width {
            Some(n) => vals.len() != n,
            None => !(2..=3).contains(&vals.len()),
        };
        if bad_width || vals.len() < 2 {
            return Err(FitError::Io(format!(
                "row {}: unexpected column count {}",
                row + 1,
                vals.len()
            )));
        }
        x.push(vals[0]);
        y.push(vals[1]);
        if let Some(&c) = weight_col.and_then(|i| vals.get(i)) {
            w.push(c);
        }
    }
    if !w.is_empty() && w.len() != x.len() {
        return Err(FitError::Io(
            "weight column present on some rows only".into(),
        ));
    }
    let d = SweepData {
        x,
        y,
        weights: (!w.is_empty()).then_some(w),
    };
    d.validate(1)?;
    Ok(d)
}
