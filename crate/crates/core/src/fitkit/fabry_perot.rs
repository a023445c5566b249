use std::f64::consts::LN_10;

use super::{FitError, FitResult, SweepData};

fn db_per_cm(alpha_per_cm: f64) -> f64 {
    10.0 * alpha_per_cm / LN_10
}

fn per_cm(alpha_db_per_cm: f64) -> f64 {
    alpha_db_per_cm * LN_10 / 10.0
}

fn check_cavity(facet_reflectivity: f64, length_cm: f64) -> FitResult<()> {
    if !(facet_reflectivity > 0.0 && facet_reflectivity < 1.0) {
        return Err(FitError::Domain(format!(
            "facet reflectivity must lie in (0, 1), got {facet_reflectivity}"
        )));
    }
    if !(length_cm > 0.0 && length_cm.is_finite()) {
        return Err(FitError::Domain(format!(
            "length must be > 0, got {length_cm}"
        )));
    }
    Ok(())
}

/// Normal-incidence power reflectivity of an interface to air.
pub fn fresnel_reflectivity(index: f64) -> f64 {
    ((index - 1.0) / (index + 1.0)).powi(2)
}

/// Propagation loss in dB/cm from fringe contrast `K = (Imax - Imin)/(Imax + Imin)`.
///
/// Solves `R exp(-alpha L) = (1 - sqrt(1 - K^2)) / K`.
pub fn fabry_perot_loss(contrast: f64, facet_reflectivity: f64, length_cm: f64) -> FitResult<f64> {
    if !(contrast > 0.0 && contrast < 1.0) {
        return Err(FitError::Domain(format!(
            "contrast must lie in (0, 1), got {contrast}"
        )));
    }
    check_cavity(facet_reflectivity, length_cm)?;
    // (1 - sqrt(1 - K^2)) / K without the cancellation at small K
    let x = contrast / (1.0 + (1.0 - contrast * contrast).sqrt());
    // rounding slack for the lossless cavity
    if (x - facet_reflectivity).abs() <= 4.0 * f64::EPSILON * facet_reflectivity {
        return Ok(0.0);
    }
    let alpha = (facet_reflectivity / x).ln() / length_cm;
    if alpha < 0.0 {
        return Err(FitError::Inconsistent(format!(
            "contrast {contrast} exceeds the lossless bound {:.6} for R = {facet_reflectivity}",
            contrast_from_loss(0.0, facet_reflectivity, length_cm).unwrap_or(f64::NAN)
        )));
    }
    Ok(db_per_cm(alpha))
}

/// Fringe contrast of a cavity with loss in dB/cm.
pub fn contrast_from_loss(
    alpha_db_per_cm: f64,
    facet_reflectivity: f64,
    length_cm: f64,
) -> FitResult<f64> {
    check_cavity(facet_reflectivity, length_cm)?;
    if !(alpha_db_per_cm >= 0.0 && alpha_db_per_cm.is_finite()) {
        return Err(FitError::Domain("loss must be >= 0".into()));
    }
    let x = facet_reflectivity * (-per_cm(alpha_db_per_cm) * length_cm).exp();
    Ok(2.0 * x / (1.0 + x * x))
}

/// Airy transmission of the cavity at round-trip phases `phases`.
pub fn fabry_perot_fringes(
    alpha_db_per_cm: f64,
    facet_reflectivity: f64,
    length_cm: f64,
    phases: &[f64],
) -> FitResult<Vec<f64>> {
    check_cavity(facet_reflectivity, length_cm)?;
    if !(alpha_db_per_cm >= 0.0 && alpha_db_per_cm.is_finite()) {
        return Err(FitError::Domain("loss must be >= 0".into()));
    }
    let single = (-per_cm(alpha_db_per_cm) * length_cm).exp();
    let x = facet_reflectivity * single;
    let scale = (1.0 - facet_reflectivity).powi(2) * single;
    Ok(phases
        .iter()
        .map(|phi| scale / (1.0 + x * x - 2.0 * x * phi.cos()))
        .collect())
}

/// `(max - min) / (max + min)` of measured fringe intensities.
pub fn fringe_contrast(intensity: &[f64]) -> FitResult<f64> {
    if intensity.len() < 2 {
        return Err(FitError::Domain(
            "need at least two intensity samples".into(),
        ));
    }
    let max = intensity.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = intensity.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min >= 0.0 && max > 0.0 && max.is_finite()) {
        return Err(FitError::Domain(
            "intensities must be finite, >= 0 and not all zero".into(),
        ));
    }
    Ok((max - min) / (max + min))
}

pub fn fabry_perot_loss_from_fringes(
    data: &SweepData,
    facet_reflectivity: f64,
    length_cm: f64,
) -> FitResult<f64> {
    data.validate(2)?;
    fabry_perot_loss(fringe_contrast(&data.y)?, facet_reflectivity, length_cm)
}
