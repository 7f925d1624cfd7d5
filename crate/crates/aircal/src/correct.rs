//! Affine correction with moment-matched parameters: within each
//! correction-active span the site value is replaced by
//! `a0 + a1 * y`, with (a0, a1) refitted every hour from the trailing
//! window so the correction tracks evolving drift.

use thiserror::Error;

use crate::config::FrameworkConfig;
use crate::drift::{DriftError, FrameworkState};
use crate::model::HourlySeries;
use crate::stats::mean_var;

#[derive(Debug, Error, PartialEq)]
pub enum CorrectError {
    #[error("cannot fit: {0}")]
    CannotFit(&'static str),
    #[error(transparent)]
    Drift(#[from] DriftError),
}

/// One fitted parameter pair, valid for the hour its window ends at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedParams {
    pub at: i64,
    /// Intercept a0, ppb.
    pub a0: f64,
    /// Slope a1, dimensionless, > 0.
    pub a1: f64,
}

/// Corrected series plus the parameter trail and active spans.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionResult {
    pub site_id: String,
    /// Corrected series; outside active spans values pass through
    /// unchanged.
    pub corrected: HourlySeries,
    pub parameter_trail: Vec<FittedParams>,
    /// Spans (inclusive epoch hours) during which correction applied.
    pub active_spans: Vec<(i64, i64)>,
    /// Hours whose corrected value was negative and clamped to 0.
    pub clamped_hours: Vec<i64>,
}

/// Moment-matching fit: a1 = sqrt(var(proxy)/var(site)),
/// a0 = mean(proxy) - a1 * mean(site). Both windows are the present
/// values of an already-gated trailing window.
pub fn fit_parameters(
    site_window: &[f64],
    proxy_window: &[f64],
) -> Result<(f64, f64), CorrectError> {
    let (mean_y, var_y) =
        mean_var(site_window).map_err(|_| CorrectError::CannotFit("site window too small"))?;
    let (mean_z, var_z) =
        mean_var(proxy_window).map_err(|_| CorrectError::CannotFit("proxy window too small"))?;
    if var_y == 0.0 && var_z == 0.0 {
        return Ok((mean_z - mean_y, 1.0));
    }
    if var_y == 0.0 {
        return Err(CorrectError::CannotFit("zero site variance"));
    }
    if var_z == 0.0 {
        return Err(CorrectError::CannotFit("zero proxy variance"));
    }
    let a1 = (var_z / var_y).sqrt();
    Ok((mean_z - a1 * mean_y, a1))
}

/// Apply the correction dictated by a framework state.
///
/// Within each correction-active span every present hour is transformed
/// with parameters fitted on the trailing window ending at that hour;
/// everywhere else values pass through unchanged. Corrected values below
/// zero are clamped to 0 and reported in `clamped_hours`.
pub fn apply_correction(
    site: &HourlySeries,
    state: &FrameworkState,
    proxy: &HourlySeries,
    cfg: &FrameworkConfig,
) -> Result<CorrectionResult, CorrectError> {
    if site.start_hour != proxy.start_hour || site.len() != proxy.len() {
        return Err(DriftError::EpochMismatch.into());
    }
    if state.site_id != site.site_id || state.proxy_id != proxy.site_id {
        return Err(DriftError::StateMismatch.into());
    }

    let w = cfg.window_hours;
    let site_no2 = site.no2_values();
    let proxy_no2 = proxy.no2_values();
    let mut corrected = site.clone();
    let mut parameter_trail = Vec::new();
    let mut clamped_hours = Vec::new();

    for &(span_start, span_end) in &state.correction_active_spans {
        let mut hour = span_start;
        while hour <= span_end {
            let idx = (hour - site.start_hour) as usize;
            debug_assert!(idx + 1 >= w);
            let lo = idx + 1 - w;
            let site_present: Vec<f64> = site_no2[lo..=idx].iter().flatten().copied().collect();
            let proxy_present: Vec<f64> = proxy_no2[lo..=idx].iter().flatten().copied().collect();
            let (a0, a1) = fit_parameters(&site_present, &proxy_present)?;
            parameter_trail.push(FittedParams { at: hour, a0, a1 });
            if let Some(y) = site_no2[idx] {
                let mut x_hat = a0 + a1 * y;
                if x_hat < 0.0 {
                    x_hat = 0.0;
                    clamped_hours.push(hour);
                }
                corrected.obs[idx].no2 = Some(x_hat);
            }
            hour += 1;
        }
    }

    Ok(CorrectionResult {
        site_id: site.site_id.clone(),
        corrected,
        parameter_trail,
        active_spans: state.correction_active_spans.clone(),
        clamped_hours,
    })
}
