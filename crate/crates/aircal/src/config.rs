//! Framework and histogram configuration, plus the plain-text key=value
//! config file format. CLI flags override file values.

use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("config line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Parameters of the rolling three-test framework.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameworkConfig {
    /// Rolling window length (the 3-day comparison timescale).
    pub window_hours: usize,
    /// Continuous alarm duration that constitutes a failure (5 days).
    pub failure_hours: usize,
    /// KS alarm threshold on the p-value.
    pub p_ks_threshold: f64,
    /// Acceptable band for the estimated slope; the alarm fires when the
    /// slope or its reciprocal leaves the band (drift in either site is
    /// drift in the ratio).
    pub slope_band: (f64, f64),
    /// Acceptable band for the estimated intercept, ppb.
    pub intercept_band_ppb: (f64, f64),
    /// Minimum fraction of present hours for a window to be evaluable.
    pub min_completeness: f64,
    /// Minimum number of simultaneously failing tests that activates
    /// correction.
    pub correction_trigger: usize,
    /// Evaluation cadence in hours (1 = every hour).
    pub stride: usize,
    /// Histogram bin width for distribution comparisons, ppb.
    pub bin_width_ppb: f64,
    /// Histogram origin (left edge of the zero bin), ppb.
    pub hist_origin_ppb: f64,
}

impl Default for FrameworkConfig {
    fn default() -> Self {
        Self {
            window_hours: 72,
            failure_hours: 120,
            p_ks_threshold: 0.05,
            slope_band: (0.75, 1.25),
            intercept_band_ppb: (-5.0, 5.0),
            min_completeness: 0.75,
            correction_trigger: 2,
            stride: 1,
            bin_width_ppb: 1.0,
            hist_origin_ppb: 0.0,
        }
    }
}

impl FrameworkConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.window_hours < 24 {
            return Err(ConfigError::Invalid("window_hours must be >= 24".into()));
        }
        if self.failure_hours < self.window_hours {
            return Err(ConfigError::Invalid(
                "failure_hours must be >= window_hours".into(),
            ));
        }
        if !(self.p_ks_threshold > 0.0 && self.p_ks_threshold < 1.0) {
            return Err(ConfigError::Invalid(
                "p_ks_threshold must be in (0, 1)".into(),
            ));
        }
        if !(self.slope_band.0 <= 1.0 && 1.0 <= self.slope_band.1 && self.slope_band.0 > 0.0) {
            return Err(ConfigError::Invalid(
                "slope_band must contain 1 and be positive".into(),
            ));
        }
        if !(self.intercept_band_ppb.0 <= 0.0 && 0.0 <= self.intercept_band_ppb.1) {
            return Err(ConfigError::Invalid("intercept_band must contain 0".into()));
        }
        if !(self.min_completeness > 0.0 && self.min_completeness <= 1.0) {
            return Err(ConfigError::Invalid(
                "min_completeness must be in (0, 1]".into(),
            ));
        }
        if !(1..=3).contains(&self.correction_trigger) {
            return Err(ConfigError::Invalid(
                "correction_trigger must be 1, 2 or 3".into(),
            ));
        }
        if self.stride == 0 {
            return Err(ConfigError::Invalid("stride must be >= 1".into()));
        }
        if !(self.bin_width_ppb > 0.0) {
            return Err(ConfigError::Invalid("bin_width_ppb must be > 0".into()));
        }
        Ok(())
    }

    /// Load from a key = value file; keys missing from the file keep
    /// their defaults.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut cfg = Self::default();
        for (lineno, key, value) in parse_key_values(&text)? {
            let bad = |reason: &str| ConfigError::Parse {
                line: lineno,
                reason: format!("{key}: {reason}"),
            };
            let f = |v: &str| v.parse::<f64>().map_err(|e| bad(&e.to_string()));
            let u = |v: &str| v.parse::<usize>().map_err(|e| bad(&e.to_string()));
            match key.as_str() {
                "window_hours" => cfg.window_hours = u(&value)?,
                "failure_hours" => cfg.failure_hours = u(&value)?,
                "p_ks_threshold" => cfg.p_ks_threshold = f(&value)?,
                "slope_band_low" => cfg.slope_band.0 = f(&value)?,
                "slope_band_high" => cfg.slope_band.1 = f(&value)?,
                "intercept_band_low_ppb" => cfg.intercept_band_ppb.0 = f(&value)?,
                "intercept_band_high_ppb" => cfg.intercept_band_ppb.1 = f(&value)?,
                "min_completeness" => cfg.min_completeness = f(&value)?,
                "correction_trigger" => cfg.correction_trigger = u(&value)?,
                "stride" => cfg.stride = u(&value)?,
                "bin_width_ppb" => cfg.bin_width_ppb = f(&value)?,
                "hist_origin_ppb" => cfg.hist_origin_ppb = f(&value)?,
                other => {
                    return Err(ConfigError::Parse {
                        line: lineno,
                        reason: format!("unknown key '{other}'"),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Shared parser for the plain-text key = value format: one pair per
/// line, '#' starts a comment, blank lines ignored.
pub fn parse_key_values(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Parse {
            line: i + 1,
            reason: "expected 'key = value'".into(),
        })?;
        out.push((i + 1, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}
