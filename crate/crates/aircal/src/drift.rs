//! The rolling-window three-test framework: per-hour KS, slope and
//! intercept tests of a site against its proxy, with alarm and failure
//! state tracking.
//!
//! An *alarm* is an instantaneous threshold breach on the trailing
//! window; a *failure* is that breach sustained continuously for
//! `failure_hours`. Correction becomes active while at least
//! `correction_trigger` tests are simultaneously in failure state.

use thiserror::Error;

use crate::config::FrameworkConfig;
use crate::model::HourlySeries;
use crate::stats::{ks_two_sample, mean_var};

#[derive(Debug, Error, PartialEq)]
pub enum DriftError {
    #[error("site and proxy series cover different epochs")]
    EpochMismatch,
    #[error("series too short: {got} hours, window is {window}")]
    TooShort { got: usize, window: usize },
    #[error("framework state does not match the series it is applied to")]
    StateMismatch,
}

/// The three per-window tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    Ks,
    Slope,
    Intercept,
}

pub const ALL_TESTS: [TestKind; 3] = [TestKind::Ks, TestKind::Slope, TestKind::Intercept];

/// One value per test.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerTest<T> {
    pub ks: T,
    pub slope: T,
    pub intercept: T,
}

impl<T> PerTest<T> {
    pub fn get(&self, kind: TestKind) -> &T {
        match kind {
            TestKind::Ks => &self.ks,
            TestKind::Slope => &self.slope,
            TestKind::Intercept => &self.intercept,
        }
    }

    pub fn get_mut(&mut self, kind: TestKind) -> &mut T {
        match kind {
            TestKind::Ks => &mut self.ks,
            TestKind::Slope => &mut self.slope,
            TestKind::Intercept => &mut self.intercept,
        }
    }
}

/// Result of evaluating one trailing window.
///
/// A statistic is `None` (indeterminate) when the completeness gate
/// fails or the window is degenerate; alarms are always false for
/// indeterminate statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestVector {
    /// Epoch hour this window ends at (inclusive).
    pub at: i64,
    pub ks_p: Option<f64>,
    /// Estimated slope a1 = sqrt(var(proxy)/var(site)).
    pub slope: Option<f64>,
    /// Estimated intercept a0 = mean(proxy) - a1 * mean(site), ppb.
    pub intercept: Option<f64>,
    pub alarms: PerTest<bool>,
    /// Lesser of the two windows' present-hour fractions.
    pub completeness: f64,
}

impl TestVector {
    fn indeterminate(at: i64, completeness: f64) -> Self {
        Self {
            at,
            ks_p: None,
            slope: None,
            intercept: None,
            alarms: PerTest::default(),
            completeness,
        }
    }

    pub fn alarm_count(&self) -> u8 {
        ALL_TESTS
            .iter()
            .map(|&t| *self.alarms.get(t) as u8)
            .sum()
    }

    /// Evaluable means the completeness gate passed and the KS statistic
    /// exists; slope/intercept may still be degenerate-indeterminate.
    pub fn is_evaluable(&self) -> bool {
        self.ks_p.is_some()
    }
}

/// Per-site rolling evaluation: test trail, failure spans, correction
/// activity. Spans are inclusive `[start, end]` epoch-hour intervals,
/// disjoint and ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameworkState {
    pub site_id: String,
    pub proxy_id: String,
    pub trail: Vec<TestVector>,
    /// Number of tests in failure state at each trail entry.
    pub failing: Vec<u8>,
    /// Whether correction is active at each trail entry.
    pub correction_active: Vec<bool>,
    pub failure_spans: PerTest<Vec<(i64, i64)>>,
    pub correction_active_spans: Vec<(i64, i64)>,
}

impl FrameworkState {
    /// Trail entry covering epoch hour `hour`, if evaluated.
    pub fn entry_at(&self, hour: i64) -> Option<&TestVector> {
        self.trail
            .binary_search_by_key(&hour, |tv| tv.at)
            .ok()
            .map(|i| &self.trail[i])
    }
}

/// Evaluate one pair of aligned trailing windows.
///
/// Degenerate variances: a zero-variance window on one side only makes
/// the slope (and hence intercept) indeterminate; both sides constant
/// takes slope = 1 with the intercept from the means.
pub fn evaluate_window(
    site_window: &[Option<f64>],
    proxy_window: &[Option<f64>],
    at: i64,
    cfg: &FrameworkConfig,
) -> TestVector {
    debug_assert_eq!(site_window.len(), proxy_window.len());
    let len = site_window.len().max(1) as f64;
    let site: Vec<f64> = site_window.iter().flatten().copied().collect();
    let proxy: Vec<f64> = proxy_window.iter().flatten().copied().collect();
    let completeness = (site.len() as f64 / len).min(proxy.len() as f64 / len);
    if completeness < cfg.min_completeness || site.len() < 2 || proxy.len() < 2 {
        return TestVector::indeterminate(at, completeness);
    }

    let ks_p = ks_two_sample(&site, &proxy).ok().map(|r| r.p_value);

    let (mean_y, var_y) = mean_var(&site).expect("window has >= 2 values");
    let (mean_z, var_z) = mean_var(&proxy).expect("window has >= 2 values");
    let (slope, intercept) = if var_y == 0.0 && var_z == 0.0 {
        (Some(1.0), Some(mean_z - mean_y))
    } else if var_y == 0.0 || var_z == 0.0 {
        (None, None)
    } else {
        let a1 = (var_z / var_y).sqrt();
        (Some(a1), Some(mean_z - a1 * mean_y))
    };

    let mut alarms = PerTest::default();
    if let Some(p) = ks_p {
        alarms.ks = p < cfg.p_ks_threshold;
    }
    if let Some(a1) = slope {
        let (lo, hi) = cfg.slope_band;
        let outside = |x: f64| x < lo || x > hi;
        // The band is checked on the ratio in both orientations: a gain
        // drift of g at the site shows up as a1 = 1/g.
        alarms.slope = outside(a1) || outside(1.0 / a1);
    }
    if let Some(a0) = intercept {
        alarms.intercept = a0 < cfg.intercept_band_ppb.0 || a0 > cfg.intercept_band_ppb.1;
    }

    TestVector {
        at,
        ks_p,
        slope,
        intercept,
        alarms,
        completeness,
    }
}

/// Evaluate every trailing window of a site/proxy pair and derive
/// failure spans and correction activity.
///
/// Evaluation runs at `cfg.stride`-hour cadence from the first full
/// window onward; with stride > 1, failure requires the alarm to hold
/// for `ceil(failure_hours / stride)` consecutive evaluations.
pub fn run_framework(
    site: &HourlySeries,
    proxy: &HourlySeries,
    cfg: &FrameworkConfig,
) -> Result<FrameworkState, DriftError> {
    if site.start_hour != proxy.start_hour || site.len() != proxy.len() {
        return Err(DriftError::EpochMismatch);
    }
    if site.len() < cfg.window_hours {
        return Err(DriftError::TooShort {
            got: site.len(),
            window: cfg.window_hours,
        });
    }
    let w = cfg.window_hours;
    let site_no2 = site.no2_values();
    let proxy_no2 = proxy.no2_values();

    let mut trail = Vec::new();
    let mut idx = w - 1;
    while idx < site.len() {
        let lo = idx + 1 - w;
        trail.push(evaluate_window(
            &site_no2[lo..=idx],
            &proxy_no2[lo..=idx],
            site.hour_at(idx),
            cfg,
        ));
        idx += cfg.stride;
    }

    let need = cfg.failure_hours.div_ceil(cfg.stride);
    let mut failure_active: PerTest<Vec<bool>> = PerTest {
        ks: Vec::new(),
        slope: Vec::new(),
        intercept: Vec::new(),
    };
    for kind in ALL_TESTS {
        let alarms: Vec<bool> = trail.iter().map(|tv| *tv.alarms.get(kind)).collect();
        *failure_active.get_mut(kind) = failure_state(&alarms, need);
    }

    let failing: Vec<u8> = (0..trail.len())
        .map(|i| {
            ALL_TESTS
                .iter()
                .map(|&t| failure_active.get(t)[i] as u8)
                .sum()
        })
        .collect();
    let correction_active: Vec<bool> = failing
        .iter()
        .map(|&n| n as usize >= cfg.correction_trigger)
        .collect();

    let hours: Vec<i64> = trail.iter().map(|tv| tv.at).collect();
    let failure_spans = PerTest {
        ks: spans_of(&failure_active.ks, &hours),
        slope: spans_of(&failure_active.slope, &hours),
        intercept: spans_of(&failure_active.intercept, &hours),
    };
    let correction_active_spans = spans_of(&correction_active, &hours);

    Ok(FrameworkState {
        site_id: site.site_id.clone(),
        proxy_id: proxy.site_id.clone(),
        trail,
        failing,
        correction_active,
        failure_spans,
        correction_active_spans,
    })
}

/// Failure state per entry: true once the alarm has been continuously
/// true for `need` consecutive entries (including this one).
pub fn failure_state(alarms: &[bool], need: usize) -> Vec<bool> {
    let mut run = 0usize;
    alarms
        .iter()
        .map(|&a| {
            run = if a { run + 1 } else { 0 };
            run >= need
        })
        .collect()
}

/// Maximal runs of `true`, as inclusive (start, end) timestamp spans.
pub fn spans_of(active: &[bool], hours: &[i64]) -> Vec<(i64, i64)> {
    let mut spans = Vec::new();
    let mut open: Option<i64> = None;
    for (i, &a) in active.iter().enumerate() {
        match (a, open) {
            (true, None) => open = Some(hours[i]),
            (false, Some(start)) => {
                spans.push((start, hours[i - 1]));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        spans.push((start, *hours.last().unwrap()));
    }
    spans
}

/// Per-test alarm counts and failure-span totals over a trail.
#[derive(Debug, Clone, PartialEq)]
pub struct AlarmSummary {
    pub evaluable_hours: usize,
    pub alarm_hours: PerTest<usize>,
    /// Alarm-hours divided by evaluable hours (0 when nothing evaluable).
    pub alarm_fraction: PerTest<f64>,
    pub failure_span_count: PerTest<usize>,
    pub failure_span_hours: PerTest<i64>,
    pub correction_active_hours: usize,
}

pub fn alarm_summary(state: &FrameworkState) -> AlarmSummary {
    let evaluable = state.trail.iter().filter(|tv| tv.is_evaluable()).count();
    let mut alarm_hours = PerTest::default();
    for tv in &state.trail {
        for kind in ALL_TESTS {
            if *tv.alarms.get(kind) {
                *alarm_hours.get_mut(kind) += 1;
            }
        }
    }
    let frac = |n: usize| {
        if evaluable == 0 {
            0.0
        } else {
            n as f64 / evaluable as f64
        }
    };
    let mut alarm_fraction = PerTest::default();
    let mut failure_span_count = PerTest::default();
    let mut failure_span_hours = PerTest::default();
    for kind in ALL_TESTS {
        *alarm_fraction.get_mut(kind) = frac(*alarm_hours.get(kind));
        let spans = state.failure_spans.get(kind);
        *failure_span_count.get_mut(kind) = spans.len();
        *failure_span_hours.get_mut(kind) = spans.iter().map(|(s, e)| e - s + 1).sum();
    }
    AlarmSummary {
        evaluable_hours: evaluable,
        alarm_hours,
        alarm_fraction,
        failure_span_count,
        failure_span_hours,
        correction_active_hours: state.correction_active.iter().filter(|&&b| b).count(),
    }
}
