//! Seeded synthetic-network generator with controllable inter-site
//! similarity and drift injection, plus the detection scorer.
//!
//! The regional component is a shared exponentiated AR(1) (non-negative,
//! skewed) with two diurnal Gaussian bumps per site; sites in the same
//! similarity group share the regional signal, so their distributions
//! match over multi-day windows. Gain drift ramps linearly over
//! `ramp_hours` then holds; offset drift is a step. Everything is driven
//! by per-purpose ChaCha streams derived from the scenario seed, so
//! identical specs generate bit-identical datasets.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::drift::{FrameworkState, ALL_TESTS};
use crate::model::{
    HourlySeries, LandUseFeatures, NegativePolicy, NetworkDataset, Obs, SiteRecord,
};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("scenario line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("state and truth cover different scenarios")]
    ScenarioMismatch,
}

/// What kind of miscalibration an event injects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftKind {
    /// Gain ramps linearly from 1 to `magnitude` over `ramp_hours`, then
    /// holds.
    GainRamp,
    /// Offset steps by `magnitude` ppb at onset.
    OffsetStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftEvent {
    pub site_id: String,
    pub onset_hour: usize,
    pub kind: DriftKind,
    pub magnitude: f64,
    pub ramp_hours: usize,
}

impl DriftEvent {
    /// The affine map (a0, a1) this event applies at hour index `t`.
    pub fn affine_at(&self, t: usize) -> (f64, f64) {
        if t < self.onset_hour {
            return (0.0, 1.0);
        }
        match self.kind {
            DriftKind::OffsetStep => (self.magnitude, 1.0),
            DriftKind::GainRamp => {
                let frac = if self.ramp_hours == 0 {
                    1.0
                } else {
                    ((t - self.onset_hour) as f64 / self.ramp_hours as f64).min(1.0)
                };
                (0.0, 1.0 + (self.magnitude - 1.0) * frac)
            }
        }
    }
}

/// Per-hour wind generator.
#[derive(Debug, Clone, PartialEq)]
pub enum WindModel {
    /// No wind columns at all.
    None,
    Steady {
        speed_ms: f64,
        dir_deg: f64,
    },
    /// AR(1) speed around a mean, slowly wandering direction.
    Ar1 {
        speed_mean_ms: f64,
        speed_sd_ms: f64,
        phi: f64,
    },
    /// High speed until `switch_hour`, low speed after, with a small
    /// deterministic ripple; used to probe low-wind proxy mismatch.
    TwoPhase {
        high_speed_ms: f64,
        low_speed_ms: f64,
        switch_hour: usize,
        ripple_ms: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteSpec {
    pub id: String,
    /// Sites in the same group share the regional signal.
    pub group: String,
    pub baseline_ppb: f64,
    pub diurnal_amp_ppb: f64,
    pub morning_peak_hour: f64,
    pub evening_peak_hour: f64,
    /// Linear trend, ppb per 1000 hours.
    pub trend_ppb_per_1000h: f64,
    /// Expected local-source spikes per day (0 disables).
    pub spike_rate_per_day: f64,
    pub spike_magnitude_ppb: f64,
    pub noise_sd_ppb: f64,
    /// Added to the true concentration while wind speed is below the
    /// scenario's low-wind threshold; models a local source that only
    /// matters in stagnant conditions.
    pub low_wind_bias_ppb: f64,
}

impl SiteSpec {
    pub fn new(id: impl Into<String>, group: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            group: group.into(),
            baseline_ppb: 25.0,
            diurnal_amp_ppb: 6.0,
            morning_peak_hour: 8.0,
            evening_peak_hour: 20.0,
            trend_ppb_per_1000h: 0.0,
            spike_rate_per_day: 0.0,
            spike_magnitude_ppb: 15.0,
            noise_sd_ppb: 2.0,
            low_wind_bias_ppb: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub hours: usize,
    pub start_hour: i64,
    /// Mean level of the shared regional component, ppb.
    pub regional_scale_ppb: f64,
    /// Log-sd of the regional lognormal.
    pub regional_log_sd: f64,
    /// AR(1) coefficient of the regional log process.
    pub regional_ar_phi: f64,
    /// Seasonal modulation of the regional width (1 + amp at t=0,
    /// 1 - amp half a period in); the default phase makes the epoch
    /// start broad (winter-like) and narrow mid-year.
    pub seasonal_amp: f64,
    pub seasonal_period_hours: f64,
    pub wind: WindModel,
    pub low_wind_threshold_ms: f64,
    pub sites: Vec<SiteSpec>,
    pub drifts: Vec<DriftEvent>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            seed: 1,
            hours: 4000,
            start_hour: 0,
            regional_scale_ppb: 12.0,
            regional_log_sd: 0.45,
            regional_ar_phi: 0.97,
            seasonal_amp: 0.0,
            seasonal_period_hours: 8760.0,
            wind: WindModel::Ar1 {
                speed_mean_ms: 4.0,
                speed_sd_ms: 2.0,
                phi: 0.95,
            },
            low_wind_threshold_ms: 5.0,
            sites: Vec::new(),
            drifts: Vec::new(),
        }
    }
}

impl ScenarioSpec {
    /// Two interchangeable same-group sites; the basic false-alarm and
    /// drift-injection probe.
    pub fn two_site(seed: u64, hours: usize) -> Self {
        let mut sites = vec![SiteSpec::new("SITE", "g1"), SiteSpec::new("PROX", "g1")];
        for s in &mut sites {
            s.noise_sd_ppb = 1.0;
        }
        Self {
            seed,
            hours,
            regional_scale_ppb: 18.0,
            regional_log_sd: 0.55,
            sites,
            ..Self::default()
        }
    }

    /// A nine-site network in three similarity groups with varied local
    /// character and a seasonal cycle, loosely urban-like.
    pub fn default_network(seed: u64, hours: usize) -> Self {
        let mut sites = Vec::new();
        for (i, (id, group)) in [
            ("S1", "urban"),
            ("S2", "urban"),
            ("S3", "urban"),
            ("S4", "suburban"),
            ("S5", "suburban"),
            ("S6", "suburban"),
            ("S7", "inland"),
            ("S8", "inland"),
            ("S9", "inland"),
        ]
        .into_iter()
        .enumerate()
        {
            let mut s = SiteSpec::new(id, group);
            s.baseline_ppb = 18.0 + 3.0 * (i % 3) as f64;
            s.diurnal_amp_ppb = 4.0 + (i % 4) as f64;
            s.spike_rate_per_day = 0.5;
            s.spike_magnitude_ppb = 10.0;
            sites.push(s);
        }
        Self {
            seed,
            hours,
            seasonal_amp: 0.3,
            sites,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.hours == 0 {
            return Err(SimError::Invalid("hours must be > 0".into()));
        }
        if self.sites.is_empty() {
            return Err(SimError::Invalid("at least one site required".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.sites {
            if !seen.insert(&s.id) {
                return Err(SimError::Invalid(format!("duplicate site id {}", s.id)));
            }
            for (name, v) in [
                ("baseline_ppb", s.baseline_ppb),
                ("diurnal_amp_ppb", s.diurnal_amp_ppb),
                ("noise_sd_ppb", s.noise_sd_ppb),
                ("spike_rate_per_day", s.spike_rate_per_day),
            ] {
                if !v.is_finite() || v < 0.0 {
                    return Err(SimError::Invalid(format!(
                        "site {}: {} must be finite and >= 0",
                        s.id, name
                    )));
                }
            }
        }
        for d in &self.drifts {
            if !seen.contains(&d.site_id) {
                return Err(SimError::Invalid(format!(
                    "drift references unknown site {}",
                    d.site_id
                )));
            }
            if d.onset_hour >= self.hours {
                return Err(SimError::Invalid(format!(
                    "drift onset {} outside epoch of {} hours",
                    d.onset_hour, self.hours
                )));
            }
            if !d.magnitude.is_finite() {
                return Err(SimError::Invalid("drift magnitude must be finite".into()));
            }
        }
        if !(self.regional_scale_ppb >= 0.0 && self.regional_log_sd >= 0.0) {
            return Err(SimError::Invalid("regional parameters must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.regional_ar_phi) {
            return Err(SimError::Invalid("regional_ar_phi must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// The generator's ground truth: per-site true series and the applied
/// drift schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub true_series: BTreeMap<String, Vec<f64>>,
    pub schedule: Vec<DriftEvent>,
    pub start_hour: i64,
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn stream(seed: u64, tag: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(fnv1a(tag).wrapping_add(seed.wrapping_mul(0x9E3779B97F4A7C15)))
}

fn circular_hour_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(24.0);
    d.min(24.0 - d)
}

/// Generate the observed dataset and its ground truth.
///
/// Observed = drift(true) + noise, clamped at zero; the true series is
/// returned alongside so detection and correction can be scored.
pub fn generate(spec: &ScenarioSpec) -> Result<(NetworkDataset, GroundTruth), SimError> {
    spec.validate()?;
    let n = spec.hours;

    // Wind, shared across the network.
    let wind: Vec<(Option<f64>, Option<f64>)> = match &spec.wind {
        WindModel::None => vec![(None, None); n],
        WindModel::Steady { speed_ms, dir_deg } => vec![(Some(*speed_ms), Some(*dir_deg)); n],
        WindModel::Ar1 {
            speed_mean_ms,
            speed_sd_ms,
            phi,
        } => {
            let mut rng = stream(spec.seed, "wind");
            let mut ar = 0.0f64;
            let mut dir = rng.gen_range(0.0..360.0);
            (0..n)
                .map(|_| {
                    let e: f64 = rng.sample(StandardNormal);
                    ar = phi * ar + (1.0 - phi * phi).sqrt() * e;
                    let step: f64 = rng.sample(StandardNormal);
                    dir = (dir + 8.0 * step).rem_euclid(360.0);
                    (Some((speed_mean_ms + speed_sd_ms * ar).max(0.0)), Some(dir))
                })
                .collect()
        }
        WindModel::TwoPhase {
            high_speed_ms,
            low_speed_ms,
            switch_hour,
            ripple_ms,
        } => (0..n)
            .map(|t| {
                let base = if t < *switch_hour {
                    *high_speed_ms
                } else {
                    *low_speed_ms
                };
                let speed = (base + ripple_ms * (t as f64 * 0.7).sin()).max(0.0);
                let dir = (t as f64 * 7.3).rem_euclid(360.0);
                (Some(speed), Some(dir))
            })
            .collect(),
    };

    // Shared regional component per similarity group, mean-corrected so
    // its level stays at regional_scale_ppb across seasonal widths.
    let mut groups: Vec<&str> = spec.sites.iter().map(|s| s.group.as_str()).collect();
    groups.sort_unstable();
    groups.dedup();
    let mut regional: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for group in groups {
        let mut rng = stream(spec.seed, &format!("regional/{group}"));
        let phi = spec.regional_ar_phi;
        let mut ar = 0.0f64;
        let series: Vec<f64> = (0..n)
            .map(|t| {
                let e: f64 = rng.sample(StandardNormal);
                ar = phi * ar + (1.0 - phi * phi).sqrt() * e;
                let width = 1.0
                    + spec.seasonal_amp
                        * (2.0 * std::f64::consts::PI * t as f64 / spec.seasonal_period_hours)
                            .cos();
                let sigma = spec.regional_log_sd * width;
                spec.regional_scale_ppb * (sigma * ar - 0.5 * sigma * sigma).exp()
            })
            .collect();
        regional.insert(group, series);
    }

    let mut site_records = Vec::new();
    let mut series = Vec::new();
    let mut truth: BTreeMap<String, Vec<f64>> = BTreeMap::new();

    for (i, site) in spec.sites.iter().enumerate() {
        let reg = &regional[site.group.as_str()];
        let mut rng = stream(spec.seed, &format!("site/{}", site.id));
        let events: Vec<&DriftEvent> = spec
            .drifts
            .iter()
            .filter(|d| d.site_id == site.id)
            .collect();

        let mut x_true = Vec::with_capacity(n);
        let mut obs = Vec::with_capacity(n);
        for t in 0..n {
            let hour_of_day = (spec.start_hour + t as i64).rem_euclid(24) as f64;
            let bump = |peak: f64| {
                let d = circular_hour_dist(hour_of_day, peak);
                (-d * d / 8.0).exp()
            };
            let diurnal = site.diurnal_amp_ppb
                * (bump(site.morning_peak_hour) + bump(site.evening_peak_hour));
            let trend = site.trend_ppb_per_1000h * t as f64 / 1000.0;

            // Draw in a fixed order every hour so the stream stays
            // aligned whatever the parameters are.
            let spike_u: f64 = rng.gen();
            let spike_e: f64 = rng.gen::<f64>().max(1e-12);
            let noise_e: f64 = rng.sample(StandardNormal);

            let spike = if spike_u < site.spike_rate_per_day / 24.0 {
                -site.spike_magnitude_ppb * spike_e.ln()
            } else {
                0.0
            };
            let bias = match wind[t].0 {
                Some(speed) if speed < spec.low_wind_threshold_ms => site.low_wind_bias_ppb,
                _ => 0.0,
            };

            let x = (site.baseline_ppb + reg[t] + diurnal + trend + spike + bias).max(0.0);
            x_true.push(x);

            let (mut a, mut b) = (0.0, 1.0);
            for event in &events {
                let (ea, eb) = event.affine_at(t);
                a = ea + eb * a;
                b *= eb;
            }
            let y = (a + b * x + site.noise_sd_ppb * noise_e).max(0.0);
            obs.push(Obs {
                no2: Some(y),
                wind_speed: wind[t].0,
                wind_dir: wind[t].1,
            });
        }

        truth.insert(site.id.clone(), x_true);
        series.push(HourlySeries::new(site.id.clone(), spec.start_hour, obs));
        // Synthetic metadata: coordinates and land-use placeholders so
        // the dataset passes validation and flows through the pipeline.
        site_records.push(SiteRecord {
            site_id: site.id.clone(),
            name: site.id.clone(),
            latitude: 34.0 + 0.02 * i as f64,
            longitude: -118.0 + 0.02 * i as f64,
            features: LandUseFeatures {
                dist_to_motorway_m: 800.0 + 150.0 * i as f64,
                elevation_m: 30.0 + 10.0 * i as f64,
                road_length_1km_m: 4000.0 + 250.0 * i as f64,
            },
        });
    }

    let dataset = NetworkDataset::from_parts(site_records, series, NegativePolicy::Reject)
        .map_err(|v| SimError::Invalid(format!("generator produced invalid data: {:?}", v)))?;
    Ok((
        dataset,
        GroundTruth {
            true_series: truth,
            schedule: spec.drifts.clone(),
            start_hour: spec.start_hour,
        },
    ))
}

/// Detection quality of one site's framework run against the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionScore {
    /// Alarm-hours (any test) outside any true-drift window, divided by
    /// evaluable clean hours.
    pub false_alarm_rate: f64,
    pub clean_hours: usize,
    pub clean_alarm_hours: usize,
    /// Per event: failure-span start minus onset, when detected.
    pub events: Vec<EventScore>,
    pub missed_events: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventScore {
    pub site_id: String,
    pub onset_hour: i64,
    /// Hours from onset to the first failure span opening at or after
    /// it, over any test.
    pub latency_hours: Option<i64>,
}

/// Score a framework state for one site against the drift schedule.
pub fn score_detection(state: &FrameworkState, truth: &GroundTruth) -> DetectionScore {
    let events: Vec<&DriftEvent> = truth
        .schedule
        .iter()
        .filter(|d| d.site_id == state.site_id)
        .collect();
    let onsets: Vec<i64> = events
        .iter()
        .map(|e| truth.start_hour + e.onset_hour as i64)
        .collect();
    // Events persist to the end of the epoch, so an hour is "clean" iff
    // it precedes every onset.
    let drift_begins = onsets.iter().copied().min();

    let mut clean_hours = 0usize;
    let mut clean_alarm_hours = 0usize;
    for tv in &state.trail {
        if !tv.is_evaluable() {
            continue;
        }
        if drift_begins.map_or(true, |d| tv.at < d) {
            clean_hours += 1;
            if tv.alarm_count() > 0 {
                clean_alarm_hours += 1;
            }
        }
    }

    let mut scored = Vec::new();
    let mut missed = 0usize;
    for (event, &onset) in events.iter().zip(&onsets) {
        let latency = ALL_TESTS
            .iter()
            .flat_map(|&t| state.failure_spans.get(t).iter())
            .filter(|(start, _)| *start >= onset)
            .map(|(start, _)| start - onset)
            .min();
        if latency.is_none() {
            missed += 1;
        }
        scored.push(EventScore {
            site_id: event.site_id.clone(),
            onset_hour: onset,
            latency_hours: latency,
        });
    }

    DetectionScore {
        false_alarm_rate: if clean_hours == 0 {
            0.0
        } else {
            clean_alarm_hours as f64 / clean_hours as f64
        },
        clean_hours,
        clean_alarm_hours,
        events: scored,
        missed_events: missed,
    }
}

/// Parse a scenario from the plain-text key = value format.
///
/// Site keys are `site.<id>.<field>`; drift events are
/// `drift.<n> = site,onset_hour,kind,magnitude,ramp_hours`.
pub fn scenario_from_str(text: &str) -> Result<ScenarioSpec, SimError> {
    let pairs = crate::config::parse_key_values(text).map_err(|e| match e {
        crate::config::ConfigError::Parse { line, reason } => SimError::Parse { line, reason },
        other => SimError::Invalid(other.to_string()),
    })?;

    let mut spec = ScenarioSpec::default();
    let mut sites: BTreeMap<String, SiteSpec> = BTreeMap::new();
    let mut site_order: Vec<String> = Vec::new();
    let mut drifts: BTreeMap<usize, DriftEvent> = BTreeMap::new();
    let mut wind_kind = String::from("ar1");
    let mut wind_kv: BTreeMap<String, f64> = BTreeMap::new();

    for (line, key, value) in pairs {
        let bad = |reason: String| SimError::Parse { line, reason };
        let f = |v: &str| {
            v.parse::<f64>()
                .map_err(|e| bad(format!("{key}: {e}")))
        };
        if let Some(rest) = key.strip_prefix("site.") {
            let (id, field) = rest
                .split_once('.')
                .ok_or_else(|| bad(format!("expected site.<id>.<field>, got {key}")))?;
            if !sites.contains_key(id) {
                site_order.push(id.to_string());
                sites.insert(id.to_string(), SiteSpec::new(id, "g1"));
            }
            let site = sites.get_mut(id).unwrap();
            match field {
                "group" => site.group = value.clone(),
                "baseline_ppb" => site.baseline_ppb = f(&value)?,
                "diurnal_amp_ppb" => site.diurnal_amp_ppb = f(&value)?,
                "morning_peak_hour" => site.morning_peak_hour = f(&value)?,
                "evening_peak_hour" => site.evening_peak_hour = f(&value)?,
                "trend_ppb_per_1000h" => site.trend_ppb_per_1000h = f(&value)?,
                "spike_rate_per_day" => site.spike_rate_per_day = f(&value)?,
                "spike_magnitude_ppb" => site.spike_magnitude_ppb = f(&value)?,
                "noise_sd_ppb" => site.noise_sd_ppb = f(&value)?,
                "low_wind_bias_ppb" => site.low_wind_bias_ppb = f(&value)?,
                other => return Err(bad(format!("unknown site field '{other}'"))),
            }
            continue;
        }
        if let Some(idx) = key.strip_prefix("drift.") {
            let idx: usize = idx
                .parse()
                .map_err(|_| bad(format!("drift index in '{key}'")))?;
            let parts: Vec<&str> = value.split(',').map(str::trim).collect();
            if parts.len() != 5 {
                return Err(bad(
                    "drift needs: site,onset_hour,kind,magnitude,ramp_hours".into(),
                ));
            }
            let kind = match parts[2] {
                "gain_ramp" => DriftKind::GainRamp,
                "offset_step" => DriftKind::OffsetStep,
                other => return Err(bad(format!("unknown drift kind '{other}'"))),
            };
            drifts.insert(
                idx,
                DriftEvent {
                    site_id: parts[0].to_string(),
                    onset_hour: parts[1]
                        .parse()
                        .map_err(|e| bad(format!("onset_hour: {e}")))?,
                    kind,
                    magnitude: parts[3]
                        .parse()
                        .map_err(|e| bad(format!("magnitude: {e}")))?,
                    ramp_hours: parts[4]
                        .parse()
                        .map_err(|e| bad(format!("ramp_hours: {e}")))?,
                },
            );
            continue;
        }
        if let Some(field) = key.strip_prefix("wind_") {
            if field == "model" {
                wind_kind = value.clone();
            } else {
                wind_kv.insert(field.to_string(), f(&value)?);
            }
            continue;
        }
        match key.as_str() {
            "seed" => spec.seed = value.parse().map_err(|e| bad(format!("seed: {e}")))?,
            "hours" => spec.hours = value.parse().map_err(|e| bad(format!("hours: {e}")))?,
            "start_hour" => {
                spec.start_hour = value.parse().map_err(|e| bad(format!("start_hour: {e}")))?
            }
            "regional_scale_ppb" => spec.regional_scale_ppb = f(&value)?,
            "regional_log_sd" => spec.regional_log_sd = f(&value)?,
            "regional_ar_phi" => spec.regional_ar_phi = f(&value)?,
            "seasonal_amp" => spec.seasonal_amp = f(&value)?,
            "seasonal_period_hours" => spec.seasonal_period_hours = f(&value)?,
            "low_wind_threshold_ms" => spec.low_wind_threshold_ms = f(&value)?,
            other => return Err(bad(format!("unknown key '{other}'"))),
        }
    }

    let get = |kv: &BTreeMap<String, f64>, k: &str, default: f64| kv.get(k).copied().unwrap_or(default);
    spec.wind = match wind_kind.as_str() {
        "none" => WindModel::None,
        "steady" => WindModel::Steady {
            speed_ms: get(&wind_kv, "speed_ms", 4.0),
            dir_deg: get(&wind_kv, "dir_deg", 0.0),
        },
        "ar1" => WindModel::Ar1 {
            speed_mean_ms: get(&wind_kv, "speed_mean_ms", 4.0),
            speed_sd_ms: get(&wind_kv, "speed_sd_ms", 2.0),
            phi: get(&wind_kv, "phi", 0.95),
        },
        "two_phase" => WindModel::TwoPhase {
            high_speed_ms: get(&wind_kv, "high_speed_ms", 8.0),
            low_speed_ms: get(&wind_kv, "low_speed_ms", 2.0),
            switch_hour: get(&wind_kv, "switch_hour", 2000.0) as usize,
            ripple_ms: get(&wind_kv, "ripple_ms", 0.5),
        },
        other => return Err(SimError::Invalid(format!("unknown wind model '{other}'"))),
    };
    spec.sites = site_order.into_iter().map(|id| sites[&id].clone()).collect();
    spec.drifts = drifts.into_values().collect();
    spec.validate()?;
    Ok(spec)
}

pub fn scenario_from_file(path: &std::path::Path) -> Result<ScenarioSpec, SimError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    scenario_from_str(&text)
}
