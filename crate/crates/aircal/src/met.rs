//! Wind-conditioned alarm aggregation: mean alarm sum (0-3) per
//! (direction sector, speed bin) cell, as plot-ready polar data.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::drift::FrameworkState;
use crate::model::HourlySeries;

#[derive(Debug, Error, PartialEq)]
pub enum MetError {
    #[error("series {0} carries no wind observations; wind speed and direction are required for this analysis")]
    NoWindData(String),
    #[error("bin configuration invalid: {0}")]
    BadConfig(&'static str),
}

/// Bin geometry. Direction sectors follow the sector-center convention:
/// sector 0 spans [-dir_bin/2, +dir_bin/2) around north.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarBinConfig {
    pub dir_bin_deg: f64,
    pub speed_bin_ms: f64,
}

impl Default for PolarBinConfig {
    fn default() -> Self {
        Self {
            dir_bin_deg: 22.5,
            speed_bin_ms: 1.0,
        }
    }
}

/// One aggregated cell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolarCell {
    pub n_hours: usize,
    pub alarm_sum_total: u32,
}

impl PolarCell {
    pub fn mean_alarm_sum(&self) -> f64 {
        if self.n_hours == 0 {
            0.0
        } else {
            self.alarm_sum_total as f64 / self.n_hours as f64
        }
    }
}

/// Mean alarm sum by wind sector and speed bin.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarBinGrid {
    pub config: PolarBinConfig,
    /// (direction sector index, speed bin index) -> cell.
    pub cells: BTreeMap<(usize, usize), PolarCell>,
    /// Evaluable hours skipped because wind was missing.
    pub missing_wind_hours: usize,
}

impl PolarBinGrid {
    pub fn n_sectors(&self) -> usize {
        (360.0 / self.config.dir_bin_deg).round() as usize
    }

    /// Center azimuth of a direction sector, degrees.
    pub fn dir_center_deg(&self, sector: usize) -> f64 {
        sector as f64 * self.config.dir_bin_deg
    }

    /// Lower edge of a speed bin, m/s.
    pub fn speed_bin_low(&self, bin: usize) -> f64 {
        bin as f64 * self.config.speed_bin_ms
    }

    pub fn total_hours(&self) -> usize {
        self.cells.values().map(|c| c.n_hours).sum()
    }
}

/// Aggregate a framework trail over the site's own wind observations.
///
/// Each evaluable hour with present wind contributes its alarm sum
/// (0-3) to its (direction, speed) cell; hours with missing wind are
/// excluded and counted separately.
pub fn bin_alarms_by_wind(
    state: &FrameworkState,
    series: &HourlySeries,
    config: PolarBinConfig,
) -> Result<PolarBinGrid, MetError> {
    if !(config.dir_bin_deg > 0.0 && config.dir_bin_deg <= 360.0) || config.speed_bin_ms <= 0.0 {
        return Err(MetError::BadConfig("bin sizes must be positive"));
    }
    if !series.has_any_wind() {
        return Err(MetError::NoWindData(series.site_id.clone()));
    }
    let n_sectors = (360.0 / config.dir_bin_deg).round() as usize;
    let mut cells: BTreeMap<(usize, usize), PolarCell> = BTreeMap::new();
    let mut missing = 0usize;

    for tv in &state.trail {
        if !tv.is_evaluable() {
            continue;
        }
        let idx = tv.at - series.start_hour;
        if idx < 0 || idx as usize >= series.len() {
            continue;
        }
        let obs = &series.obs[idx as usize];
        let (speed, dir) = match (obs.wind_speed, obs.wind_dir) {
            (Some(s), Some(d)) => (s, d),
            _ => {
                missing += 1;
                continue;
            }
        };
        let sector =
            (((dir + config.dir_bin_deg / 2.0) / config.dir_bin_deg).floor() as usize) % n_sectors;
        let speed_bin = (speed / config.speed_bin_ms).floor() as usize;
        let cell = cells.entry((sector, speed_bin)).or_default();
        cell.n_hours += 1;
        cell.alarm_sum_total += tv.alarm_count() as u32;
    }

    Ok(PolarBinGrid {
        config,
        cells,
        missing_wind_hours: missing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::FrameworkConfig;
    use crate::drift::run_framework;
    use crate::model::Obs;

    fn series_with_wind(n: usize, speed: f64, dir: f64) -> HourlySeries {
        let obs: Vec<Obs> = (0..n)
            .map(|i| Obs {
                no2: Some(20.0 + 6.0 * ((i as f64) * 0.37).sin()),
                wind_speed: Some(speed),
                wind_dir: Some(dir),
            })
            .collect();
        HourlySeries::new("A", 0, obs)
    }

    #[test]
    fn zero_alarm_trail_gives_zero_means() {
        let site = series_with_wind(300, 3.0, 45.0);
        let proxy = HourlySeries::from_values("B", 0, &site.no2_values());
        let state = run_framework(&site, &proxy, &FrameworkConfig::default()).unwrap();
        let grid = bin_alarms_by_wind(&state, &site, PolarBinConfig::default()).unwrap();
        assert!(grid.cells.values().all(|c| c.mean_alarm_sum() == 0.0));
        assert_eq!(grid.total_hours(), state.trail.len());
    }

    #[test]
    fn alarms_land_in_their_wind_cell() {
        let site = series_with_wind(300, 3.2, 45.0);
        let proxy = HourlySeries::from_values("B", 0, &site.no2_values());
        let mut state = run_framework(&site, &proxy, &FrameworkConfig::default()).unwrap();
        for tv in state.trail.iter_mut() {
            tv.alarms.intercept = true;
        }
        let grid = bin_alarms_by_wind(&state, &site, PolarBinConfig::default()).unwrap();
        // 45 degrees at 22.5-degree sectors is sector 2 (NE); 3.2 m/s at
        // 1 m/s bins is bin 3.
        let cell = grid.cells[&(2, 3)];
        assert_eq!(cell.n_hours, state.trail.len());
        assert!((cell.mean_alarm_sum() - 1.0).abs() < 1e-12);
        assert_eq!(grid.cells.len(), 1);
    }

    #[test]
    fn sector_zero_wraps_around_north() {
        let grid_cfg = PolarBinConfig::default();
        for dir in [0.0, 11.0, 349.0] {
            let site = series_with_wind(100, 1.0, dir);
            let proxy = HourlySeries::from_values("B", 0, &site.no2_values());
            let state = run_framework(&site, &proxy, &FrameworkConfig::default()).unwrap();
            let grid = bin_alarms_by_wind(&state, &site, grid_cfg).unwrap();
            assert!(
                grid.cells.keys().all(|&(sector, _)| sector == 0),
                "dir {} not in sector 0",
                dir
            );
        }
    }

    #[test]
    fn missing_wind_hours_are_counted() {
        let mut site = series_with_wind(300, 3.0, 45.0);
        for obs in site.obs.iter_mut().skip(100).take(50) {
            obs.wind_speed = None;
        }
        let proxy = HourlySeries::from_values("B", 0, &site.no2_values());
        let state = run_framework(&site, &proxy, &FrameworkConfig::default()).unwrap();
        let grid = bin_alarms_by_wind(&state, &site, PolarBinConfig::default()).unwrap();
        assert_eq!(grid.missing_wind_hours, 50);
        assert_eq!(grid.total_hours(), state.trail.len() - 50);
    }

    #[test]
    fn no_wind_at_all_is_an_error() {
        let site = HourlySeries::from_values("A", 0, &vec![Some(20.0); 100]);
        let proxy = HourlySeries::from_values("B", 0, &site.no2_values());
        let state = run_framework(&site, &proxy, &FrameworkConfig::default()).unwrap();
        assert!(matches!(
            bin_alarms_by_wind(&state, &site, PolarBinConfig::default()),
            Err(MetError::NoWindData(_))
        ));
    }
}
