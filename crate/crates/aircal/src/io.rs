//! Deterministic CSV ingestion and emission.
//!
//! Timestamps in files are ISO-8601 UTC on exact hour boundaries
//! (`2024-01-01T05:00:00Z`); internally everything is epoch hours.
//! Floats are written with Rust's shortest round-trip formatting, so
//! write-then-read reproduces values bit-exactly. Missing values are the
//! literal `NA` (an empty field also reads as missing).

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Timelike, Utc};
use thiserror::Error;

use crate::correct::CorrectionResult;
use crate::drift::FrameworkState;
use crate::met::PolarBinGrid;
use crate::model::{
    HourlySeries, LandUseFeatures, Obs, ProxyAssignment, SelectionMethod, SiteRecord,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path} line {line}: {reason}")]
    Format {
        path: String,
        line: usize,
        reason: String,
    },
}

impl IoError {
    fn format(path: &Path, line: usize, reason: impl Into<String>) -> Self {
        IoError::Format {
            path: path.display().to_string(),
            line,
            reason: reason.into(),
        }
    }
}

/// Epoch hour -> `2024-01-01T05:00:00Z`.
pub fn hour_to_iso(hour: i64) -> String {
    DateTime::<Utc>::from_timestamp(hour * 3600, 0)
        .expect("epoch hour in chrono range")
        .format("%Y-%m-%dT%H:%M:%SZ")
        .to_string()
}

/// ISO-8601 UTC timestamp -> epoch hour; anything off an exact hour
/// boundary is an error.
pub fn iso_to_hour(s: &str) -> Result<i64, String> {
    let dt = DateTime::parse_from_rfc3339(s).map_err(|e| format!("bad timestamp '{s}': {e}"))?;
    let utc = dt.with_timezone(&Utc);
    if utc.minute() != 0 || utc.second() != 0 || utc.nanosecond() != 0 {
        return Err(format!(
            "timestamp '{s}' is not on an hour boundary; input must be hourly"
        ));
    }
    Ok(utc.timestamp() / 3600)
}

/// Shortest exact decimal form of a float (round-trips bit-exactly).
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "NA".into())
}

fn parse_opt_f64(field: &str, what: &str) -> Result<Option<f64>, String> {
    let t = field.trim();
    if t.is_empty() || t == "NA" {
        return Ok(None);
    }
    t.parse::<f64>()
        .map(Some)
        .map_err(|e| format!("{what} '{t}': {e}"))
}

fn parse_f64(field: &str, what: &str) -> Result<f64, String> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| format!("{what} '{}': {e}", field.trim()))
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>, IoError> {
    let file = std::fs::File::open(path).map_err(|e| IoError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn open_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, IoError> {
    let file = std::fs::File::create(path).map_err(|e| IoError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(csv::Writer::from_writer(file))
}

fn check_header(path: &Path, reader: &mut csv::Reader<std::fs::File>, want: &[&str]) -> Result<(), IoError> {
    let headers = reader.headers().map_err(|e| IoError::Csv {
        path: path.display().to_string(),
        source: e,
    })?;
    let got: Vec<&str> = headers.iter().collect();
    if got != want {
        return Err(IoError::format(
            path,
            1,
            format!("expected header {}, got {}", want.join(","), got.join(",")),
        ));
    }
    Ok(())
}

const SITES_HEADER: [&str; 7] = [
    "site_id",
    "name",
    "latitude",
    "longitude",
    "dist_to_motorway_m",
    "elevation_m",
    "road_length_1km_m",
];

pub fn read_sites(path: &Path) -> Result<Vec<SiteRecord>, IoError> {
    let mut reader = open_reader(path)?;
    check_header(path, &mut reader, &SITES_HEADER)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| IoError::Csv {
            path: path.display().to_string(),
            source: e,
        })?;
        if record.len() != SITES_HEADER.len() {
            return Err(IoError::format(
                path,
                line,
                format!("expected {} fields, got {}", SITES_HEADER.len(), record.len()),
            ));
        }
        let f = |idx: usize, what: &str| {
            parse_f64(&record[idx], what).map_err(|r| IoError::format(path, line, r))
        };
        out.push(SiteRecord {
            site_id: record[0].to_string(),
            name: record[1].to_string(),
            latitude: f(2, "latitude")?,
            longitude: f(3, "longitude")?,
            features: LandUseFeatures {
                dist_to_motorway_m: f(4, "dist_to_motorway_m")?,
                elevation_m: f(5, "elevation_m")?,
                road_length_1km_m: f(6, "road_length_1km_m")?,
            },
        });
    }
    Ok(out)
}

pub fn write_sites(path: &Path, sites: &[SiteRecord]) -> Result<(), IoError> {
    let mut w = open_writer(path)?;
    let werr = |e: csv::Error| IoError::Csv {
        path: path.display().to_string(),
        source: e,
    };
    w.write_record(SITES_HEADER).map_err(werr)?;
    for s in sites {
        w.write_record([
            s.site_id.as_str(),
            s.name.as_str(),
            &fmt_f64(s.latitude),
            &fmt_f64(s.longitude),
            &fmt_f64(s.features.dist_to_motorway_m),
            &fmt_f64(s.features.elevation_m),
            &fmt_f64(s.features.road_length_1km_m),
        ])
        .map_err(werr)?;
    }
    w.flush().map_err(|e| IoError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

const OBS_HEADER: [&str; 5] = [
    "timestamp_utc",
    "site_id",
    "no2_ppb",
    "wind_speed_ms",
    "wind_dir_deg",
];

/// What ingestion did, for transparency about gap handling.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IngestReport {
    pub rows: usize,
    pub sites: usize,
    pub start_hour: i64,
    pub end_hour: i64,
    /// Hours inside the common epoch for which no row existed, summed
    /// over sites; they become explicit missing values.
    pub gap_hours: usize,
}

/// Read long-format hourly observations into one gap-free series per
/// site, aligned on the common epoch spanned by the file.
pub fn read_observations(path: &Path) -> Result<(Vec<HourlySeries>, IngestReport), IoError> {
    let mut reader = open_reader(path)?;
    check_header(path, &mut reader, &OBS_HEADER)?;
    let mut per_site: BTreeMap<String, BTreeMap<i64, Obs>> = BTreeMap::new();
    let mut rows = 0usize;
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| IoError::Csv {
            path: path.display().to_string(),
            source: e,
        })?;
        if record.len() != OBS_HEADER.len() {
            return Err(IoError::format(
                path,
                line,
                format!("expected {} fields, got {}", OBS_HEADER.len(), record.len()),
            ));
        }
        let hour = iso_to_hour(&record[0]).map_err(|r| IoError::format(path, line, r))?;
        let site_id = record[1].to_string();
        if site_id.is_empty() {
            return Err(IoError::format(path, line, "empty site_id"));
        }
        let obs = Obs {
            no2: parse_opt_f64(&record[2], "no2_ppb")
                .map_err(|r| IoError::format(path, line, r))?,
            wind_speed: parse_opt_f64(&record[3], "wind_speed_ms")
                .map_err(|r| IoError::format(path, line, r))?,
            wind_dir: parse_opt_f64(&record[4], "wind_dir_deg")
                .map_err(|r| IoError::format(path, line, r))?,
        };
        if per_site.entry(site_id.clone()).or_default().insert(hour, obs).is_some() {
            return Err(IoError::format(
                path,
                line,
                format!("duplicate row for site {} at {}", site_id, &record[0]),
            ));
        }
        rows += 1;
    }
    if per_site.is_empty() {
        return Err(IoError::format(path, 1, "no observation rows"));
    }

    let start_hour = per_site
        .values()
        .filter_map(|m| m.keys().next())
        .min()
        .copied()
        .unwrap();
    let end_hour = per_site
        .values()
        .filter_map(|m| m.keys().next_back())
        .max()
        .copied()
        .unwrap();
    let n = (end_hour - start_hour + 1) as usize;

    let mut gap_hours = 0usize;
    let series = per_site
        .into_iter()
        .map(|(site_id, mut hours)| {
            let obs: Vec<Obs> = (0..n)
                .map(|i| match hours.remove(&(start_hour + i as i64)) {
                    Some(o) => o,
                    None => {
                        gap_hours += 1;
                        Obs::default()
                    }
                })
                .collect();
            HourlySeries::new(site_id, start_hour, obs)
        })
        .collect::<Vec<_>>();

    let report = IngestReport {
        rows,
        sites: series.len(),
        start_hour,
        end_hour,
        gap_hours,
    };
    Ok((series, report))
}

/// Write long-format observations, sites in id order, hours ascending.
/// Hours where all three fields are missing are still written (as NA
/// rows) so the epoch is explicit in the file.
pub fn write_observations(path: &Path, series: &[&HourlySeries]) -> Result<(), IoError> {
    let mut w = open_writer(path)?;
    let werr = |e: csv::Error| IoError::Csv {
        path: path.display().to_string(),
        source: e,
    };
    w.write_record(OBS_HEADER).map_err(werr)?;
    let mut sorted: Vec<&&HourlySeries> = series.iter().collect();
    sorted.sort_by(|a, b| a.site_id.cmp(&b.site_id));
    for s in sorted {
        for (i, obs) in s.obs.iter().enumerate() {
            w.write_record([
                hour_to_iso(s.hour_at(i)).as_str(),
                s.site_id.as_str(),
                &fmt_opt(obs.no2),
                &fmt_opt(obs.wind_speed),
                &fmt_opt(obs.wind_dir),
            ])
            .map_err(werr)?;
        }
    }
    w.flush().map_err(|e| IoError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

const ASSIGN_HEADER: [&str; 4] = ["site_id", "proxy_id", "method", "score"];

pub fn write_assignments(path: &Path, assignments: &[ProxyAssignment]) -> Result<(), IoError> {
    let mut w = open_writer(path)?;
    let werr = |e: csv::Error| IoError::Csv {
        path: path.display().to_string(),
        source: e,
    };
    w.write_record(ASSIGN_HEADER).map_err(werr)?;
    for a in assignments {
        w.write_record([
            a.site_id.as_str(),
            a.proxy_id.as_str(),
            a.method.as_str(),
            &fmt_f64(a.score),
        ])
        .map_err(werr)?;
    }
    w.flush().map_err(|e| IoError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn read_assignments(path: &Path) -> Result<Vec<ProxyAssignment>, IoError> {
    let mut reader = open_reader(path)?;
    check_header(path, &mut reader, &ASSIGN_HEADER)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| IoError::Csv {
            path: path.display().to_string(),
            source: e,
        })?;
        if record.len() != ASSIGN_HEADER.len() {
            return Err(IoError::format(path, line, "wrong field count"));
        }
        let method = SelectionMethod::parse(&record[2]).ok_or_else(|| {
            IoError::format(path, line, format!("unknown method '{}'", &record[2]))
        })?;
        out.push(ProxyAssignment {
            site_id: record[0].to_string(),
            proxy_id: record[1].to_string(),
            method,
            score: parse_f64(&record[3], "score").map_err(|r| IoError::format(path, line, r))?,
        });
    }
    Ok(out)
}

/// Write a framework trail: one row per evaluated hour with statistics,
/// alarms (0/1), failing-test count and correction activity.
pub fn write_trail(path: &Path, state: &FrameworkState) -> Result<(), IoError> {
    let mut w = open_writer(path)?;
    let werr = |e: csv::Error| IoError::Csv {
        path: path.display().to_string(),
        source: e,
    };
    w.write_record([
        "timestamp_utc",
        "site_id",
        "proxy_id",
        "completeness",
        "ks_p",
        "slope",
        "intercept_ppb",
        "ks_alarm",
        "slope_alarm",
        "intercept_alarm",
        "n_failing",
        "correction_active",
    ])
    .map_err(werr)?;
    for (i, tv) in state.trail.iter().enumerate() {
        let b = |v: bool| if v { "1" } else { "0" };
        w.write_record([
            hour_to_iso(tv.at).as_str(),
            state.site_id.as_str(),
            state.proxy_id.as_str(),
            &fmt_f64(tv.completeness),
            &fmt_opt(tv.ks_p),
            &fmt_opt(tv.slope),
            &fmt_opt(tv.intercept),
            b(tv.alarms.ks),
            b(tv.alarms.slope),
            b(tv.alarms.intercept),
            &state.failing[i].to_string(),
            b(state.correction_active[i]),
        ])
        .map_err(werr)?;
    }
    w.flush().map_err(|e| IoError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Write the corrected series with the applied parameters. Outside
/// active spans `a0`/`a1` are NA and corrected equals raw.
pub fn write_corrected(
    path: &Path,
    raw: &HourlySeries,
    result: &CorrectionResult,
) -> Result<(), IoError> {
    let mut w = open_writer(path)?;
    let werr = |e: csv::Error| IoError::Csv {
        path: path.display().to_string(),
        source: e,
    };
    let params: BTreeMap<i64, (f64, f64)> = result
        .parameter_trail
        .iter()
        .map(|p| (p.at, (p.a0, p.a1)))
        .collect();
    w.write_record([
        "timestamp_utc",
        "site_id",
        "raw_ppb",
        "corrected_ppb",
        "a0_ppb",
        "a1",
        "correction_active",
    ])
    .map_err(werr)?;
    for (i, obs) in result.corrected.obs.iter().enumerate() {
        let hour = result.corrected.hour_at(i);
        let fitted = params.get(&hour);
        w.write_record([
            hour_to_iso(hour).as_str(),
            result.site_id.as_str(),
            &fmt_opt(raw.obs[i].no2),
            &fmt_opt(obs.no2),
            &fmt_opt(fitted.map(|p| p.0)),
            &fmt_opt(fitted.map(|p| p.1)),
            if fitted.is_some() { "1" } else { "0" },
        ])
        .map_err(werr)?;
    }
    w.flush().map_err(|e| IoError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Write a polar alarm grid, one row per occupied cell, sector-major.
pub fn write_polar_grid(path: &Path, grid: &PolarBinGrid) -> Result<(), IoError> {
    let mut w = open_writer(path)?;
    let werr = |e: csv::Error| IoError::Csv {
        path: path.display().to_string(),
        source: e,
    };
    w.write_record([
        "dir_center_deg",
        "speed_bin_low_ms",
        "n_hours",
        "mean_alarm_sum",
    ])
    .map_err(werr)?;
    for (&(sector, speed_bin), cell) in &grid.cells {
        w.write_record([
            fmt_f64(grid.dir_center_deg(sector)).as_str(),
            &fmt_f64(grid.speed_bin_low(speed_bin)),
            &cell.n_hours.to_string(),
            &fmt_f64(cell.mean_alarm_sum()),
        ])
        .map_err(werr)?;
    }
    w.flush().map_err(|e| IoError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hour_iso_round_trip() {
        for hour in [0i64, 473_354, -5, 1_000_000] {
            assert_eq!(iso_to_hour(&hour_to_iso(hour)).unwrap(), hour);
        }
        assert_eq!(hour_to_iso(473_354), "2024-01-01T02:00:00Z");
    }

    #[test]
    fn sub_hourly_timestamp_rejected() {
        assert!(iso_to_hour("2024-01-01T02:30:00Z").is_err());
        assert!(iso_to_hour("2024-01-01T02:00:30Z").is_err());
        // Offset timestamps on an hour boundary in UTC are fine.
        assert_eq!(
            iso_to_hour("2024-01-01T02:00:00+01:00").unwrap(),
            iso_to_hour("2024-01-01T01:00:00Z").unwrap()
        );
    }

    #[test]
    fn observations_round_trip_bit_exact() {
        let a = HourlySeries::new(
            "A",
            100,
            vec![
                Obs {
                    no2: Some(12.340000000000001),
                    wind_speed: Some(3.7),
                    wind_dir: Some(271.4),
                },
                Obs::default(),
                Obs {
                    no2: Some(0.1 + 0.2),
                    wind_speed: None,
                    wind_dir: Some(0.0),
                },
            ],
        );
        let b = HourlySeries::from_values("B", 100, &[Some(5.0), Some(6.0), None]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.csv");
        write_observations(&path, &[&a, &b]).unwrap();
        let (series, report) = read_observations(&path).unwrap();
        assert_eq!(series, vec![a, b]);
        assert_eq!(report.rows, 6);
        assert_eq!(report.sites, 2);
        assert_eq!((report.start_hour, report.end_hour), (100, 102));
        assert_eq!(report.gap_hours, 0);
    }

    #[test]
    fn ragged_epochs_are_aligned_with_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.csv");
        std::fs::write(
            &path,
            "timestamp_utc,site_id,no2_ppb,wind_speed_ms,wind_dir_deg\n\
             1970-01-01T00:00:00Z,A,1.5,NA,NA\n\
             1970-01-01T02:00:00Z,A,2.5,NA,NA\n\
             1970-01-01T01:00:00Z,B,3.5,NA,NA\n",
        )
        .unwrap();
        let (series, report) = read_observations(&path).unwrap();
        assert_eq!(series.len(), 2);
        let a = &series[0];
        assert_eq!(a.no2_values(), vec![Some(1.5), None, Some(2.5)]);
        let b = &series[1];
        assert_eq!(b.no2_values(), vec![None, Some(3.5), None]);
        // A's hour 1 plus B's hours 0 and 2.
        assert_eq!(report.gap_hours, 3);
    }

    #[test]
    fn bad_rows_name_line_and_reason() {
        let dir = tempfile::tempdir().unwrap();
        let header = "timestamp_utc,site_id,no2_ppb,wind_speed_ms,wind_dir_deg\n";
        for (body, needle) in [
            ("1970-01-01T00:30:00Z,A,1,NA,NA\n", "hour boundary"),
            ("1970-01-01T00:00:00Z,A,abc,NA,NA\n", "no2_ppb"),
            (
                "1970-01-01T00:00:00Z,A,1,NA,NA\n1970-01-01T00:00:00Z,A,2,NA,NA\n",
                "duplicate",
            ),
        ] {
            let path = dir.path().join("bad.csv");
            std::fs::write(&path, format!("{header}{body}")).unwrap();
            let err = read_observations(&path).unwrap_err().to_string();
            assert!(err.contains(needle), "{err} should mention {needle}");
            assert!(err.contains("line"), "{err} should carry a line number");
        }
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.csv");
        std::fs::write(&path, "time,site,no2\n").unwrap();
        assert!(read_observations(&path).is_err());
    }

    #[test]
    fn sites_round_trip() {
        let sites = vec![SiteRecord {
            site_id: "RIVR".into(),
            name: "Rubidoux".into(),
            latitude: 33.9996,
            longitude: -117.416,
            features: LandUseFeatures {
                dist_to_motorway_m: 685.0,
                elevation_m: 248.0,
                road_length_1km_m: 6708.0,
            },
        }];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sites.csv");
        write_sites(&path, &sites).unwrap();
        assert_eq!(read_sites(&path).unwrap(), sites);
    }

    #[test]
    fn assignments_round_trip() {
        let assignments = vec![ProxyAssignment {
            site_id: "RIVR".into(),
            proxy_id: "CELA".into(),
            method: SelectionMethod::KnnLanduse,
            score: 0.12345,
        }];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("assign.csv");
        write_assignments(&path, &assignments).unwrap();
        assert_eq!(read_assignments(&path).unwrap(), assignments);
    }
}
