//! Domain types shared by the whole pipeline, with validation of raw inputs.
//!
//! All types are immutable after validation and safe to share read-only
//! across workers. Timestamps are UTC epoch hours (hours since the Unix
//! epoch); an [`HourlySeries`] is stored gap-free, with missing hours kept
//! as explicit `None` so that window-completeness accounting stays exact.

use std::collections::BTreeMap;

/// Land-use covariates used for proxy selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandUseFeatures {
    /// Distance to the nearest motorway/freeway, meters.
    pub dist_to_motorway_m: f64,
    /// Elevation above sea level, meters.
    pub elevation_m: f64,
    /// Freeway plus primary road length within 1 km, meters.
    pub road_length_1km_m: f64,
}

impl LandUseFeatures {
    pub fn as_array(&self) -> [f64; 3] {
        [
            self.dist_to_motorway_m,
            self.elevation_m,
            self.road_length_1km_m,
        ]
    }
}

/// One monitoring site: identity, coordinates, land-use features.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteRecord {
    pub site_id: String,
    pub name: String,
    /// Degrees WGS84, in [-90, 90].
    pub latitude: f64,
    /// Degrees WGS84, in [-180, 180].
    pub longitude: f64,
    pub features: LandUseFeatures,
}

/// One hour of observations at a site. `None` marks a missing value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Obs {
    /// NO2 concentration, ppb, finite and >= 0 when present.
    pub no2: Option<f64>,
    /// Wind speed, m/s, >= 0 when present.
    pub wind_speed: Option<f64>,
    /// Wind direction, degrees in [0, 360) when present.
    pub wind_dir: Option<f64>,
}

/// Timestamp-aligned hourly observations for one site.
///
/// Hour `i` of the series is epoch hour `start_hour + i`. The vector is
/// gap-free by construction, which is what makes rolling-window
/// completeness accounting trivial downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    pub site_id: String,
    /// UTC epoch hour of the first observation.
    pub start_hour: i64,
    pub obs: Vec<Obs>,
}

impl HourlySeries {
    pub fn new(site_id: impl Into<String>, start_hour: i64, obs: Vec<Obs>) -> Self {
        Self {
            site_id: site_id.into(),
            start_hour,
            obs,
        }
    }

    /// Build a series carrying concentrations only.
    pub fn from_values(site_id: impl Into<String>, start_hour: i64, values: &[Option<f64>]) -> Self {
        Self::new(
            site_id,
            start_hour,
            values
                .iter()
                .map(|v| Obs {
                    no2: *v,
                    ..Obs::default()
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    /// Epoch hour of observation index `i`.
    pub fn hour_at(&self, i: usize) -> i64 {
        self.start_hour + i as i64
    }

    /// Epoch hour just past the end of the series.
    pub fn end_hour(&self) -> i64 {
        self.start_hour + self.obs.len() as i64
    }

    /// All present concentration values, in time order.
    pub fn present_no2(&self) -> Vec<f64> {
        self.obs.iter().filter_map(|o| o.no2).collect()
    }

    /// Concentration column as options, in time order.
    pub fn no2_values(&self) -> Vec<Option<f64>> {
        self.obs.iter().map(|o| o.no2).collect()
    }

    pub fn has_any_wind(&self) -> bool {
        self.obs
            .iter()
            .any(|o| o.wind_speed.is_some() && o.wind_dir.is_some())
    }
}

/// Proxy-selection method identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SelectionMethod {
    KnnLanduse,
    NearestGeo,
    MinKl,
}

impl SelectionMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SelectionMethod::KnnLanduse => "knn_landuse",
            SelectionMethod::NearestGeo => "nearest_geo",
            SelectionMethod::MinKl => "min_kl",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "knn_landuse" | "knn" => Some(SelectionMethod::KnnLanduse),
            "nearest_geo" | "nearest" => Some(SelectionMethod::NearestGeo),
            "min_kl" => Some(SelectionMethod::MinKl),
            _ => None,
        }
    }
}

impl std::fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Mapping site -> proxy site with the method and score that produced it.
///
/// The score is method-specific: scaled-feature distance for kNN,
/// kilometers for geographic proximity, nats for the D_KL ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyAssignment {
    pub site_id: String,
    pub proxy_id: String,
    pub method: SelectionMethod,
    pub score: f64,
}

/// A single validation failure, with enough context to locate it.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub site_id: Option<String>,
    pub field: String,
    pub reason: String,
    /// Epoch hour for per-observation violations.
    pub at_hour: Option<i64>,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (&self.site_id, self.at_hour) {
            (Some(s), Some(h)) => write!(f, "{}: {} at hour {}: {}", s, self.field, h, self.reason),
            (Some(s), None) => write!(f, "{}: {}: {}", s, self.field, self.reason),
            _ => write!(f, "{}: {}", self.field, self.reason),
        }
    }
}

/// How to treat negative raw concentrations during validation.
///
/// Regulatory archives occasionally contain small negative calibrated
/// values; the default rejects them to keep invariants strict, the clamp
/// policy maps them to 0 instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NegativePolicy {
    #[default]
    Reject,
    ClampZero,
}

/// A validated set of sites plus their series over a common epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkDataset {
    sites: BTreeMap<String, SiteRecord>,
    series: BTreeMap<String, HourlySeries>,
}

impl NetworkDataset {
    /// Validate raw parts into a dataset. Returns the complete list of
    /// violations when anything fails; the empty input is vacuously valid.
    pub fn from_parts(
        sites: Vec<SiteRecord>,
        series: Vec<HourlySeries>,
        policy: NegativePolicy,
    ) -> Result<Self, Vec<Violation>> {
        let mut violations = Vec::new();
        let mut site_map: BTreeMap<String, SiteRecord> = BTreeMap::new();

        for site in sites {
            if site.site_id.is_empty() {
                violations.push(Violation {
                    site_id: None,
                    field: "site_id".into(),
                    reason: "empty site_id".into(),
                    at_hour: None,
                });
                continue;
            }
            if site_map.contains_key(&site.site_id) {
                violations.push(Violation {
                    site_id: Some(site.site_id.clone()),
                    field: "site_id".into(),
                    reason: "duplicate site_id".into(),
                    at_hour: None,
                });
                continue;
            }
            if !(-90.0..=90.0).contains(&site.latitude) || !site.latitude.is_finite() {
                violations.push(Violation {
                    site_id: Some(site.site_id.clone()),
                    field: "latitude".into(),
                    reason: format!("out of range: {}", site.latitude),
                    at_hour: None,
                });
            }
            if !(-180.0..=180.0).contains(&site.longitude) || !site.longitude.is_finite() {
                violations.push(Violation {
                    site_id: Some(site.site_id.clone()),
                    field: "longitude".into(),
                    reason: format!("out of range: {}", site.longitude),
                    at_hour: None,
                });
            }
            let f = site.features;
            for (name, v, nonneg) in [
                ("dist_to_motorway_m", f.dist_to_motorway_m, true),
                ("elevation_m", f.elevation_m, false),
                ("road_length_1km_m", f.road_length_1km_m, true),
            ] {
                if !v.is_finite() {
                    violations.push(Violation {
                        site_id: Some(site.site_id.clone()),
                        field: name.into(),
                        reason: "not finite".into(),
                        at_hour: None,
                    });
                } else if nonneg && v < 0.0 {
                    violations.push(Violation {
                        site_id: Some(site.site_id.clone()),
                        field: name.into(),
                        reason: format!("negative: {}", v),
                        at_hour: None,
                    });
                }
            }
            site_map.insert(site.site_id.clone(), site);
        }

        let mut series_map: BTreeMap<String, HourlySeries> = BTreeMap::new();
        let mut epoch_bounds: Option<(i64, i64)> = None;
        for mut s in series {
            if !site_map.contains_key(&s.site_id) {
                violations.push(Violation {
                    site_id: Some(s.site_id.clone()),
                    field: "series".into(),
                    reason: "orphan series: no matching SiteRecord".into(),
                    at_hour: None,
                });
                continue;
            }
            if series_map.contains_key(&s.site_id) {
                violations.push(Violation {
                    site_id: Some(s.site_id.clone()),
                    field: "series".into(),
                    reason: "duplicate series for site".into(),
                    at_hour: None,
                });
                continue;
            }
            for i in 0..s.obs.len() {
                let hour = s.hour_at(i);
                if let Some(v) = s.obs[i].no2 {
                    if !v.is_finite() {
                        violations.push(Violation {
                            site_id: Some(s.site_id.clone()),
                            field: "no2_ppb".into(),
                            reason: "not finite".into(),
                            at_hour: Some(hour),
                        });
                    } else if v < 0.0 {
                        match policy {
                            NegativePolicy::Reject => violations.push(Violation {
                                site_id: Some(s.site_id.clone()),
                                field: "no2_ppb".into(),
                                reason: format!("negative concentration: {}", v),
                                at_hour: Some(hour),
                            }),
                            NegativePolicy::ClampZero => s.obs[i].no2 = Some(0.0),
                        }
                    }
                }
                if let Some(ws) = s.obs[i].wind_speed {
                    if !ws.is_finite() || ws < 0.0 {
                        violations.push(Violation {
                            site_id: Some(s.site_id.clone()),
                            field: "wind_speed_ms".into(),
                            reason: format!("invalid wind speed: {}", ws),
                            at_hour: Some(hour),
                        });
                    }
                }
                if let Some(wd) = s.obs[i].wind_dir {
                    if !wd.is_finite() || !(0.0..360.0).contains(&wd) {
                        violations.push(Violation {
                            site_id: Some(s.site_id.clone()),
                            field: "wind_dir_deg".into(),
                            reason: format!("direction outside [0, 360): {}", wd),
                            at_hour: Some(hour),
                        });
                    }
                }
            }
            let bounds = (s.start_hour, s.end_hour());
            match epoch_bounds {
                None => epoch_bounds = Some(bounds),
                Some(b) if b != bounds => violations.push(Violation {
                    site_id: Some(s.site_id.clone()),
                    field: "epoch".into(),
                    reason: format!(
                        "epoch bounds {:?} differ from the dataset's {:?}",
                        bounds, b
                    ),
                    at_hour: None,
                }),
                Some(_) => {}
            }
            series_map.insert(s.site_id.clone(), s);
        }

        if violations.is_empty() {
            Ok(Self {
                sites: site_map,
                series: series_map,
            })
        } else {
            Err(violations)
        }
    }

    /// Re-check a constructed dataset. Always empty for datasets built by
    /// [`NetworkDataset::from_parts`]; exists so validation is observably
    /// idempotent.
    pub fn violations(&self) -> Vec<Violation> {
        match Self::from_parts(
            self.sites.values().cloned().collect(),
            self.series.values().cloned().collect(),
            NegativePolicy::Reject,
        ) {
            Ok(_) => Vec::new(),
            Err(v) => v,
        }
    }

    pub fn sites(&self) -> impl Iterator<Item = &SiteRecord> {
        self.sites.values()
    }

    pub fn site(&self, id: &str) -> Option<&SiteRecord> {
        self.sites.get(id)
    }

    pub fn site_ids(&self) -> Vec<String> {
        self.sites.keys().cloned().collect()
    }

    pub fn series(&self, id: &str) -> Option<&HourlySeries> {
        self.series.get(id)
    }

    pub fn all_series(&self) -> impl Iterator<Item = &HourlySeries> {
        self.series.values()
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn site(id: &str) -> SiteRecord {
        SiteRecord {
            site_id: id.into(),
            name: id.into(),
            latitude: 34.0,
            longitude: -118.0,
            features: LandUseFeatures {
                dist_to_motorway_m: 1000.0,
                elevation_m: 50.0,
                road_length_1km_m: 4000.0,
            },
        }
    }

    #[test]
    fn empty_dataset_is_vacuously_valid() {
        let ds = NetworkDataset::from_parts(vec![], vec![], NegativePolicy::Reject).unwrap();
        assert_eq!(ds.n_sites(), 0);
    }

    #[test]
    fn negative_concentration_names_site_and_hour() {
        let series =
            HourlySeries::from_values("A", 100, &[Some(5.0), Some(-3.0), Some(2.0)]);
        let err =
            NetworkDataset::from_parts(vec![site("A")], vec![series], NegativePolicy::Reject)
                .unwrap_err();
        assert_eq!(err.len(), 1);
        assert_eq!(err[0].site_id.as_deref(), Some("A"));
        assert_eq!(err[0].at_hour, Some(101));
        assert!(err[0].reason.contains("-3"));
    }

    #[test]
    fn clamp_policy_maps_negative_to_zero() {
        let series = HourlySeries::from_values("A", 0, &[Some(-0.4), Some(1.0)]);
        let ds =
            NetworkDataset::from_parts(vec![site("A")], vec![series], NegativePolicy::ClampZero)
                .unwrap();
        assert_eq!(ds.series("A").unwrap().obs[0].no2, Some(0.0));
    }

    #[test]
    fn duplicate_site_id_rejected() {
        let err = NetworkDataset::from_parts(
            vec![site("A"), site("A")],
            vec![],
            NegativePolicy::Reject,
        )
        .unwrap_err();
        assert!(err.iter().any(|v| v.reason.contains("duplicate")));
    }

    #[test]
    fn orphan_series_rejected() {
        let series = HourlySeries::from_values("B", 0, &[Some(1.0)]);
        let err = NetworkDataset::from_parts(vec![site("A")], vec![series], NegativePolicy::Reject)
            .unwrap_err();
        assert!(err.iter().any(|v| v.reason.contains("orphan")));
    }

    #[test]
    fn mismatched_epochs_rejected() {
        let a = HourlySeries::from_values("A", 0, &[Some(1.0), Some(2.0)]);
        let b = HourlySeries::from_values("B", 0, &[Some(1.0)]);
        let err = NetworkDataset::from_parts(
            vec![site("A"), site("B")],
            vec![a, b],
            NegativePolicy::Reject,
        )
        .unwrap_err();
        assert!(err.iter().any(|v| v.field == "epoch"));
    }

    #[test]
    fn validation_is_idempotent() {
        let series = HourlySeries::from_values("A", 0, &[Some(1.0), None, Some(2.0)]);
        let ds = NetworkDataset::from_parts(vec![site("A")], vec![series], NegativePolicy::Reject)
            .unwrap();
        assert!(ds.violations().is_empty());
    }
}
