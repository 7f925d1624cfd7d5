//! Proxy selection: land-use kNN, geographic proximity, and D_KL ranking,
//! plus utilities to compare assignment tables.
//!
//! All three methods are deterministic: candidate order is canonical
//! (site_id) and every tie breaks to the lexicographically smaller id.
//! No site is ever its own proxy.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{NetworkDataset, ProxyAssignment, SelectionMethod, SiteRecord};
use crate::stats::{kl_divergence, Histogram};

/// Minimum present values per site for the D_KL ranking.
pub const MIN_KL_SAMPLES: usize = 100;

/// Mean Earth radius, km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Error, PartialEq)]
pub enum ProxyError {
    #[error("need at least 2 sites, got {0}")]
    TooFewSites(usize),
    #[error("assignment tables cover different site sets")]
    SiteSetMismatch,
    #[error("site {site}: {got} present values, need {need}")]
    InsufficientData {
        site: String,
        got: usize,
        need: usize,
    },
}

/// How raw land-use features are brought onto a comparable range.
///
/// `MeanRatio` (each feature divided by its network mean) reproduces the
/// published assignment table better than `MinMax` on this network's
/// metadata and is the default for kNN selection; `MinMax` maps each
/// feature's observed range onto [0, 1] and is fully affine-invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScalingMode {
    MinMax,
    #[default]
    MeanRatio,
}

impl ScalingMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "minmax" | "min_max" => Some(ScalingMode::MinMax),
            "mean" | "mean_ratio" => Some(ScalingMode::MeanRatio),
            _ => None,
        }
    }
}

/// Per-feature scaling statistics over a site set.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaler {
    pub mode: ScalingMode,
    /// Per feature: (min, max, mean) over the network's sites.
    pub per_feature: [(f64, f64, f64); 3],
}

impl FeatureScaler {
    pub fn fit(sites: &[&SiteRecord], mode: ScalingMode) -> Result<Self, ProxyError> {
        if sites.len() < 2 {
            return Err(ProxyError::TooFewSites(sites.len()));
        }
        let mut per_feature = [(f64::INFINITY, f64::NEG_INFINITY, 0.0); 3];
        for site in sites {
            for (i, v) in site.features.as_array().into_iter().enumerate() {
                per_feature[i].0 = per_feature[i].0.min(v);
                per_feature[i].1 = per_feature[i].1.max(v);
                per_feature[i].2 += v;
            }
        }
        for stat in &mut per_feature {
            stat.2 /= sites.len() as f64;
        }
        Ok(Self { mode, per_feature })
    }

    /// Scale one feature vector. Degenerate features (constant range,
    /// zero mean) map to 0 so they cannot influence distances.
    pub fn scale(&self, features: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..3 {
            let (min, max, mean) = self.per_feature[i];
            out[i] = match self.mode {
                ScalingMode::MinMax => {
                    if max > min {
                        (features[i] - min) / (max - min)
                    } else {
                        0.0
                    }
                }
                ScalingMode::MeanRatio => {
                    if mean != 0.0 {
                        features[i] / mean
                    } else {
                        0.0
                    }
                }
            };
        }
        out
    }
}

/// Fit a scaler and produce every site's scaled feature vector.
pub fn scale_features(
    sites: &[&SiteRecord],
    mode: ScalingMode,
) -> Result<(FeatureScaler, BTreeMap<String, [f64; 3]>), ProxyError> {
    let scaler = FeatureScaler::fit(sites, mode)?;
    let scaled = sites
        .iter()
        .map(|s| (s.site_id.clone(), scaler.scale(s.features.as_array())))
        .collect();
    Ok((scaler, scaled))
}

fn sorted_sites<'a>(dataset_sites: &[&'a SiteRecord]) -> Vec<&'a SiteRecord> {
    let mut v = dataset_sites.to_vec();
    v.sort_by(|a, b| a.site_id.cmp(&b.site_id));
    v
}

/// Generic nearest-candidate sweep: for each site pick the other site
/// minimizing `dist`, ties to the lexicographically smaller id.
fn assign_by_min<D: Fn(&SiteRecord, &SiteRecord) -> f64>(
    sites: &[&SiteRecord],
    method: SelectionMethod,
    dist: D,
) -> Vec<ProxyAssignment> {
    let sites = sorted_sites(sites);
    let mut out = Vec::with_capacity(sites.len());
    for site in &sites {
        let mut best: Option<(&SiteRecord, f64)> = None;
        for cand in &sites {
            if cand.site_id == site.site_id {
                continue;
            }
            let d = dist(site, cand);
            // Candidates arrive in id order, so strict < keeps the
            // lexicographically smaller id on ties.
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((cand, d));
            }
        }
        let (proxy, score) = best.expect("at least two sites");
        out.push(ProxyAssignment {
            site_id: site.site_id.clone(),
            proxy_id: proxy.site_id.clone(),
            method,
            score,
        });
    }
    out
}

/// Land-use kNN selection with an explicit scaling mode: nearest site in
/// scaled feature space (Euclidean), excluding the site itself.
pub fn select_knn_with(
    sites: &[&SiteRecord],
    mode: ScalingMode,
) -> Result<Vec<ProxyAssignment>, ProxyError> {
    let (_, scaled) = scale_features(sites, mode)?;
    Ok(assign_by_min(sites, SelectionMethod::KnnLanduse, |a, b| {
        let fa = scaled[&a.site_id];
        let fb = scaled[&b.site_id];
        fa.iter()
            .zip(fb.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }))
}

/// Land-use kNN selection with the default scaling mode.
pub fn select_knn(sites: &[&SiteRecord]) -> Result<Vec<ProxyAssignment>, ProxyError> {
    select_knn_with(sites, ScalingMode::default())
}

/// Great-circle distance between two coordinates, km.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (phi1, phi2) = (lat1.to_radians(), lat2.to_radians());
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().asin()
}

/// Closest-proximity selection: minimum haversine distance, excluding self.
pub fn select_nearest_geo(sites: &[&SiteRecord]) -> Result<Vec<ProxyAssignment>, ProxyError> {
    if sites.len() < 2 {
        return Err(ProxyError::TooFewSites(sites.len()));
    }
    Ok(assign_by_min(sites, SelectionMethod::NearestGeo, |a, b| {
        haversine_km(a.latitude, a.longitude, b.latitude, b.longitude)
    }))
}

/// D_KL ranking over the full evaluation period: for each site j the
/// proxy is argmin over k != j of D(hist_j || hist_k). Sites with too
/// little data get a per-site error; the others are still assigned.
pub fn select_min_kl(
    data: &NetworkDataset,
    bin_width: f64,
    origin: f64,
) -> Result<(Vec<ProxyAssignment>, Vec<ProxyError>), ProxyError> {
    let ids = data.site_ids();
    if ids.len() < 2 {
        return Err(ProxyError::TooFewSites(ids.len()));
    }
    let mut errors = Vec::new();
    let mut hists: BTreeMap<String, Histogram<f64>> = BTreeMap::new();
    for id in &ids {
        let values = data
            .series(id)
            .map(|s| s.present_no2())
            .unwrap_or_default();
        if values.len() < MIN_KL_SAMPLES {
            errors.push(ProxyError::InsufficientData {
                site: id.clone(),
                got: values.len(),
                need: MIN_KL_SAMPLES,
            });
            continue;
        }
        hists.insert(
            id.clone(),
            Histogram::build(&values, bin_width, origin).expect("non-empty sample"),
        );
    }

    let mut out = Vec::new();
    for (site_id, site_hist) in &hists {
        let mut best: Option<(&String, f64)> = None;
        for (cand_id, cand_hist) in &hists {
            if cand_id == site_id {
                continue;
            }
            let d = kl_divergence(site_hist, cand_hist).expect("shared binning grid");
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((cand_id, d));
            }
        }
        if let Some((proxy_id, score)) = best {
            out.push(ProxyAssignment {
                site_id: site_id.clone(),
                proxy_id: proxy_id.clone(),
                method: SelectionMethod::MinKl,
                score,
            });
        }
    }
    Ok((out, errors))
}

/// Per-site agreement between two assignment tables over the same sites.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    /// site_id -> (proxy in a, proxy in b, match).
    pub per_site: BTreeMap<String, (String, String, bool)>,
    pub n_match: usize,
    pub n_sites: usize,
}

impl AgreementReport {
    pub fn fraction(&self) -> f64 {
        if self.n_sites == 0 {
            1.0
        } else {
            self.n_match as f64 / self.n_sites as f64
        }
    }
}

pub fn compare_assignments(
    a: &[ProxyAssignment],
    b: &[ProxyAssignment],
) -> Result<AgreementReport, ProxyError> {
    let map_a: BTreeMap<&str, &str> = a
        .iter()
        .map(|x| (x.site_id.as_str(), x.proxy_id.as_str()))
        .collect();
    let map_b: BTreeMap<&str, &str> = b
        .iter()
        .map(|x| (x.site_id.as_str(), x.proxy_id.as_str()))
        .collect();
    if map_a.len() != map_b.len() || !map_a.keys().eq(map_b.keys()) {
        return Err(ProxyError::SiteSetMismatch);
    }
    let mut per_site = BTreeMap::new();
    let mut n_match = 0;
    for (site, pa) in &map_a {
        let pb = map_b[site];
        let is_match = *pa == pb;
        if is_match {
            n_match += 1;
        }
        per_site.insert(site.to_string(), (pa.to_string(), pb.to_string(), is_match));
    }
    Ok(AgreementReport {
        n_match,
        n_sites: map_a.len(),
        per_site,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HourlySeries, LandUseFeatures, NegativePolicy};

    fn site(id: &str, dist: f64, elev: f64, road: f64) -> SiteRecord {
        SiteRecord {
            site_id: id.into(),
            name: id.into(),
            latitude: 34.0,
            longitude: -118.0,
            features: LandUseFeatures {
                dist_to_motorway_m: dist,
                elevation_m: elev,
                road_length_1km_m: road,
            },
        }
    }

    #[test]
    fn minmax_endpoints() {
        let a = site("A", 0.0, 10.0, 100.0);
        let b = site("B", 100.0, 20.0, 300.0);
        let (_, scaled) = scale_features(&[&a, &b], ScalingMode::MinMax).unwrap();
        assert_eq!(scaled["A"][0], 0.0);
        assert_eq!(scaled["B"][0], 1.0);
    }

    #[test]
    fn constant_feature_scales_to_zero() {
        let a = site("A", 0.0, 55.0, 100.0);
        let b = site("B", 100.0, 55.0, 300.0);
        let (_, scaled) = scale_features(&[&a, &b], ScalingMode::MinMax).unwrap();
        assert_eq!(scaled["A"][1], 0.0);
        assert_eq!(scaled["B"][1], 0.0);
    }

    #[test]
    fn scaling_needs_two_sites() {
        let a = site("A", 0.0, 10.0, 100.0);
        assert_eq!(
            scale_features(&[&a], ScalingMode::MinMax).unwrap_err(),
            ProxyError::TooFewSites(1)
        );
    }

    #[test]
    fn two_site_network_mutual_proxies() {
        let a = site("A", 0.0, 10.0, 100.0);
        let b = site("B", 100.0, 20.0, 300.0);
        for assignments in [
            select_knn(&[&a, &b]).unwrap(),
            select_nearest_geo(&[&a, &b]).unwrap(),
        ] {
            assert_eq!(assignments[0].proxy_id, "B");
            assert_eq!(assignments[1].proxy_id, "A");
        }
    }

    #[test]
    fn knn_tie_breaks_lexicographically() {
        // B and C identical; A must pick B over C, deterministically.
        let a = site("A", 0.0, 0.0, 0.0);
        let b = site("B", 50.0, 5.0, 50.0);
        let c = site("C", 50.0, 5.0, 50.0);
        for _ in 0..5 {
            let got = select_knn(&[&c, &a, &b]).unwrap();
            assert_eq!(got[0].site_id, "A");
            assert_eq!(got[0].proxy_id, "B");
        }
    }

    #[test]
    fn no_site_is_its_own_proxy() {
        let sites = [
            site("A", 10.0, 1.0, 10.0),
            site("B", 20.0, 2.0, 20.0),
            site("C", 30.0, 3.0, 30.0),
        ];
        let refs: Vec<&SiteRecord> = sites.iter().collect();
        for assignment in select_knn(&refs)
            .unwrap()
            .into_iter()
            .chain(select_nearest_geo(&refs).unwrap())
        {
            assert_ne!(assignment.site_id, assignment.proxy_id);
        }
    }

    #[test]
    fn one_degree_of_latitude() {
        let d = haversine_km(33.0, -118.0, 34.0, -118.0);
        assert!((d - 111.19).abs() < 0.1, "got {}", d);
    }

    #[test]
    fn haversine_symmetric() {
        let d1 = haversine_km(33.9, -118.2, 34.1, -117.3);
        let d2 = haversine_km(34.1, -117.3, 33.9, -118.2);
        assert!((d1 - d2).abs() < 1e-12);
    }

    fn kl_dataset() -> NetworkDataset {
        let mk = |id: &str, shift: f64| {
            let values: Vec<Option<f64>> = (0..300)
                .map(|i| Some(10.0 + shift + 5.0 * ((i as f64) * 0.7).sin().abs()))
                .collect();
            HourlySeries::from_values(id, 0, &values)
        };
        NetworkDataset::from_parts(
            vec![
                site("A", 10.0, 1.0, 10.0),
                site("B", 20.0, 2.0, 20.0),
                site("C", 30.0, 3.0, 30.0),
            ],
            vec![mk("A", 0.0), mk("B", 0.0), mk("C", 15.0)],
            NegativePolicy::Reject,
        )
        .unwrap()
    }

    #[test]
    fn min_kl_identical_series_mutual_zero() {
        let ds = kl_dataset();
        let (assignments, errors) = select_min_kl(&ds, 1.0, 0.0).unwrap();
        assert!(errors.is_empty());
        let a = assignments.iter().find(|x| x.site_id == "A").unwrap();
        assert_eq!(a.proxy_id, "B");
        assert!(a.score.abs() < 1e-9);
        let b = assignments.iter().find(|x| x.site_id == "B").unwrap();
        assert_eq!(b.proxy_id, "A");
    }

    #[test]
    fn min_kl_insufficient_data_is_per_site() {
        let ds = kl_dataset();
        // Rebuild with C mostly missing: only 50 present values.
        let mut values = vec![None; 300];
        for v in values.iter_mut().take(50) {
            *v = Some(20.0);
        }
        let c = HourlySeries::from_values("C", 0, &values);
        let ds = NetworkDataset::from_parts(
            ds.sites().cloned().collect(),
            ds.all_series()
                .filter(|s| s.site_id != "C")
                .cloned()
                .chain(std::iter::once(c))
                .collect(),
            NegativePolicy::Reject,
        )
        .unwrap();
        let (assignments, errors) = select_min_kl(&ds, 1.0, 0.0).unwrap();
        assert_eq!(errors.len(), 1);
        assert_eq!(assignments.len(), 2);
    }

    #[test]
    fn compare_identical_tables() {
        let ds = kl_dataset();
        let sites: Vec<&SiteRecord> = ds.sites().collect();
        let a = select_knn(&sites).unwrap();
        let report = compare_assignments(&a, &a).unwrap();
        assert_eq!(report.fraction(), 1.0);
    }

    #[test]
    fn compare_rejects_site_mismatch() {
        let ds = kl_dataset();
        let sites: Vec<&SiteRecord> = ds.sites().collect();
        let a = select_knn(&sites).unwrap();
        let b = a[..2].to_vec();
        assert_eq!(
            compare_assignments(&a, &b).unwrap_err(),
            ProxyError::SiteSetMismatch
        );
    }
}
