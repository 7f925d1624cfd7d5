//! Numerical kernel: moments, two-sample KS test, histograms, KL divergence.
//!
//! Everything here is a pure function of its inputs and generic over the
//! scalar type through [`num_traits::Float`]; the pipeline instantiates it
//! at `f64` (see the crate-root aliases).

use num_traits::{Float, FromPrimitive};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("insufficient data: need at least {need} values, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("bin width must be > 0")]
    InvalidBinWidth,
    #[error("histograms have incompatible binning: {0}")]
    IncompatibleBinning(String),
}

/// Arithmetic mean and unbiased (n-1 denominator) sample variance.
pub fn mean_var<F: Float + FromPrimitive>(sample: &[F]) -> Result<(F, F), StatsError> {
    if sample.len() < 2 {
        return Err(StatsError::InsufficientData {
            need: 2,
            got: sample.len(),
        });
    }
    let n = F::from_usize(sample.len()).unwrap();
    let mean = sample.iter().fold(F::zero(), |a, &x| a + x) / n;
    let ss = sample
        .iter()
        .fold(F::zero(), |a, &x| a + (x - mean) * (x - mean));
    Ok((mean, ss / (n - F::one())))
}

/// Two-sample KS test outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult<F> {
    /// Supremum distance between the two empirical CDFs, in [0, 1].
    pub d_stat: F,
    /// Two-sided p-value, in [0, 1].
    pub p_value: F,
    pub n1: usize,
    pub n2: usize,
}

/// Pooled sample sizes up to this total use exact permutation enumeration
/// for the p-value; larger samples use the asymptotic Kolmogorov series.
pub const KS_EXACT_CUTOFF: usize = 20;

/// Two-sample Kolmogorov-Smirnov test.
///
/// The statistic is the supremum of |ECDF_a - ECDF_b| evaluated at every
/// pooled data point, with ties resolved by only evaluating after all
/// equal values have been consumed. The p-value is exact (full
/// permutation enumeration) when `n1 + n2 <= KS_EXACT_CUTOFF`, otherwise
/// the asymptotic Kolmogorov distribution with effective sample size
/// `n1*n2/(n1+n2)`.
pub fn ks_two_sample<F: Float + FromPrimitive>(a: &[F], b: &[F]) -> Result<KsResult<F>, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::InsufficientData {
            need: 1,
            got: a.len().min(b.len()),
        });
    }
    let n1 = a.len();
    let n2 = b.len();

    // Pool and sort once; each element keeps its sample label.
    let mut pooled: Vec<(F, bool)> = a
        .iter()
        .map(|&x| (x, true))
        .chain(b.iter().map(|&x| (x, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("non-finite sample value"));

    let d = ks_statistic_of_labeling(&pooled, n1, n2);

    let p = if n1 + n2 <= KS_EXACT_CUTOFF {
        exact_permutation_p(&pooled, n1, n2, d)
    } else {
        let ne = F::from_usize(n1).unwrap() * F::from_usize(n2).unwrap()
            / F::from_usize(n1 + n2).unwrap();
        kolmogorov_sf(ne.sqrt() * d)
    };

    Ok(KsResult {
        d_stat: d,
        p_value: clamp01(p),
        n1,
        n2,
    })
}

/// Supremum ECDF distance for one labeling of the sorted pooled sample.
fn ks_statistic_of_labeling<F: Float + FromPrimitive>(
    pooled: &[(F, bool)],
    n1: usize,
    n2: usize,
) -> F {
    let fn1 = F::from_usize(n1).unwrap();
    let fn2 = F::from_usize(n2).unwrap();
    let mut c1 = 0usize;
    let mut c2 = 0usize;
    let mut d = F::zero();
    let n = pooled.len();
    let mut i = 0;
    while i < n {
        let v = pooled[i].0;
        // Consume the whole tie group before evaluating.
        while i < n && pooled[i].0 == v {
            if pooled[i].1 {
                c1 += 1;
            } else {
                c2 += 1;
            }
            i += 1;
        }
        let diff = (F::from_usize(c1).unwrap() / fn1 - F::from_usize(c2).unwrap() / fn2).abs();
        if diff > d {
            d = diff;
        }
    }
    d
}

/// Exact two-sided p-value by enumerating every C(n1+n2, n1) relabeling
/// of the pooled sample (Gosper's hack over bitmasks of sorted positions).
fn exact_permutation_p<F: Float + FromPrimitive>(
    pooled: &[(F, bool)],
    n1: usize,
    n2: usize,
    d_obs: F,
) -> F {
    let n = n1 + n2;
    debug_assert!(n <= 30);
    let values: Vec<F> = pooled.iter().map(|p| p.0).collect();
    let threshold = d_obs - F::from_f64(1e-12).unwrap();
    let mut hits: u64 = 0;
    let mut total: u64 = 0;

    let mut mask: u64 = (1u64 << n1) - 1;
    let limit: u64 = 1u64 << n;
    while mask < limit {
        let mut labeled: Vec<(F, bool)> = Vec::with_capacity(n);
        for (i, &v) in values.iter().enumerate() {
            labeled.push((v, mask & (1 << i) != 0));
        }
        if ks_statistic_of_labeling(&labeled, n1, n2) >= threshold {
            hits += 1;
        }
        total += 1;
        // Next bit pattern with the same popcount.
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        if c == 0 {
            break;
        }
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    F::from_u64(hits).unwrap() / F::from_u64(total).unwrap()
}

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
fn kolmogorov_sf<F: Float + FromPrimitive>(lambda: F) -> F {
    if lambda <= F::from_f64(1e-3).unwrap() {
        return F::one();
    }
    let two = F::from_f64(2.0).unwrap();
    let tol = F::from_f64(1e-10).unwrap();
    let mut sum = F::zero();
    let mut sign = F::one();
    for k in 1..=100 {
        let kf = F::from_i32(k).unwrap();
        let term = (-two * kf * kf * lambda * lambda).exp();
        sum = sum + sign * term;
        if term < tol {
            break;
        }
        sign = -sign;
    }
    clamp01(two * sum)
}

fn clamp01<F: Float>(x: F) -> F {
    x.max(F::zero()).min(F::one())
}

/// Fixed-width histogram whose bins cover the sample's [min, max].
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram<F> {
    /// Bin width, > 0.
    pub bin_width: F,
    /// Left edge of the first (lowest) stored bin.
    pub origin: F,
    pub counts: Vec<u64>,
    /// Total count; equals the sum of `counts`.
    pub n: u64,
    /// Index of the first stored bin relative to the requested origin,
    /// kept so histograms built with the same (width, origin) can be
    /// aligned onto a union support.
    first_bin: i64,
}

impl<F: Float + FromPrimitive> Histogram<F> {
    /// Bin a sample: value v lands in bin floor((v - origin)/bin_width).
    pub fn build(sample: &[F], bin_width: F, origin: F) -> Result<Self, StatsError> {
        if !(bin_width > F::zero()) {
            return Err(StatsError::InvalidBinWidth);
        }
        if sample.is_empty() {
            return Err(StatsError::InsufficientData { need: 1, got: 0 });
        }
        let idx_of = |v: F| -> i64 {
            ((v - origin) / bin_width)
                .floor()
                .to_i64()
                .expect("bin index overflow")
        };
        let lo = sample.iter().copied().map(&idx_of).min().unwrap();
        let hi = sample.iter().copied().map(&idx_of).max().unwrap();
        let mut counts = vec![0u64; (hi - lo + 1) as usize];
        for &v in sample {
            counts[(idx_of(v) - lo) as usize] += 1;
        }
        Ok(Self {
            bin_width,
            origin: origin + F::from_i64(lo).unwrap() * bin_width,
            counts,
            n: sample.len() as u64,
            first_bin: lo,
        })
    }

    /// Normalized probabilities (sum to 1).
    pub fn probabilities(&self) -> Vec<F> {
        let n = F::from_u64(self.n).unwrap();
        self.counts
            .iter()
            .map(|&c| F::from_u64(c).unwrap() / n)
            .collect()
    }
}

/// D(p || q) in nats over the union support, with additive smoothing
/// eps = 1/(10 n) per histogram applied to every union bin before
/// normalization so empty bins never produce infinite divergence.
///
/// Both histograms must share the bin width and a common bin grid.
pub fn kl_divergence<F: Float + FromPrimitive>(
    p: &Histogram<F>,
    q: &Histogram<F>,
) -> Result<F, StatsError> {
    let rel_tol = F::from_f64(1e-9).unwrap();
    if (p.bin_width - q.bin_width).abs() > rel_tol * p.bin_width {
        return Err(StatsError::IncompatibleBinning(
            "bin widths differ".to_string(),
        ));
    }
    // Origins must sit on the same grid: their offset must be an integer
    // multiple of the bin width.
    let offset = (q.origin - p.origin) / p.bin_width;
    let rounded = offset.round();
    if (offset - rounded).abs() > F::from_f64(1e-6).unwrap() {
        return Err(StatsError::IncompatibleBinning(
            "origins not on a common grid".to_string(),
        ));
    }
    let shift = rounded.to_i64().expect("grid offset overflow");

    // Union support in p's bin indexing (p bins are 0..p.len, q bin i maps
    // to index i + shift).
    let lo = 0i64.min(shift);
    let hi = (p.counts.len() as i64 - 1).max(shift + q.counts.len() as i64 - 1);
    let nbins = (hi - lo + 1) as usize;

    let expand = |counts: &[u64], base: i64| -> Vec<u64> {
        let mut out = vec![0u64; nbins];
        for (i, &c) in counts.iter().enumerate() {
            out[(base + i as i64 - lo) as usize] = c;
        }
        out
    };
    let pc = expand(&p.counts, 0);
    let qc = expand(&q.counts, shift);

    let smooth = |counts: &[u64], n: u64| -> Vec<F> {
        let eps = F::one() / (F::from_f64(10.0).unwrap() * F::from_u64(n).unwrap());
        let total = F::from_u64(n).unwrap() + eps * F::from_usize(nbins).unwrap();
        counts
            .iter()
            .map(|&c| (F::from_u64(c).unwrap() + eps) / total)
            .collect()
    };
    let pp = smooth(&pc, p.n);
    let qq = smooth(&qc, q.n);

    let mut d = F::zero();
    for (pi, qi) in pp.iter().zip(qq.iter()) {
        if *pi > F::zero() {
            d = d + *pi * (*pi / *qi).ln();
        }
    }
    // Gibbs: smoothing keeps this nonnegative up to rounding.
    Ok(d.max(F::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_var_hand_values() {
        assert_eq!(mean_var(&[5.0, 5.0, 5.0]).unwrap(), (5.0, 0.0));
        assert_eq!(mean_var(&[1.0, 2.0, 3.0]).unwrap(), (2.0, 1.0));
        assert_eq!(mean_var(&[2.0, 4.0, 6.0]).unwrap(), (4.0, 4.0));
    }

    #[test]
    fn mean_var_rejects_singleton() {
        assert_eq!(
            mean_var(&[1.0f64]).unwrap_err(),
            StatsError::InsufficientData { need: 2, got: 1 }
        );
    }

    #[test]
    fn mean_var_generic_over_f32() {
        let (m, v) = mean_var(&[1.0f32, 2.0, 3.0]).unwrap();
        assert_eq!((m, v), (2.0f32, 1.0f32));
    }

    #[test]
    fn ks_identical_samples() {
        let a = [3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.3, 5.8, 9.7, 9.3, 2.3, 8.4];
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.d_stat, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn ks_disjoint_samples_have_d_one() {
        let a: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..30).map(|i| 100.0 + i as f64).collect();
        let r = ks_two_sample(&a, &b).unwrap();
        assert_eq!(r.d_stat, 1.0);
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn ks_rejects_empty() {
        assert!(ks_two_sample::<f64>(&[], &[1.0]).is_err());
    }

    #[test]
    fn ks_ties_evaluated_after_group() {
        // With all values tied the ECDFs agree at the only data point.
        let a = [2.0; 8];
        let b = [2.0; 8];
        let r = ks_two_sample(&a, &b).unwrap();
        assert_eq!(r.d_stat, 0.0);
    }

    #[test]
    fn histogram_direct_binning() {
        let h = Histogram::build(&[0.5, 1.5, 1.6], 1.0, 0.0).unwrap();
        assert_eq!(h.counts, vec![1, 2]);
        assert_eq!(h.origin, 0.0);
        assert_eq!(h.n, 3);
    }

    #[test]
    fn histogram_constant_sample() {
        let h = Histogram::build(&[7.0; 100], 1.0, 0.0).unwrap();
        assert_eq!(h.counts, vec![100]);
        assert_eq!(h.origin, 7.0);
    }

    #[test]
    fn histogram_negative_values_and_offset_origin() {
        let h = Histogram::build(&[-1.5, 0.2, 3.9], 1.0, 0.0).unwrap();
        assert_eq!(h.origin, -2.0);
        assert_eq!(h.counts.len(), 6);
        assert_eq!(h.counts.iter().sum::<u64>(), h.n);
    }

    #[test]
    fn histogram_rejects_bad_input() {
        assert!(Histogram::build(&[1.0], 0.0, 0.0).is_err());
        assert!(Histogram::<f64>::build(&[], 1.0, 0.0).is_err());
    }

    #[test]
    fn kl_self_is_zero() {
        let h = Histogram::build(&[1.0, 2.0, 2.5, 7.0], 1.0, 0.0).unwrap();
        let d = kl_divergence(&h, &h).unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn kl_concentrated_vs_uniform_approaches_ln10() {
        // p: everything in one bin; q: uniform over ten bins. In the
        // vanishing-smoothing limit D -> ln(10).
        let p_sample = vec![0.5; 100_000];
        let q_sample: Vec<f64> = (0..100_000).map(|i| (i % 10) as f64 + 0.5).collect();
        let p = Histogram::build(&p_sample, 1.0, 0.0).unwrap();
        let q = Histogram::build(&q_sample, 1.0, 0.0).unwrap();
        let d = kl_divergence(&p, &q).unwrap();
        assert!((d - 10.0f64.ln()).abs() < 0.01, "got {}", d);
    }

    #[test]
    fn kl_rejects_mismatched_widths() {
        let p = Histogram::build(&[1.0, 2.0], 1.0, 0.0).unwrap();
        let q = Histogram::build(&[1.0, 2.0], 0.5, 0.0).unwrap();
        assert!(kl_divergence(&p, &q).is_err());
    }

    #[test]
    fn kl_handles_disjoint_supports() {
        let p = Histogram::build(&[1.0, 1.2], 1.0, 0.0).unwrap();
        let q = Histogram::build(&[8.0, 8.4], 1.0, 0.0).unwrap();
        let d = kl_divergence(&p, &q).unwrap();
        assert!(d.is_finite() && d > 0.0);
    }
}
