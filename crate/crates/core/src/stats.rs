//! Descriptive statistics and entropy primitives shared by every feature
//! family and by the model diagnostics.
//!
//! Conventions, applied everywhere in the crate:
//! - moments are population moments (divide by n, no sample correction),
//! - kurtosis is Fisher excess (a normal distribution scores 0),
//! - zero-variance input yields skewness = 0 and kurtosis = 0 so constant
//!   images still produce finite feature vectors,
//! - entropy is log base 2 (bits).

use crate::error::{Error, Result};

/// Population mean, variance, skewness, and Fisher excess kurtosis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptiveStats {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

/// Equal-width histogram over a closed value range.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub counts: Vec<u64>,
    pub bin_count: usize,
    pub value_range: (f64, f64),
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Population moments of a non-empty sequence.
pub fn describe(values: &[f64]) -> Result<DescriptiveStats> {
    if values.is_empty() {
        return Err(Error::InvalidInput("describe: empty input".into()));
    }
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        // Exact constant input: report the value and the zero-variance
        // convention without accumulating rounding noise.
        return Ok(DescriptiveStats {
            mean: first,
            variance: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 <= 0.0 {
        return Ok(DescriptiveStats {
            mean,
            variance: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
        });
    }
    Ok(DescriptiveStats {
        mean,
        variance: m2,
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2) - 3.0,
    })
}

/// Equal-width binning over [low, high]. Values exactly at `high` fall in
/// the last bin; values outside the range clamp to the nearest bin.
pub fn build_histogram(values: &[f64], bin_count: usize, value_range: (f64, f64)) -> Histogram {
    let (low, high) = value_range;
    assert!(bin_count >= 1, "bin_count must be >= 1");
    assert!(high > low, "value_range must satisfy high > low");
    let scale = bin_count as f64 / (high - low);
    let mut counts = vec![0u64; bin_count];
    for &v in values {
        let raw = ((v - low) * scale).floor();
        let bin = (raw as i64).clamp(0, bin_count as i64 - 1) as usize;
        counts[bin] += 1;
    }
    Histogram {
        counts,
        bin_count,
        value_range,
    }
}

/// Shannon entropy of the bin distribution, in bits.
pub fn shannon_entropy(h: &Histogram) -> Result<f64> {
    let total = h.total();
    if total == 0 {
        return Err(Error::InvalidInput(
            "shannon_entropy: histogram has no samples".into(),
        ));
    }
    let total = total as f64;
    let mut bits = 0.0;
    for &c in &h.counts {
        if c > 0 {
            let p = c as f64 / total;
            bits -= p * p.log2();
        }
    }
    Ok(bits.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn constant_input_uses_zero_variance_convention() {
        let s = describe(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.skewness, 0.0);
        assert_eq!(s.kurtosis, 0.0);
    }

    #[test]
    fn two_point_symmetric_sample() {
        let s = describe(&[0.0, 255.0]).unwrap();
        assert_eq!(s.mean, 127.5);
        assert_eq!(s.variance, 16256.25);
        assert_eq!(s.skewness, 0.0);
        assert!((s.kurtosis + 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(describe(&[]).is_err());
    }

    // Independent oracle: four separate accumulation passes.
    fn describe_oracle(values: &[f64]) -> DescriptiveStats {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
        let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
        DescriptiveStats {
            mean,
            variance: m2,
            skewness: m3 / m2.powf(1.5),
            kurtosis: m4 / (m2 * m2) - 3.0,
        }
    }

    #[test]
    fn matches_four_pass_oracle_on_random_data() {
        let mut rng = Rng::new(42);
        let values: Vec<f64> = (0..1000).map(|_| rng.uniform(0.0, 255.0)).collect();
        let got = describe(&values).unwrap();
        let want = describe_oracle(&values);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        assert!(rel(got.mean, want.mean) < 1e-9);
        assert!(rel(got.variance, want.variance) < 1e-9);
        assert!(rel(got.skewness, want.skewness) < 1e-9);
        assert!(rel(got.kurtosis, want.kurtosis) < 1e-9);
    }

    #[test]
    fn entropy_uniform_256_bins() {
        let h = Histogram {
            counts: vec![3; 256],
            bin_count: 256,
            value_range: (0.0, 256.0),
        };
        assert!((shannon_entropy(&h).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_degenerate_and_hand_computed() {
        let single = Histogram {
            counts: vec![0, 9, 0],
            bin_count: 3,
            value_range: (0.0, 3.0),
        };
        assert_eq!(shannon_entropy(&single).unwrap(), 0.0);

        let h = Histogram {
            counts: vec![1, 1, 2],
            bin_count: 3,
            value_range: (0.0, 3.0),
        };
        assert!((shannon_entropy(&h).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn entropy_of_empty_histogram_rejected() {
        let h = Histogram {
            counts: vec![0; 4],
            bin_count: 4,
            value_range: (0.0, 1.0),
        };
        assert!(shannon_entropy(&h).is_err());
    }

    #[test]
    fn histogram_one_value_per_bin() {
        let values: Vec<f64> = (0..256).map(|v| v as f64).collect();
        let h = build_histogram(&values, 256, (0.0, 256.0));
        assert!(h.counts.iter().all(|&c| c == 1));
    }

    #[test]
    fn histogram_constant_and_clamping() {
        let values = vec![7.0; 256];
        let h = build_histogram(&values, 256, (0.0, 256.0));
        assert_eq!(h.counts[7], 256);
        assert_eq!(h.total(), 256);

        // exact high lands in the last bin, out-of-range clamps
        let h = build_histogram(&[1.0, -5.0, 42.0], 4, (0.0, 1.0));
        assert_eq!(h.counts, vec![1, 0, 0, 2]);
    }

    #[test]
    fn histogram_matches_naive_binning() {
        let mut rng = Rng::new(9);
        let values: Vec<f64> = (0..10_000).map(|_| rng.uniform(-2.0, 300.0)).collect();
        let (bins, lo, hi) = (64, 0.0, 256.0);
        let h = build_histogram(&values, bins, (lo, hi));
        let mut naive = vec![0u64; bins];
        for &v in &values {
            let mut b = (((v - lo) / (hi - lo)) * bins as f64).floor() as i64;
            if b < 0 {
                b = 0;
            }
            if b >= bins as i64 {
                b = bins as i64 - 1;
            }
            naive[b as usize] += 1;
        }
        assert_eq!(h.counts, naive);
    }
}
