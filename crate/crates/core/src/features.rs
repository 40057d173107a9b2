//! The 39-feature vector computed from a resized artwork image: brightness,
//! RGB and HSV histogram statistics, GLCM and LBP texture, HOG and Canny
//! shape, and median-residual noise.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::imaging::{self, GrayImage, RasterImage};
use crate::stats::{build_histogram, describe, shannon_entropy};

/// Canonical feature order. The feature-cache CSV header uses exactly these
/// names in exactly this order.
pub const FEATURE_NAMES: [&str; 39] = [
    "mean_brightness",
    "entropy_brightness",
    "red_mean",
    "green_mean",
    "blue_mean",
    "red_variance",
    "green_variance",
    "blue_variance",
    "red_kurtosis",
    "green_kurtosis",
    "blue_kurtosis",
    "red_skewness",
    "green_skewness",
    "blue_skewness",
    "rgb_entropy",
    "hue_variance",
    "saturation_variance",
    "value_variance",
    "hue_kurtosis",
    "saturation_kurtosis",
    "value_kurtosis",
    "hue_skewness",
    "saturation_skewness",
    "value_skewness",
    "hsv_entropy",
    "contrast",
    "correlation",
    "energy",
    "homogeneity",
    "lbp_entropy",
    "lbp_variance",
    "hog_mean",
    "hog_variance",
    "hog_kurtosis",
    "hog_skewness",
    "hog_entropy",
    "edgelen",
    "noise_entropy",
    "snr",
];

pub const FEATURE_COUNT: usize = 39;

/// Index of a canonical feature name, if it exists.
pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|&n| n == name)
}

/// One artwork's 39 features, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.0[i])
    }
}

/// Extractor knobs. The values used to build a feature cache are recorded
/// in its sidecar metadata so caches are never silently mixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorConfig {
    pub resize_side: usize,
    pub canny_low: f64,
    pub canny_high: f64,
    pub glcm_levels: usize,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig {
            resize_side: 255,
            canny_low: 50.0,
            canny_high: 150.0,
            glcm_levels: 32,
        }
    }
}

impl ExtractorConfig {
    /// Stable hash of the configuration, recorded in reports and model files.
    pub fn hash(&self) -> String {
        let canonical = format!(
            "resize_side={};canny_low={};canny_high={};glcm_levels={}",
            self.resize_side, self.canny_low, self.canny_high, self.glcm_levels
        );
        let digest = Sha256::digest(canonical.as_bytes());
        let mut out = String::with_capacity(16);
        for b in &digest[..8] {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }
}

/// Mean intensity and entropy of the 256-bin intensity histogram.
pub fn extract_brightness(g: &GrayImage) -> (f64, f64) {
    let stats = describe(&g.data).expect("image has pixels");
    let hist = build_histogram(&g.data, 256, (0.0, 256.0));
    let entropy = shannon_entropy(&hist).expect("image has pixels");
    (stats.mean, entropy)
}

/// The 13 RGB features: per-channel mean/variance/kurtosis/skewness over
/// pixel values plus the mean of the three 256-bin histogram entropies.
pub fn extract_rgb(img: &RasterImage) -> [f64; 13] {
    let mut out = [0.0; 13];
    let mut entropy_sum = 0.0;
    for c in 0..3 {
        let values: Vec<f64> = img.pixels.iter().map(|p| p[c] as f64).collect();
        let stats = describe(&values).expect("image has pixels");
        out[c] = stats.mean;
        out[3 + c] = stats.variance;
        out[6 + c] = stats.kurtosis;
        out[9 + c] = stats.skewness;
        let hist = build_histogram(&values, 256, (0.0, 256.0));
        entropy_sum += shannon_entropy(&hist).expect("image has pixels");
    }
    out[12] = entropy_sum / 3.0;
    out
}

/// The 10 HSV features: per-channel variance/kurtosis/skewness over values
/// in [0, 1] plus the mean of the three 256-bin histogram entropies.
pub fn extract_hsv(img: &RasterImage) -> [f64; 10] {
    let hsv = imaging::to_hsv(img);
    let mut out = [0.0; 10];
    let mut entropy_sum = 0.0;
    for (c, values) in [&hsv.hue, &hsv.saturation, &hsv.value]
        .into_iter()
        .enumerate()
    {
        let stats = describe(values).expect("image has pixels");
        out[c] = stats.variance;
        out[3 + c] = stats.kurtosis;
        out[6 + c] = stats.skewness;
        let hist = build_histogram(values, 256, (0.0, 1.0));
        entropy_sum += shannon_entropy(&hist).expect("image has pixels");
    }
    out[9] = entropy_sum / 3.0;
    out
}

/// Symmetric, normalized gray-level co-occurrence matrix at offset
/// (distance 1, angle 0).
#[derive(Debug, Clone, PartialEq)]
pub struct GlcmMatrix {
    pub levels: usize,
    pub probabilities: Vec<f64>,
}

impl GlcmMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probabilities[i * self.levels + j]
    }
}

/// Quantizes intensities to `levels` gray levels and accumulates horizontal
/// co-occurrences in both directions.
pub fn glcm(g: &GrayImage, levels: usize) -> Result<GlcmMatrix> {
    if g.width < 2 {
        return Err(Error::InvalidInput(
            "glcm: image must be at least 2 pixels wide".into(),
        ));
    }
    assert!(levels >= 2, "glcm needs at least 2 levels");
    let quantize = |v: f64| -> usize {
        let lvl = (v * levels as f64 / 256.0).floor() as i64;
        lvl.clamp(0, levels as i64 - 1) as usize
    };
    let mut counts = vec![0u64; levels * levels];
    for y in 0..g.height {
        for x in 0..g.width - 1 {
            let a = quantize(g.get(x, y));
            let b = quantize(g.get(x + 1, y));
            counts[a * levels + b] += 1;
            counts[b * levels + a] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    let probabilities = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(GlcmMatrix {
        levels,
        probabilities,
    })
}

/// Haralick-style contrast, correlation, energy, homogeneity. Correlation
/// of a zero-variance matrix is 1 by convention (flat images).
pub fn glcm_features(m: &GlcmMatrix) -> (f64, f64, f64, f64) {
    let n = m.levels;
    let mut contrast = 0.0;
    let mut energy_sq = 0.0;
    let mut homogeneity = 0.0;
    let mut mu_i = 0.0;
    let mut mu_j = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = m.get(i, j);
            let d = i as f64 - j as f64;
            contrast += p * d * d;
            energy_sq += p * p;
            homogeneity += p / (1.0 + d.abs());
            mu_i += i as f64 * p;
            mu_j += j as f64 * p;
        }
    }
    let mut var_i = 0.0;
    let mut var_j = 0.0;
    let mut cov = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = m.get(i, j);
            var_i += p * (i as f64 - mu_i).powi(2);
            var_j += p * (j as f64 - mu_j).powi(2);
            cov += p * (i as f64 - mu_i) * (j as f64 - mu_j);
        }
    }
    let denom = (var_i * var_j).sqrt();
    let correlation = if denom <= 1e-12 { 1.0 } else { cov / denom };
    (contrast, correlation, energy_sq.sqrt(), homogeneity)
}

/// Classic 8-neighbor radius-1 LBP code per interior pixel. Bits are taken
/// clockwise from the top-left neighbor, first neighbor in the least
/// significant bit; a neighbor >= center sets its bit.
pub fn lbp_codes(g: &GrayImage) -> Result<Vec<u8>> {
    if g.width < 3 || g.height < 3 {
        return Err(Error::InvalidInput(
            "lbp: image must be at least 3x3".into(),
        ));
    }
    const OFFSETS: [(isize, isize); 8] = [
        (-1, -1),
        (0, -1),
        (1, -1),
        (1, 0),
        (1, 1),
        (0, 1),
        (-1, 1),
        (-1, 0),
    ];
    let mut codes = Vec::with_capacity((g.width - 2) * (g.height - 2));
    for y in 1..g.height - 1 {
        for x in 1..g.width - 1 {
            let center = g.get(x, y);
            let mut code = 0u8;
            for (bit, (dx, dy)) in OFFSETS.iter().enumerate() {
                let neighbor = g.get((x as isize + dx) as usize, (y as isize + dy) as usize);
                if neighbor >= center {
                    code |= 1 << bit;
                }
            }
            codes.push(code);
        }
    }
    Ok(codes)
}

/// Entropy of the 256-bin LBP code histogram and population variance of
/// the code values.
pub fn lbp_features(g: &GrayImage) -> Result<(f64, f64)> {
    let codes = lbp_codes(g)?;
    let values: Vec<f64> = codes.iter().map(|&c| c as f64).collect();
    let hist = build_histogram(&values, 256, (0.0, 256.0));
    let entropy = shannon_entropy(&hist)?;
    let variance = describe(&values)?.variance;
    Ok((entropy, variance))
}

/// Block-normalized HOG descriptor: centered-difference gradients, 9
/// unsigned orientation bins over [0, 180) with circular linear
/// interpolation (bin centers at k*20 degrees), 8x8-pixel cells, 2x2-cell
/// blocks with L2 normalization, stride one cell. Images narrower than two
/// cells fall back to single-cell blocks.
pub fn hog_descriptor(g: &GrayImage) -> Result<Vec<f64>> {
    const CELL: usize = 8;
    const BINS: usize = 9;
    let cells_x = g.width / CELL;
    let cells_y = g.height / CELL;
    if cells_x == 0 || cells_y == 0 {
        return Err(Error::InvalidInput(
            "hog: image smaller than one 8x8 cell".into(),
        ));
    }
    let mut cells = vec![[0.0f64; BINS]; cells_x * cells_y];
    for y in 0..cells_y * CELL {
        for x in 0..cells_x * CELL {
            let xm = x.saturating_sub(1);
            let xp = (x + 1).min(g.width - 1);
            let ym = y.saturating_sub(1);
            let yp = (y + 1).min(g.height - 1);
            let gx = g.get(xp, y) - g.get(xm, y);
            let gy = g.get(x, yp) - g.get(x, ym);
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let mut angle = gy.atan2(gx).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            if angle >= 180.0 {
                angle -= 180.0;
            }
            let t = angle / 20.0;
            let k = t.floor() as usize;
            let frac = t - k as f64;
            let cell = (y / CELL) * cells_x + x / CELL;
            cells[cell][k % BINS] += mag * (1.0 - frac);
            cells[cell][(k + 1) % BINS] += mag * frac;
        }
    }

    let (block_w, block_h) = if cells_x >= 2 && cells_y >= 2 {
        (2, 2)
    } else {
        (1, 1)
    };
    let eps = 1e-6f64;
    let mut descriptor = Vec::new();
    for by in 0..=cells_y - block_h {
        for bx in 0..=cells_x - block_w {
            let mut block = Vec::with_capacity(block_w * block_h * BINS);
            for cy in 0..block_h {
                for cx in 0..block_w {
                    block.extend_from_slice(&cells[(by + cy) * cells_x + (bx + cx)]);
                }
            }
            let norm = (block.iter().map(|v| v * v).sum::<f64>() + eps * eps).sqrt();
            descriptor.extend(block.iter().map(|v| v / norm));
        }
    }
    Ok(descriptor)
}

/// The five HOG summary statistics over a flattened descriptor: mean,
/// variance, kurtosis, skewness, and entropy of a 64-bin histogram of
/// descriptor values in [0, 1].
pub fn hog_stats(descriptor: &[f64]) -> Result<(f64, f64, f64, f64, f64)> {
    let stats = describe(descriptor)?;
    let hist = build_histogram(descriptor, 64, (0.0, 1.0));
    let entropy = shannon_entropy(&hist)?;
    Ok((
        stats.mean,
        stats.variance,
        stats.kurtosis,
        stats.skewness,
        entropy,
    ))
}

pub fn hog_features(g: &GrayImage) -> Result<(f64, f64, f64, f64, f64)> {
    hog_stats(&hog_descriptor(g)?)
}

/// Number of Canny edge pixels, as a real.
pub fn edgelen(g: &GrayImage, cfg: &ExtractorConfig) -> f64 {
    imaging::canny(g, cfg.canny_low, cfg.canny_high).count() as f64
}

const SNR_EPSILON: f64 = 1e-8;
const SNR_CAP: f64 = 1e6;

/// Noise features: entropy of the median-filter residual histogram
/// (511 bins over [-255, 255]) and the capped signal-to-noise ratio
/// mean/(std + 1e-8).
pub fn noise_features(g: &GrayImage) -> (f64, f64) {
    let denoised = imaging::median3(g);
    let residuals: Vec<f64> = g
        .data
        .iter()
        .zip(&denoised.data)
        .map(|(a, b)| a - b)
        .collect();
    let hist = build_histogram(&residuals, 511, (-255.0, 255.0));
    let noise_entropy = shannon_entropy(&hist).expect("image has pixels");
    let stats = describe(&g.data).expect("image has pixels");
    let snr = (stats.mean / (stats.variance.sqrt() + SNR_EPSILON)).min(SNR_CAP);
    (noise_entropy, snr)
}

/// Resizes the image and runs every feature family, producing the canonical
/// 39-entry vector. Every entry is checked finite.
pub fn extract_all(img: &RasterImage, cfg: &ExtractorConfig) -> Result<FeatureVector> {
    let resized = imaging::resize_bilinear(img, cfg.resize_side);
    let gray = imaging::to_gray(&resized);

    let (mean_brightness, entropy_brightness) = extract_brightness(&gray);
    let rgb = extract_rgb(&resized);
    let hsv = extract_hsv(&resized);
    let (contrast, correlation, energy, homogeneity) =
        glcm_features(&glcm(&gray, cfg.glcm_levels)?);
    let (lbp_entropy, lbp_variance) = lbp_features(&gray)?;
    let (hog_mean, hog_variance, hog_kurtosis, hog_skewness, hog_entropy) = hog_features(&gray)?;
    let edge_count = edgelen(&gray, cfg);
    let (noise_entropy, snr) = noise_features(&gray);

    let mut v = [0.0; FEATURE_COUNT];
    v[0] = mean_brightness;
    v[1] = entropy_brightness;
    v[2..15].copy_from_slice(&rgb);
    v[15..25].copy_from_slice(&hsv);
    v[25] = contrast;
    v[26] = correlation;
    v[27] = energy;
    v[28] = homogeneity;
    v[29] = lbp_entropy;
    v[30] = lbp_variance;
    v[31] = hog_mean;
    v[32] = hog_variance;
    v[33] = hog_kurtosis;
    v[34] = hog_skewness;
    v[35] = hog_entropy;
    v[36] = edge_count;
    v[37] = noise_entropy;
    v[38] = snr;

    if let Some(idx) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite feature '{}'",
            FEATURE_NAMES[idx]
        )));
    }
    Ok(FeatureVector(v))
}
