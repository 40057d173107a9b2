//! Image decoding, resizing, color conversion, and the low-level filters
//! (median, Sobel, Canny) that feed the feature extractors.

use std::path::Path;

use crate::error::{Error, Result};

/// Decoded 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Self {
        assert_eq!(pixels.len(), width * height, "pixel count mismatch");
        RasterImage {
            width,
            height,
            pixels,
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }
}

/// Grayscale image with real-valued intensities in [0, 255].
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "intensity count mismatch");
        GrayImage {
            width,
            height,
            data,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }
}

/// Binary edge mask produced by the Canny detector.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    pub width: usize,
    pub height: usize,
    pub flags: Vec<bool>,
}

impl EdgeMap {
    pub fn is_edge(&self, x: usize, y: usize) -> bool {
        self.flags[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

/// Per-pixel hue/saturation/value planes, all in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct HsvPlanes {
    pub width: usize,
    pub height: usize,
    pub hue: Vec<f64>,
    pub saturation: Vec<f64>,
    pub value: Vec<f64>,
}

/// Decodes a PNG or JPEG byte stream into 8-bit RGB. Alpha is discarded by
/// compositing over white.
pub fn decode(bytes: &[u8], origin: &Path) -> Result<RasterImage> {
    let img = image::load_from_memory(bytes).map_err(|e| Error::Decode {
        path: origin.to_path_buf(),
        reason: e.to_string(),
    })?;
    let rgba = img.to_rgba8();
    let (w, h) = rgba.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::Decode {
            path: origin.to_path_buf(),
            reason: "zero-sized image".into(),
        });
    }
    let pixels = rgba
        .pixels()
        .map(|p| {
            let a = p[3] as u32;
            let over_white = |c: u8| -> u8 {
                let v = (a * c as u32 + (255 - a) * 255 + 127) / 255;
                v.min(255) as u8
            };
            [over_white(p[0]), over_white(p[1]), over_white(p[2])]
        })
        .collect();
    Ok(RasterImage::new(w as usize, h as usize, pixels))
}

/// Bilinear resize to a square `side`x`side` output, half-pixel centers
/// with edge clamping. Same-size input round-trips exactly.
pub fn resize_bilinear(img: &RasterImage, side: usize) -> RasterImage {
    assert!(side >= 1, "resize side must be >= 1");
    let sx = img.width as f64 / side as f64;
    let sy = img.height as f64 / side as f64;
    let mut pixels = Vec::with_capacity(side * side);
    for oy in 0..side {
        let fy = ((oy as f64 + 0.5) * sy - 0.5).clamp(0.0, (img.height - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(img.height - 1);
        let ty = fy - y0 as f64;
        for ox in 0..side {
            let fx = ((ox as f64 + 0.5) * sx - 0.5).clamp(0.0, (img.width - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(img.width - 1);
            let tx = fx - x0 as f64;
            let mut out = [0u8; 3];
            for (c, slot) in out.iter_mut().enumerate() {
                let p00 = img.pixel(x0, y0)[c] as f64;
                let p10 = img.pixel(x1, y0)[c] as f64;
                let p01 = img.pixel(x0, y1)[c] as f64;
                let p11 = img.pixel(x1, y1)[c] as f64;
                let top = p00 + (p10 - p00) * tx;
                let bottom = p01 + (p11 - p01) * tx;
                let v = top + (bottom - top) * ty;
                *slot = v.round().clamp(0.0, 255.0) as u8;
            }
            pixels.push(out);
        }
    }
    RasterImage::new(side, side, pixels)
}

/// BT.601 luma: 0.299 r + 0.587 g + 0.114 b.
pub fn to_gray(img: &RasterImage) -> GrayImage {
    let data = img
        .pixels
        .iter()
        .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
        .collect();
    GrayImage::new(img.width, img.height, data)
}

/// Hexcone HSV with all three channels scaled into [0, 1]. Achromatic
/// pixels take hue 0 so downstream statistics stay finite.
pub fn to_hsv(img: &RasterImage) -> HsvPlanes {
    let n = img.pixels.len();
    let mut hue = Vec::with_capacity(n);
    let mut saturation = Vec::with_capacity(n);
    let mut value = Vec::with_capacity(n);
    for p in &img.pixels {
        let r = p[0] as f64 / 255.0;
        let g = p[1] as f64 / 255.0;
        let b = p[2] as f64 / 255.0;
        let max = r.max(g).max(b);
        let min = r.min(g).min(b);
        let delta = max - min;
        let h = if delta == 0.0 {
            0.0
        } else {
            let h6 = if max == r {
                ((g - b) / delta).rem_euclid(6.0)
            } else if max == g {
                (b - r) / delta + 2.0
            } else {
                (r - g) / delta + 4.0
            };
            h6 / 6.0
        };
        let s = if max == 0.0 { 0.0 } else { delta / max };
        hue.push(h);
        saturation.push(s);
        value.push(max);
    }
    HsvPlanes {
        width: img.width,
        height: img.height,
        hue,
        saturation,
        value,
    }
}

/// 3x3 median filter with edge replication.
pub fn median3(g: &GrayImage) -> GrayImage {
    let mut data = Vec::with_capacity(g.data.len());
    for y in 0..g.height as isize {
        for x in 0..g.width as isize {
            let mut window = [0.0f64; 9];
            let mut k = 0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    window[k] = g.get_clamped(x + dx, y + dy);
                    k += 1;
                }
            }
            window.sort_by(|a, b| a.partial_cmp(b).unwrap());
            data.push(window[4]);
        }
    }
    GrayImage::new(g.width, g.height, data)
}

const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
const SOBEL_Y: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

fn gaussian5(g: &GrayImage, sigma: f64) -> GrayImage {
    let mut kernel = [[0.0f64; 5]; 5];
    let mut sum = 0.0;
    for (i, row) in kernel.iter_mut().enumerate() {
        for (j, w) in row.iter_mut().enumerate() {
            let dy = i as f64 - 2.0;
            let dx = j as f64 - 2.0;
            *w = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
            sum += *w;
        }
    }
    let mut data = Vec::with_capacity(g.data.len());
    for y in 0..g.height as isize {
        for x in 0..g.width as isize {
            let mut acc = 0.0;
            for (i, row) in kernel.iter().enumerate() {
                for (j, w) in row.iter().enumerate() {
                    acc += w * g.get_clamped(x + j as isize - 2, y + i as isize - 2);
                }
            }
            data.push(acc / sum);
        }
    }
    GrayImage::new(g.width, g.height, data)
}

fn sobel(g: &GrayImage) -> (Vec<f64>, Vec<f64>) {
    let n = g.data.len();
    let mut gx = Vec::with_capacity(n);
    let mut gy = Vec::with_capacity(n);
    for y in 0..g.height as isize {
        for x in 0..g.width as isize {
            let mut sx = 0.0;
            let mut sy = 0.0;
            for i in 0..3usize {
                for j in 0..3usize {
                    let v = g.get_clamped(x + j as isize - 1, y + i as isize - 1);
                    sx += SOBEL_X[i][j] * v;
                    sy += SOBEL_Y[i][j] * v;
                }
            }
            gx.push(sx);
            gy.push(sy);
        }
    }
    (gx, gy)
}

/// Canny edges: Gaussian smoothing (sigma 1.4, 5x5), Sobel gradients,
/// non-maximum suppression, double threshold, hysteresis by
/// 8-connectivity.
///
/// The suppression tie rule keeps a pixel when its magnitude is >= the
/// neighbor behind the gradient and strictly > the neighbor ahead, so a
/// ridge of two equal columns keeps exactly one.
pub fn canny(g: &GrayImage, low: f64, high: f64) -> EdgeMap {
    assert!(
        low >= 0.0 && low <= high,
        "thresholds must satisfy 0 <= low <= high"
    );
    let (w, h) = (g.width, g.height);
    let smoothed = gaussian5(g, 1.4);
    let (gx, gy) = sobel(&smoothed);
    let mag: Vec<f64> = gx.iter().zip(&gy).map(|(&x, &y)| x.hypot(y)).collect();

    // Non-maximum suppression along the quantized gradient direction.
    let mut keep = vec![false; w * h];
    let mag_at = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if mag[i] == 0.0 {
                continue;
            }
            let mut angle = gy[i].atan2(gx[i]).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            let sector = (angle / 45.0).round() as usize % 4;
            let (dx, dy): (isize, isize) = match sector {
                0 => (1, 0),
                1 => (1, 1),
                2 => (0, 1),
                _ => (1, -1),
            };
            let behind = mag_at(x as isize - dx, y as isize - dy);
            let ahead = mag_at(x as isize + dx, y as isize + dy);
            keep[i] = mag[i] >= behind && mag[i] > ahead;
        }
    }

    // Double threshold + hysteresis from strong seeds through weak pixels.
    let mut flags = vec![false; w * h];
    let mut stack = Vec::new();
    for i in 0..w * h {
        if keep[i] && mag[i] >= high {
            flags[i] = true;
            stack.push(i);
        }
    }
    while let Some(i) = stack.pop() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !flags[j] && keep[j] && mag[j] >= low {
                    flags[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    EdgeMap {
        width: w,
        height: h,
        flags,
    }
}
