//! Shared helpers for the CLI and acceptance suites: the binary under
//! test and deterministic synthetic image trees.

use std::path::Path;
use std::process::Command;

/// Tiny deterministic generator (xorshift64*) so the test trees never
/// depend on crate internals.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

pub fn artdetect() -> Command {
    Command::new(env!("CARGO_BIN_EXE_artdetect"))
}

pub fn write_png(path: &Path, side: u32, mut pixel: impl FnMut(u32, u32) -> [u8; 3]) {
    let img = image::RgbImage::from_fn(side, side, |x, y| image::Rgb(pixel(x, y)));
    img.save(path).unwrap();
}

/// Two-class tree under `root`: Human-smooth (soft color ramps) versus
/// AI-noise (per-pixel uniform noise).
pub fn toy_tree(root: &Path, per_class: usize, side: u32, seed: u64) {
    let mut rng = TestRng::new(seed);
    let smooth = root.join("Human-smooth");
    let noisy = root.join("AI-noise");
    std::fs::create_dir_all(&smooth).unwrap();
    std::fs::create_dir_all(&noisy).unwrap();
    for i in 0..per_class {
        let slope = 0.5 + 1.5 * rng.unit();
        let offset = 60.0 * rng.unit();
        write_png(&smooth.join(format!("img{i:03}.png")), side, |x, y| {
            let v = (offset + slope * (x + y) as f64).clamp(0.0, 255.0) as u8;
            [v, v / 2 + 30, 255 - v]
        });
        write_png(&noisy.join(format!("img{i:03}.png")), side, |_, _| {
            [
                rng.below(256) as u8,
                rng.below(256) as u8,
                rng.below(256) as u8,
            ]
        });
    }
}
