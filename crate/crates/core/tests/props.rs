//! Property tests over the statistics, imaging, and split invariants.

use proptest::prelude::*;

use artdetect_core::dataset::is_ai_class;
use artdetect_core::imaging::{resize_bilinear, to_gray, RasterImage};
use artdetect_core::stats::{build_histogram, describe, shannon_entropy, Histogram};

proptest! {
    #[test]
    fn describe_is_permutation_invariant(
        mut values in prop::collection::vec(-1000.0f64..1000.0, 2..200),
        seed in 0u64..1000,
    ) {
        let original = describe(&values).unwrap();
        let mut rng = artdetect_core::rng::Rng::new(seed);
        rng.shuffle(&mut values);
        let shuffled = describe(&values).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
        prop_assert!(close(original.mean, shuffled.mean));
        prop_assert!(close(original.variance, shuffled.variance));
        prop_assert!(close(original.skewness, shuffled.skewness));
        prop_assert!(close(original.kurtosis, shuffled.kurtosis));
    }

    #[test]
    fn variance_never_negative(values in prop::collection::vec(-1e6f64..1e6, 1..100)) {
        let stats = describe(&values).unwrap();
        prop_assert!(stats.variance >= 0.0);
    }

    #[test]
    fn entropy_bounded_and_scale_invariant(
        counts in prop::collection::vec(0u64..50, 2..64),
        scale in 1u64..20,
    ) {
        prop_assume!(counts.iter().any(|&c| c > 0));
        let bins = counts.len();
        let h = Histogram { counts: counts.clone(), bin_count: bins, value_range: (0.0, 1.0) };
        let e = shannon_entropy(&h).unwrap();
        prop_assert!(e >= 0.0);
        prop_assert!(e <= (bins as f64).log2() + 1e-12);

        let scaled = Histogram {
            counts: counts.iter().map(|&c| c * scale).collect(),
            bin_count: bins,
            value_range: (0.0, 1.0),
        };
        let es = shannon_entropy(&scaled).unwrap();
        prop_assert!((e - es).abs() < 1e-9);
    }

    #[test]
    fn entropy_maximal_only_for_uniform(counts in prop::collection::vec(1u64..40, 4..32)) {
        let bins = counts.len();
        let h = Histogram { counts: counts.clone(), bin_count: bins, value_range: (0.0, 1.0) };
        let e = shannon_entropy(&h).unwrap();
        let max = (bins as f64).log2();
        let uniform = counts.iter().all(|&c| c == counts[0]);
        if uniform {
            prop_assert!((e - max).abs() < 1e-9);
        } else {
            prop_assert!(e < max - 1e-12);
        }
    }

    #[test]
    fn histogram_total_counts_everything(
        values in prop::collection::vec(-10.0f64..300.0, 0..500),
        bins in 1usize..64,
    ) {
        let h = build_histogram(&values, bins, (0.0, 256.0));
        prop_assert_eq!(h.total() as usize, values.len());
        prop_assert_eq!(h.counts.len(), bins);
    }

    #[test]
    fn gray_is_monotone_under_brightening(
        r in 0u8..200, g in 0u8..200, b in 0u8..200,
        dr in 0u8..55, dg in 0u8..55, db in 0u8..55,
    ) {
        let dark = RasterImage::new(1, 1, vec![[r, g, b]]);
        let bright = RasterImage::new(1, 1, vec![[r + dr, g + dg, b + db]]);
        prop_assert!(to_gray(&bright).data[0] >= to_gray(&dark).data[0]);
    }

    #[test]
    fn resize_preserves_constant_images(value in 0u8..=255, side in 1usize..24, out in 1usize..24) {
        let img = RasterImage::new(side, side, vec![[value; 3]; side * side]);
        let resized = resize_bilinear(&img, out);
        prop_assert_eq!((resized.width, resized.height), (out, out));
        prop_assert!(resized.pixels.iter().all(|&p| p == [value; 3]));
    }

    #[test]
    fn binary_label_depends_only_on_prefix(name in "[A-Za-z][A-Za-z0-9-]{0,20}") {
        let expect = name.to_ascii_lowercase().starts_with("ai-");
        prop_assert_eq!(is_ai_class(&name), expect);
    }
}
