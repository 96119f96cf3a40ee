mod common;

use bitplane_lab::features::{handcrafted_features, otsu_threshold, BinaryMask};
use bitplane_lab::{Error, FeatureVector, GrayImage};
use common::oracles;
use rand::Rng;

#[test]
fn matches_exhaustive_search_on_random_16x16() {
    let mut rng = oracles::rng(21);
    for _ in 0..100 {
        let img = oracles::random_image_sized(&mut rng, 16, 16);
        assert_eq!(otsu_threshold(&img).ok(), oracles::otsu_exhaustive(&img));
    }
}

#[test]
fn matches_exhaustive_search_on_few_levels() {
    // few distinct levels make ties and gaps common
    let mut rng = oracles::rng(22);
    for _ in 0..200 {
        let levels: Vec<u8> = (0..rng.random_range(2..5)).map(|_| rng.random()).collect();
        let px: Vec<u8> = (0..64).map(|_| levels[rng.random_range(0..levels.len())]).collect();
        let img = GrayImage::new(8, 8, px).unwrap();
        assert_eq!(otsu_threshold(&img).ok(), oracles::otsu_exhaustive(&img));
    }
}

#[test]
fn single_level_is_degenerate() {
    let img = GrayImage::filled(5, 5, 3).unwrap();
    assert_eq!(oracles::otsu_exhaustive(&img), None);
    assert!(matches!(otsu_threshold(&img), Err(Error::DegenerateHistogram)));
}

#[test]
fn features_match_direct_masked_statistics() {
    let mut rng = oracles::rng(23);
    for _ in 0..50 {
        let img = oracles::random_image_sized(&mut rng, 12, 9);
        let t = oracles::otsu_exhaustive(&img).unwrap();
        let f: FeatureVector = handcrafted_features(&img).unwrap();
        let stats = |fg: bool| {
            let v: Vec<f64> = img.pixels().iter().filter(|&&p| (p > t) == fg).map(|&p| f64::from(p)).collect();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            [mean, var, var.sqrt()]
        };
        let expected: Vec<f64> = stats(true).into_iter().chain(stats(false)).collect();
        for (a, b) in f.values().iter().zip(&expected) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
        }
        assert_eq!(BinaryMask::above(&img, t).count(), img.pixels().iter().filter(|&&p| p > t).count());
    }
}
