//! Slow, direct reference implementations used as test oracles. Each one
//! follows the textbook definition pixel by pixel and shares no code with
//! the library beyond `GrayImage` accessors.

#![allow(dead_code)]

use bitplane_lab::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut ChaCha8Rng, max_side: usize) -> GrayImage {
    let w = rng.random_range(1..=max_side);
    let h = rng.random_range(1..=max_side);
    let px = (0..w * h).map(|_| rng.random::<u8>()).collect();
    GrayImage::new(w, h, px).unwrap()
}

pub fn random_image_sized(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
    let px = (0..w * h).map(|_| rng.random::<u8>()).collect();
    GrayImage::new(w, h, px).unwrap()
}

fn clamped(img: &GrayImage, x: isize, y: isize) -> f64 {
    let cx = x.clamp(0, img.width() as isize - 1) as usize;
    let cy = y.clamp(0, img.height() as isize - 1) as usize;
    f64::from(img.pixels()[cy * img.width() + cx])
}

/// Unrounded NLM estimate for every pixel, row-major.
pub fn nlm_unrounded(img: &GrayImage, h: f64, template_radius: usize, search_radius: usize) -> Vec<f64> {
    let (r, big_r) = (template_radius as isize, search_radius as isize);
    let area = ((2 * r + 1) * (2 * r + 1)) as f64;
    let mut out = Vec::with_capacity(img.len());
    for y in 0..img.height() as isize {
        for x in 0..img.width() as isize {
            let mut num = 0.0;
            let mut den = 0.0;
            for qy in y - big_r..=y + big_r {
                for qx in x - big_r..=x + big_r {
                    let mut ssd = 0.0;
                    for oy in -r..=r {
                        for ox in -r..=r {
                            let d = clamped(img, x + ox, y + oy) - clamped(img, qx + ox, qy + oy);
                            ssd += d * d;
                        }
                    }
                    let w = (-(ssd / area) / (h * h)).exp();
                    num += w * clamped(img, qx, qy);
                    den += w;
                }
            }
            out.push(num / den);
        }
    }
    out
}

pub fn nlm_rounded(img: &GrayImage, h: f64, template_radius: usize, search_radius: usize) -> GrayImage {
    let px = nlm_unrounded(img, h, template_radius, search_radius)
        .into_iter()
        .map(|v| (v + 0.5).floor().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage::new(img.width(), img.height(), px).unwrap()
}

/// Otsu by brute force over the pixel list: for each threshold, compare the
/// between-class variance `n0 n1 (mu0 - mu1)^2 / n^2` as an exact fraction.
/// Ties keep the smallest threshold; `None` when no threshold splits the
/// pixels into two non-empty classes.
pub fn otsu_exhaustive(img: &GrayImage) -> Option<u8> {
    // between-class variance * n^2 = (s0 n1 - s1 n0)^2 / (n0 n1)
    let mut best: Option<(u8, i128, i128)> = None;
    for t in 0..=255u8 {
        let (mut n0, mut s0, mut n1, mut s1) = (0i128, 0i128, 0i128, 0i128);
        for &p in img.pixels() {
            if p > t {
                n1 += 1;
                s1 += i128::from(p);
            } else {
                n0 += 1;
                s0 += i128::from(p);
            }
        }
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let num = (s0 * n1 - s1 * n0).pow(2);
        let den = n0 * n1;
        let better = match best {
            None => true,
            Some((_, bn, bd)) => num * bd > bn * den,
        };
        if better {
            best = Some((t, num, den));
        }
    }
    best.map(|(t, _, _)| t)
}

/// Whole-image SSIM with population moments from exact integer sums.
pub fn ssim_global(x: &GrayImage, y: &GrayImage, k1: f64, k2: f64, l: f64) -> f64 {
    let n = x.len() as i128;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for (&a, &b) in x.pixels().iter().zip(y.pixels()) {
        let (a, b) = (i128::from(a), i128::from(b));
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    let nf = n as f64;
    let mx = sx as f64 / nf;
    let my = sy as f64 / nf;
    let vx = (n * sxx - sx * sx) as f64 / (nf * nf);
    let vy = (n * syy - sy * sy) as f64 / (nf * nf);
    let cxy = (n * sxy - sx * sy) as f64 / (nf * nf);
    let c1 = (k1 * l).powi(2);
    let c2 = (k2 * l).powi(2);
    ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
}

/// `10 log10(sum test^2 / sum (ref - test)^2)`.
pub fn snr(reference: &GrayImage, test: &GrayImage) -> f64 {
    let mut signal = 0.0;
    let mut noise = 0.0;
    for (&r, &t) in reference.pixels().iter().zip(test.pixels()) {
        signal += f64::from(t).powi(2);
        noise += (f64::from(r) - f64::from(t)).powi(2);
    }
    10.0 * (signal / noise).log10()
}

/// Two Gaussian blobs in the plane, `n / 2` points each, centres six
/// standard deviations apart.
pub fn blobs(n: usize, seed: u64) -> Vec<(Vec<f64>, u8)> {
    use rand_distr::{Distribution, Normal};
    let mut rng = rng(seed);
    let unit = Normal::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|i| {
            let label = (i % 2) as u8;
            let c = if label == 1 { 6.0 } else { 0.0 };
            (vec![c + unit.sample(&mut rng), c + unit.sample(&mut rng)], label)
        })
        .collect()
}
