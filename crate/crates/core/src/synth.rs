//! Synthetic radiograph-like images for tests, benchmarks and demos.
//!
//! Each image is a dark field with a soft-tissue ellipse and one long bone
//! (bright cortex, darker medulla). Soft tissue brightens with path length
//! through the ellipse and the whole field carries a linear anode-heel
//! gradient. Fractured images add a thin oblique crack across the bone.
//! Gaussian sensor noise is added last.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::classify::Label;
use crate::error::{Error, Result};
use crate::harness::{FRACTURED_DIR, NON_FRACTURED_DIR};
use crate::image::{save_image, GrayImage};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthParams {
    pub width: usize,
    pub height: usize,
    /// Standard deviation of additive Gaussian noise, in intensity units.
    pub noise_sigma: f64,
    /// Intensity rise across the image from the heel effect.
    pub heel_gradient: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            width: 128,
            height: 128,
            noise_sigma: 1.5,
            heel_gradient: 30.0,
        }
    }
}

fn smoothstep(e0: f64, e1: f64, x: f64) -> f64 {
    let t = ((x - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let t = (((p.0 - a.0) * vx + (p.1 - a.1) * vy) / (vx * vx + vy * vy)).clamp(0.0, 1.0);
    let (qx, qy) = (a.0 + t * vx, a.1 + t * vy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

/// One synthetic image; the same `(params, seed, fractured)` always gives
/// the same pixels.
pub fn xray_like(params: &SynthParams, seed: u64, fractured: bool) -> Result<GrayImage> {
    if params.width < 16 || params.height < 16 {
        return Err(Error::InvalidParams("synthetic images need at least 16x16 pixels".into()));
    }
    if !(params.noise_sigma >= 0.0 && params.noise_sigma.is_finite()) {
        return Err(Error::InvalidParams(format!("noise sigma {}", params.noise_sigma)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (params.width as f64, params.height as f64);

    let background = rng.random_range(12.0..30.0);
    let tissue = rng.random_range(70.0..100.0);
    let (cx, cy) = (w * rng.random_range(0.45..0.55), h * rng.random_range(0.45..0.55));
    let (rx, ry) = (w * rng.random_range(0.30..0.40), h * rng.random_range(0.40..0.48));
    let theta: f64 = rng.random_range(-0.35..0.35);
    let (sin, cos) = theta.sin_cos();

    let half_len = ry * 0.85;
    let a = (cx - half_len * sin, cy - half_len * cos);
    let b = (cx + half_len * sin, cy + half_len * cos);
    let half_width = w * rng.random_range(0.06..0.09);
    let medulla = rng.random_range(150.0..175.0);
    let cortex = rng.random_range(200.0..230.0);

    let t0 = rng.random_range(0.3..0.7);
    let crack_at = (a.0 + t0 * (b.0 - a.0), a.1 + t0 * (b.1 - a.1));
    let crack_angle = theta + rng.random_range(-0.5..0.5);
    let crack_normal = (crack_angle.sin(), crack_angle.cos());

    let noise = Normal::new(0.0, params.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidParams(e.to_string()))?;

    GrayImage::from_fn(params.width, params.height, |x, y| {
        let p = (x as f64 + 0.5, y as f64 + 0.5);
        let (dx, dy) = (p.0 - cx, p.1 - cy);
        let (u, v) = (dx * cos - dy * sin, dx * sin + dy * cos);
        let e = ((u / rx).powi(2) + (v / ry).powi(2)).sqrt();
        let path_length = (1.0 - e.min(1.0).powi(2)).sqrt();
        let heel = params.heel_gradient * (p.1 / h - 0.5);
        let mut val = background + heel + path_length * (tissue - background);

        let d = segment_distance(p, a, b);
        let mut bone_mask = 1.0 - smoothstep(half_width - 1.0, half_width + 1.0, d);
        if fractured {
            let s = (p.0 - crack_at.0) * crack_normal.0 + (p.1 - crack_at.1) * crack_normal.1;
            bone_mask *= smoothstep(0.4, 1.6, s.abs());
        }
        let r = (d / half_width).min(1.0);
        let bone_val = medulla + (cortex - medulla) * r * r;
        val += bone_mask * (bone_val - val);

        if params.noise_sigma > 0.0 {
            val += noise.sample(&mut rng);
        }
        (val + 0.5).floor().clamp(0.0, 255.0) as u8
    })
}

/// A written corpus entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthEntry {
    pub id: String,
    pub label: Label,
    pub path: PathBuf,
}

/// Writes `n` images into `root/Fractured` and `root/Non_fractured`.
/// Even indices are fractured. Image `i` uses seed `seed + i`.
pub fn write_corpus(root: impl AsRef<Path>, n: usize, params: &SynthParams, seed: u64) -> Result<Vec<SynthEntry>> {
    let root = root.as_ref();
    for sub in [FRACTURED_DIR, NON_FRACTURED_DIR] {
        let dir = root.join(sub);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    (0..n)
        .map(|i| {
            let fractured = i % 2 == 0;
            let id = format!("synth_{i:04}");
            let sub = if fractured { FRACTURED_DIR } else { NON_FRACTURED_DIR };
            let path = root.join(sub).join(format!("{id}.pgm"));
            save_image(&xray_like(params, seed.wrapping_add(i as u64), fractured)?, &path)?;
            Ok(SynthEntry {
                id,
                label: Label::from(fractured),
                path,
            })
        })
        .collect()
}
