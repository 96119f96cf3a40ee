//! Non-local-means denoising and the full/partial denoising pipelines.
//!
//! Each output pixel is the weighted mean of the pixels in a
//! `(2R+1) x (2R+1)` search window, weighted by `exp(-d^2 / h^2)` where
//! `d^2` is the mean squared difference between the `(2r+1) x (2r+1)`
//! patches around the two pixels. Borders are handled by edge replication,
//! so every pixel sees a full search window. The centre pixel compares its
//! patch with itself and always contributes weight 1.
//!
//! Patch distances are computed per search offset from a summed-area table
//! of squared differences. The table holds exact integers, so distances are
//! identical to a direct patch-by-patch evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitplane::{self, BitPlaneStack, PlaneMask};
use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Rows per independently processed band.
const BAND_ROWS: usize = 16;

/// Intensity of a set bit when a binary plane is fed to the denoiser.
pub const PLANE_LEVEL: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NlmParams {
    /// Filter strength in intensity units.
    pub h: f64,
    /// Patch is `(2 * template_radius + 1)^2` pixels.
    pub template_radius: usize,
    /// Search window is `(2 * search_radius + 1)^2` pixels.
    pub search_radius: usize,
}

impl Default for NlmParams {
    fn default() -> Self {
        NlmParams {
            h: 10.0,
            template_radius: 3,
            search_radius: 10,
        }
    }
}

impl NlmParams {
    pub fn new(h: f64, template_radius: usize, search_radius: usize) -> Result<Self> {
        let p = NlmParams {
            h,
            template_radius,
            search_radius,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidParams(format!("NLM h must be > 0, got {}", self.h)));
        }
        if self.template_radius < 1 {
            return Err(Error::InvalidParams("NLM template radius must be >= 1".into()));
        }
        if self.search_radius < self.template_radius {
            return Err(Error::InvalidParams(format!(
                "NLM search radius {} is smaller than template radius {}",
                self.search_radius, self.template_radius
            )));
        }
        Ok(())
    }

    pub fn patch_area(&self) -> usize {
        (2 * self.template_radius + 1).pow(2)
    }
}

/// Edge-replicated copy of an image with `pad` extra pixels on every side.
struct Padded {
    stride: usize,
    pad: usize,
    data: Vec<i32>,
}

impl Padded {
    fn new(img: &GrayImage, pad: usize) -> Self {
        let stride = img.width() + 2 * pad;
        let rows = img.height() + 2 * pad;
        let mut data = Vec::with_capacity(stride * rows);
        for py in 0..rows {
            let y = py as isize - pad as isize;
            for px in 0..stride {
                let x = px as isize - pad as isize;
                data.push(i32::from(img.get_clamped(x, y)));
            }
        }
        Padded { stride, pad, data }
    }

    /// Value at image coordinates `(x, y)`, which may lie up to `pad` pixels
    /// outside the image.
    #[inline]
    fn at(&self, x: isize, y: isize) -> i32 {
        let px = (x + self.pad as isize) as usize;
        let py = (y + self.pad as isize) as usize;
        self.data[py * self.stride + px]
    }
}

/// Rounds half up and clamps into the 8-bit range.
#[inline]
pub(crate) fn quantize(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn nlm_denoise(img: &GrayImage, params: &NlmParams) -> Result<GrayImage> {
    params.validate()?;
    let (w, h) = (img.width(), img.height());
    let r = params.template_radius;
    let big_r = params.search_radius as isize;
    let padded = Padded::new(img, params.search_radius + r);
    let area = params.patch_area() as f64;
    let h2 = params.h * params.h;
    let weight_of = |ssd: u64| (-(ssd as f64 / area) / h2).exp();
    // Patch SSDs are integers, so the common small ones share one table.
    // Entries are computed by the same expression as the fallback.
    let table_len = ((area * h2 * 40.0) as usize).min(1 << 20);
    let weights: Vec<f64> = (0..table_len as u64).map(weight_of).collect();

    let mut out = vec![0u8; w * h];
    out.par_chunks_mut(BAND_ROWS * w)
        .enumerate()
        .for_each(|(band, chunk)| {
            let y0 = band * BAND_ROWS;
            let rows = chunk.len() / w;
            // summed-area table over patch-extended band: (rows + 2r) x (w + 2r)
            let tr = rows + 2 * r;
            let tc = w + 2 * r;
            let mut sat = vec![0u64; (tr + 1) * (tc + 1)];
            let mut weight_sum = vec![0f64; rows * w];
            let mut value_sum = vec![0f64; rows * w];

            for dy in -big_r..=big_r {
                for dx in -big_r..=big_r {
                    for i in 0..tr {
                        let yy = (y0 + i) as isize - r as isize;
                        let mut row_acc = 0u64;
                        for j in 0..tc {
                            let xx = j as isize - r as isize;
                            let d = padded.at(xx, yy) - padded.at(xx + dx, yy + dy);
                            row_acc += (d * d) as u64;
                            sat[(i + 1) * (tc + 1) + j + 1] = sat[i * (tc + 1) + j + 1] + row_acc;
                        }
                    }
                    let side = 2 * r + 1;
                    for ly in 0..rows {
                        let y = (y0 + ly) as isize;
                        for x in 0..w {
                            let top = ly * (tc + 1);
                            let bot = (ly + side) * (tc + 1);
                            let ssd = sat[bot + x + side] + sat[top + x]
                                - sat[top + x + side]
                                - sat[bot + x];
                            let wgt = match weights.get(ssd as usize) {
                                Some(&v) => v,
                                None => weight_of(ssd),
                            };
                            let idx = ly * w + x;
                            weight_sum[idx] += wgt;
                            value_sum[idx] += wgt * f64::from(padded.at(x as isize + dx, y + dy));
                        }
                    }
                }
            }

            for (o, (&vs, &ws)) in chunk.iter_mut().zip(value_sum.iter().zip(&weight_sum)) {
                *o = quantize(vs / ws);
            }
        });

    GrayImage::new(w, h, out)
}

/// NLM over every bit of the image.
pub fn denoise_full(img: &GrayImage, params: &NlmParams) -> Result<GrayImage> {
    nlm_denoise(img, params)
}

/// Denoises only the two least significant bit planes, each as its own
/// binary image, and splices them back under the untouched six MSB planes.
pub fn denoise_partial(img: &GrayImage, params: &NlmParams) -> Result<GrayImage> {
    params.validate()?;
    let stack = bitplane::slice(img);
    let mut replacement = BitPlaneStack::zeros(img.width(), img.height());
    for k in PlaneMask::LSB2.indices() {
        let plane = denoise_plane(&stack, k, params)?;
        replacement.set_plane(k, &plane)?;
    }
    let spliced = bitplane::replace_planes(&stack, PlaneMask::LSB2, &replacement)?;
    Ok(bitplane::recompose(&spliced, PlaneMask::ORIGINAL))
}

/// Denoised, re-binarised copy of plane `k`.
pub fn denoise_plane(stack: &BitPlaneStack, k: usize, params: &NlmParams) -> Result<Vec<u8>> {
    let plane = stack.plane_image(k, PLANE_LEVEL);
    let denoised = nlm_denoise(&plane, params)?;
    let half = u16::from(PLANE_LEVEL);
    Ok(denoised
        .pixels()
        .iter()
        .map(|&v| u8::from(2 * u16::from(v) >= half))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(NlmParams::default().validate().is_ok());
        assert!(NlmParams::new(0.0, 3, 10).is_err());
        assert!(NlmParams::new(-1.0, 3, 10).is_err());
        assert!(NlmParams::new(f64::NAN, 3, 10).is_err());
        assert!(NlmParams::new(10.0, 0, 10).is_err());
        assert!(NlmParams::new(10.0, 3, 2).is_err());
        assert!(NlmParams::new(10.0, 3, 3).is_ok());
    }

    #[test]
    fn invalid_params_are_reported_by_every_entry_point() {
        let img = GrayImage::filled(4, 4, 1).unwrap();
        let bad = NlmParams {
            h: 0.0,
            ..NlmParams::default()
        };
        assert!(matches!(nlm_denoise(&img, &bad), Err(Error::InvalidParams(_))));
        assert!(matches!(denoise_full(&img, &bad), Err(Error::InvalidParams(_))));
        assert!(matches!(denoise_partial(&img, &bad), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn constant_image_is_a_fixed_point() {
        let img = GrayImage::filled(13, 9, 128).unwrap();
        assert_eq!(nlm_denoise(&img, &NlmParams::default()).unwrap(), img);
        assert_eq!(denoise_full(&img, &NlmParams::default()).unwrap(), img);
    }

    #[test]
    fn impulse_is_attenuated_with_a_9x9_patch() {
        let mut px = vec![0u8; 81];
        px[40] = 255;
        let img = GrayImage::new(9, 9, px).unwrap();
        let out = nlm_denoise(&img, &NlmParams::new(10.0, 4, 10).unwrap()).unwrap();
        assert!(out.get(4, 4) < 255);
        assert_eq!(out.get(0, 0), 0);
    }

    #[test]
    fn quantize_rounds_half_up() {
        assert_eq!(quantize(0.49), 0);
        assert_eq!(quantize(0.5), 1);
        assert_eq!(quantize(254.5), 255);
        assert_eq!(quantize(300.0), 255);
        assert_eq!(quantize(-3.0), 0);
    }

    #[test]
    fn partial_keeps_msb_planes() {
        let img = GrayImage::from_fn(23, 17, |x, y| ((x * 37 + y * 91) % 256) as u8).unwrap();
        let out = denoise_partial(&img, &NlmParams::new(10.0, 1, 4).unwrap()).unwrap();
        for (&a, &b) in img.pixels().iter().zip(out.pixels()) {
            assert_eq!(a & 0xFC, b & 0xFC);
        }
    }

    #[test]
    fn constant_lsb_planes_are_left_alone() {
        // bits 0-1 constant (0b01) everywhere, MSBs vary
        let img = GrayImage::from_fn(16, 16, |x, y| (((x + 3 * y) % 64) as u8) << 2 | 1).unwrap();
        assert_eq!(denoise_partial(&img, &NlmParams::default()).unwrap(), img);
    }
}
