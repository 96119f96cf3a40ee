//! Image quality scores: mean-squared SNR in decibels and SSIM.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::scalar::Real;

/// `10 * log10(sum(test^2) / sum((reference - test)^2))`.
///
/// Returns `+inf` when the images are identical and `-inf` when `test` is
/// all zeros but differs from `reference`. Both power sums are exact
/// integers; the ratio is evaluated as a difference of logarithms so that
/// swapping the roles of signal and noise flips the sign exactly.
pub fn snr_db<T: Real>(reference: &GrayImage, test: &GrayImage) -> Result<T> {
    reference.check_same_dims(test)?;
    let (mut signal, mut noise) = (0u64, 0u64);
    for (&f, &g) in reference.pixels().iter().zip(test.pixels()) {
        let d = u64::from(f.abs_diff(g));
        let g = u64::from(g);
        signal += g * g;
        noise += d * d;
    }
    if noise == 0 {
        return Ok(T::infinity());
    }
    if signal == 0 {
        return Ok(T::neg_infinity());
    }
    let ten = T::from_f64_lossy(10.0);
    Ok(ten * (T::from_u64_lossy(signal).log10() - T::from_u64_lossy(noise).log10()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SsimWindow<T> {
    /// One evaluation over whole-image statistics.
    Global,
    /// Mean over every fully contained `side x side` Gaussian window.
    Sliding { side: usize, sigma: T },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsimParams<T> {
    pub k1: T,
    pub k2: T,
    pub dynamic_range: T,
    pub window: SsimWindow<T>,
}

impl<T: Real> Default for SsimParams<T> {
    fn default() -> Self {
        SsimParams {
            k1: T::from_f64_lossy(0.01),
            k2: T::from_f64_lossy(0.03),
            dynamic_range: T::from_f64_lossy(255.0),
            window: SsimWindow::Sliding {
                side: 11,
                sigma: T::from_f64_lossy(1.5),
            },
        }
    }
}

impl<T: Real> SsimParams<T> {
    pub fn global() -> Self {
        SsimParams {
            window: SsimWindow::Global,
            ..Self::default()
        }
    }

    pub fn c1(&self) -> T {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> T {
        (self.k2 * self.dynamic_range).powi(2)
    }

    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        if !(self.k1 > zero && self.k2 > zero && self.dynamic_range > zero) {
            return Err(Error::InvalidParams(
                "SSIM k1, k2 and dynamic range must be positive".into(),
            ));
        }
        if let SsimWindow::Sliding { side, sigma } = self.window {
            if side % 2 == 0 {
                return Err(Error::InvalidParams(format!("SSIM window side {side} is even")));
            }
            if !(sigma > zero) {
                return Err(Error::InvalidParams("SSIM Gaussian sigma must be positive".into()));
            }
        }
        Ok(())
    }
}

/// SNR and SSIM of one image against its reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityScore<T> {
    pub snr_db: T,
    pub ssim: T,
}

impl<T: Real> QualityScore<T> {
    pub fn ssim_percent(&self) -> T {
        self.ssim * T::from_f64_lossy(100.0)
    }
}

pub fn quality<T: Real>(
    reference: &GrayImage,
    test: &GrayImage,
    params: &SsimParams<T>,
) -> Result<QualityScore<T>> {
    Ok(QualityScore {
        snr_db: snr_db(reference, test)?,
        ssim: ssim(reference, test, params)?,
    })
}

/// Local statistics feeding one SSIM evaluation. Variances and covariance
/// are population (divide-by-n) moments.
struct Moments<T> {
    mean_x: T,
    mean_y: T,
    var_x: T,
    var_y: T,
    cov: T,
}

#[inline]
fn ssim_from_moments<T: Real>(m: &Moments<T>, c1: T, c2: T) -> T {
    let two = T::from_f64_lossy(2.0);
    let num = (two * m.mean_x * m.mean_y + c1) * (two * m.cov + c2);
    let den = (m.mean_x * m.mean_x + m.mean_y * m.mean_y + c1) * (m.var_x + m.var_y + c2);
    (num / den).max(-T::one()).min(T::one())
}

pub fn ssim<T: Real>(x: &GrayImage, y: &GrayImage, params: &SsimParams<T>) -> Result<T> {
    x.check_same_dims(y)?;
    params.validate()?;
    let (c1, c2) = (params.c1(), params.c2());
    match params.window {
        SsimWindow::Global => Ok(ssim_from_moments(&global_moments(x, y), c1, c2)),
        SsimWindow::Sliding { side, sigma } => {
            if side > x.width() || side > x.height() {
                return Err(Error::WindowTooLarge {
                    side,
                    width: x.width(),
                    height: x.height(),
                });
            }
            Ok(sliding_ssim(x, y, side, sigma, c1, c2))
        }
    }
}

fn global_moments<T: Real>(x: &GrayImage, y: &GrayImage) -> Moments<T> {
    let n = T::from_u64_lossy(x.len() as u64);
    let to = |p: &u8| T::from_u64_lossy(u64::from(*p));
    let mean_x = x.pixels().iter().map(to).fold(T::zero(), |a, b| a + b) / n;
    let mean_y = y.pixels().iter().map(to).fold(T::zero(), |a, b| a + b) / n;
    let (mut var_x, mut var_y, mut cov) = (T::zero(), T::zero(), T::zero());
    for (a, b) in x.pixels().iter().zip(y.pixels()) {
        let da = to(a) - mean_x;
        let db = to(b) - mean_y;
        var_x = var_x + da * da;
        var_y = var_y + db * db;
        cov = cov + da * db;
    }
    Moments {
        mean_x,
        mean_y,
        var_x: var_x / n,
        var_y: var_y / n,
        cov: cov / n,
    }
}

/// Normalised 1-D Gaussian taps; the 2-D window is their outer product.
fn gaussian_taps<T: Real>(side: usize, sigma: T) -> Vec<T> {
    let half = (side / 2) as f64;
    let s = sigma.to_f64_lossy();
    let raw: Vec<f64> = (0..side)
        .map(|i| {
            let d = i as f64 - half;
            (-(d * d) / (2.0 * s * s)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| T::from_f64_lossy(v / total)).collect()
}

/// Separable "valid" filtering: returns a `(w - side + 1) x (h - side + 1)`
/// map of Gaussian-weighted local means of `values`.
fn filter_valid<T: Real>(values: &[T], w: usize, h: usize, taps: &[T]) -> Vec<T> {
    let side = taps.len();
    let ow = w - side + 1;
    let oh = h - side + 1;
    let mut horiz = vec![T::zero(); ow * h];
    for yy in 0..h {
        let row = &values[yy * w..(yy + 1) * w];
        for xx in 0..ow {
            horiz[yy * ow + xx] = taps
                .iter()
                .zip(&row[xx..xx + side])
                .fold(T::zero(), |acc, (&t, &v)| acc + t * v);
        }
    }
    let mut out = vec![T::zero(); ow * oh];
    for yy in 0..oh {
        for xx in 0..ow {
            out[yy * ow + xx] = taps
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (k, &t)| acc + t * horiz[(yy + k) * ow + xx]);
        }
    }
    out
}

fn sliding_ssim<T: Real>(x: &GrayImage, y: &GrayImage, side: usize, sigma: T, c1: T, c2: T) -> T {
    let (w, h) = (x.width(), x.height());
    let taps = gaussian_taps(side, sigma);
    let to = |p: &u8| T::from_u64_lossy(u64::from(*p));
    let xs: Vec<T> = x.pixels().iter().map(to).collect();
    let ys: Vec<T> = y.pixels().iter().map(to).collect();
    let xx: Vec<T> = xs.iter().map(|&v| v * v).collect();
    let yy: Vec<T> = ys.iter().map(|&v| v * v).collect();
    let xy: Vec<T> = xs.iter().zip(&ys).map(|(&a, &b)| a * b).collect();

    let mx = filter_valid(&xs, w, h, &taps);
    let my = filter_valid(&ys, w, h, &taps);
    let mxx = filter_valid(&xx, w, h, &taps);
    let myy = filter_valid(&yy, w, h, &taps);
    let mxy = filter_valid(&xy, w, h, &taps);

    let mut total = T::zero();
    for i in 0..mx.len() {
        let m = Moments {
            mean_x: mx[i],
            mean_y: my[i],
            var_x: mxx[i] - mx[i] * mx[i],
            var_y: myy[i] - my[i] * my[i],
            cov: mxy[i] - mx[i] * my[i],
        };
        total = total + ssim_from_moments(&m, c1, c2);
    }
    total / T::from_u64_lossy(mx.len() as u64)
}
