//! Otsu thresholding and the six-value foreground/background feature vector.
//!
//! Layout of a handcrafted vector:
//! `[fg_mean, fg_var, fg_std, bg_mean, bg_var, bg_std]`, where foreground
//! is every pixel strictly above the Otsu threshold. Statistics cover only
//! the pixels of each class; an empty class yields zeros.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::scalar::Real;

pub const HANDCRAFTED_DIM: usize = 6;
pub const HANDCRAFTED_NAMES: [&str; HANDCRAFTED_DIM] =
    ["fg_mean", "fg_var", "fg_std", "bg_mean", "bg_var", "bg_std"];

/// Ordered feature values; never contains NaN.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector<T>(Vec<T>);

impl<T: Real> FeatureVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::InvalidParams(format!("feature {i} is NaN")));
        }
        Ok(FeatureVector(values))
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

impl<T> std::ops::Index<usize> for FeatureVector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

/// 1 = foreground.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl BinaryMask {
    /// Foreground is `pixel > threshold`.
    pub fn above(img: &GrayImage, threshold: u8) -> Self {
        BinaryMask {
            width: img.width(),
            height: img.height(),
            bits: img.pixels().iter().map(|&p| u8::from(p > threshold)).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[must_use]
    pub fn inverted(&self) -> Self {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|&b| 1 - b).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

pub fn histogram(img: &GrayImage) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    hist
}

/// Threshold `t` in `0..=254` maximising the between-class variance
/// `w0 * w1 * (mu0 - mu1)^2` of the split `{p <= t} | {p > t}`. The first
/// (smallest) maximiser wins.
pub fn otsu_threshold(img: &GrayImage) -> Result<u8> {
    otsu_from_histogram(&histogram(img))
}

pub fn otsu_from_histogram(hist: &[u64; 256]) -> Result<u8> {
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::DegenerateHistogram);
    }
    let total_n: u64 = hist.iter().sum();
    let total_s: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();

    // Up to a positive constant the between-class variance is
    // (n1*s0 - n0*s1)^2 / (n0*n1); the bracket is formed exactly.
    let (mut n0, mut s0) = (0u64, 0u64);
    let mut best: Option<(u8, f64)> = None;
    for t in 0..255usize {
        n0 += hist[t];
        s0 += t as u64 * hist[t];
        let n1 = total_n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s1 = total_s - s0;
        let cross = i128::from(n1) * i128::from(s0) - i128::from(n0) * i128::from(s1);
        let cross = cross as f64;
        let score = cross * cross / (n0 as f64 * n1 as f64);
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((t as u8, score));
        }
    }
    best.map(|(t, _)| t).ok_or(Error::DegenerateHistogram)
}

/// Mean, population variance and standard deviation of the selected pixels.
fn class_stats<T: Real>(values: impl Iterator<Item = u8>) -> [T; 3] {
    let (mut n, mut s, mut ss) = (0u64, 0u64, 0u64);
    for v in values {
        let v = u64::from(v);
        n += 1;
        s += v;
        ss += v * v;
    }
    if n == 0 {
        return [T::zero(); 3];
    }
    let mean = T::from_u64_lossy(s) / T::from_u64_lossy(n);
    // n*ss - s^2 >= 0 by Cauchy-Schwarz; computed exactly before scaling
    let scaled = u128::from(n) * u128::from(ss) - u128::from(s) * u128::from(s);
    let nn = T::from_u64_lossy(n);
    let var = T::from_f64_lossy(scaled as f64) / (nn * nn);
    [mean, var, var.sqrt()]
}

pub fn handcrafted_features<T: Real>(img: &GrayImage) -> Result<FeatureVector<T>> {
    let t = otsu_threshold(img)?;
    Ok(features_at_threshold(img, t))
}

pub fn features_at_threshold<T: Real>(img: &GrayImage, threshold: u8) -> FeatureVector<T> {
    let mask = BinaryMask::above(img, threshold);
    let select = |want: u8| {
        img.pixels()
            .iter()
            .zip(mask.bits())
            .filter(move |(_, &m)| m == want)
            .map(|(&p, _)| p)
    };
    let fg: [T; 3] = class_stats(select(1));
    let bg: [T; 3] = class_stats(select(0));
    FeatureVector(vec![fg[0], fg[1], fg[2], bg[0], bg[1], bg[2]])
}
