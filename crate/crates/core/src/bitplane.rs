//! Bit-plane decomposition of 8-bit images and recomposition from plane
//! subsets.
//!
//! Recomposition keeps positional weights: plane `k` contributes `2^k`, so
//! the 4-MSB view of 170 (`0b1010_1010`) is 160, not a rescaled value.

use std::fmt;

use crate::error::{Error, Result};
use crate::image::GrayImage;

pub const PLANE_COUNT: usize = 8;

/// Subset of plane indices `0..8`, stored as a bitmask where bit `k` selects
/// plane `k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct PlaneMask(u8);

impl PlaneMask {
    pub const EMPTY: PlaneMask = PlaneMask(0);
    pub const ORIGINAL: PlaneMask = PlaneMask(0xFF);
    pub const MSB4: PlaneMask = PlaneMask(0xF0);
    pub const LSB4: PlaneMask = PlaneMask(0x0F);
    pub const MSB6: PlaneMask = PlaneMask(0xFC);
    pub const LSB2: PlaneMask = PlaneMask(0x03);

    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        let mut bits = 0u8;
        for &k in indices {
            if k >= PLANE_COUNT {
                return Err(Error::InvalidParams(format!(
                    "plane index {k} outside 0..{PLANE_COUNT}"
                )));
            }
            if bits & (1 << k) != 0 {
                return Err(Error::InvalidParams(format!("plane index {k} repeated")));
            }
            bits |= 1 << k;
        }
        Ok(PlaneMask(bits))
    }

    #[inline]
    pub const fn bits(self) -> u8 {
        self.0
    }

    #[inline]
    pub const fn from_bits(bits: u8) -> Self {
        PlaneMask(bits)
    }

    #[inline]
    pub const fn contains(self, plane: usize) -> bool {
        plane < PLANE_COUNT && self.0 & (1 << plane) != 0
    }

    #[must_use]
    pub const fn with(self, plane: usize) -> Self {
        if plane < PLANE_COUNT {
            PlaneMask(self.0 | (1 << plane))
        } else {
            self
        }
    }

    #[must_use]
    pub const fn complement(self) -> Self {
        PlaneMask(!self.0)
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..PLANE_COUNT).filter(move |&k| self.contains(k))
    }
}

impl fmt::Display for PlaneMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, k) in self.indices().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}")?;
        }
        f.write_str("}")
    }
}

/// Eight binary rasters, index 0 = LSB, index 7 = MSB. Every entry is 0 or 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitPlaneStack {
    width: usize,
    height: usize,
    planes: [Vec<u8>; PLANE_COUNT],
}

impl BitPlaneStack {
    /// Planes must match `width * height` and hold only 0/1 values.
    pub fn from_planes(width: usize, height: usize, planes: [Vec<u8>; PLANE_COUNT]) -> Result<Self> {
        for (k, plane) in planes.iter().enumerate() {
            if plane.len() != width * height {
                return Err(Error::DimensionMismatch(format!(
                    "plane {k} has {} entries, expected {}",
                    plane.len(),
                    width * height
                )));
            }
            if plane.iter().any(|&b| b > 1) {
                return Err(Error::InvalidParams(format!("plane {k} is not binary")));
            }
        }
        Ok(BitPlaneStack {
            width,
            height,
            planes,
        })
    }

    /// All-zero stack of the given size.
    pub fn zeros(width: usize, height: usize) -> Self {
        BitPlaneStack {
            width,
            height,
            planes: std::array::from_fn(|_| vec![0; width * height]),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn plane(&self, k: usize) -> &[u8] {
        &self.planes[k]
    }

    /// Replaces plane `k` with the binarised `plane` (non-zero -> 1).
    pub fn set_plane(&mut self, k: usize, plane: &[u8]) -> Result<()> {
        if k >= PLANE_COUNT {
            return Err(Error::InvalidParams(format!("plane index {k}")));
        }
        if plane.len() != self.width * self.height {
            return Err(Error::DimensionMismatch(format!(
                "plane has {} entries, expected {}",
                plane.len(),
                self.width * self.height
            )));
        }
        self.planes[k] = plane.iter().map(|&b| u8::from(b != 0)).collect();
        Ok(())
    }

    /// Plane `k` as an image with set bits mapped to `on` and clear bits to 0.
    pub fn plane_image(&self, k: usize, on: u8) -> GrayImage {
        let pixels = self.planes[k].iter().map(|&b| b * on).collect();
        GrayImage::new(self.width, self.height, pixels).expect("stack dimensions are valid")
    }
}

pub fn slice(img: &GrayImage) -> BitPlaneStack {
    let planes = std::array::from_fn(|k| img.pixels().iter().map(|&p| (p >> k) & 1).collect());
    BitPlaneStack {
        width: img.width(),
        height: img.height(),
        planes,
    }
}

/// `out(x, y) = sum over k in mask of plane_k(x, y) * 2^k`.
pub fn recompose(stack: &BitPlaneStack, mask: PlaneMask) -> GrayImage {
    let mut pixels = vec![0u8; stack.width * stack.height];
    for k in mask.indices() {
        for (out, &bit) in pixels.iter_mut().zip(&stack.planes[k]) {
            *out |= bit << k;
        }
    }
    GrayImage::new(stack.width, stack.height, pixels).expect("stack dimensions are valid")
}

/// Takes the planes selected by `mask` from `replacement` and the rest from
/// `stack`.
pub fn replace_planes(
    stack: &BitPlaneStack,
    mask: PlaneMask,
    replacement: &BitPlaneStack,
) -> Result<BitPlaneStack> {
    if stack.width != replacement.width || stack.height != replacement.height {
        return Err(Error::DimensionMismatch(format!(
            "stack {}x{} vs replacement {}x{}",
            stack.width, stack.height, replacement.width, replacement.height
        )));
    }
    let planes = std::array::from_fn(|k| {
        if mask.contains(k) {
            replacement.planes[k].clone()
        } else {
            stack.planes[k].clone()
        }
    });
    Ok(BitPlaneStack {
        width: stack.width,
        height: stack.height,
        planes,
    })
}
