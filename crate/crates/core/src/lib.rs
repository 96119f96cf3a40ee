//! Bit-plane slicing, selective non-local-means denoising, image quality
//! scoring, Otsu features and tree classifiers for X-ray fracture studies.
//!
//! The numeric modules ([`metrics`], [`features`], [`classify`]) are generic
//! over a [`Real`] scalar; the aliases at the crate root pin them to `f64`,
//! which is what the experiment [`harness`] uses.

pub mod bitplane;
pub mod classify;
pub mod denoise;
pub mod error;
pub mod features;
pub mod harness;
pub mod image;
pub mod metrics;
pub mod scalar;
pub mod synth;

pub use crate::bitplane::{BitPlaneStack, PlaneMask};
pub use crate::denoise::NlmParams;
pub use crate::error::{Error, Result};
pub use crate::image::GrayImage;
pub use crate::scalar::Real;

pub type FeatureVector = features::FeatureVector<f64>;
pub type Dataset = classify::Dataset<f64>;
pub type Sample = classify::Sample<f64>;
pub type TreeModel = classify::TreeModel<f64>;
pub type ForestModel = classify::ForestModel<f64>;
pub type SsimParams = metrics::SsimParams<f64>;
pub type QualityScore = metrics::QualityScore<f64>;
