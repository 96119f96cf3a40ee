//! Experiment harness: dataset ingestion, the five image representations,
//! quality and classification runs, and report/chart output.

mod charts;
mod experiment;
mod export;
mod external;
mod ingest;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bitplane::{self, PlaneMask};
use crate::denoise::{self, NlmParams};
use crate::error::{Error, Result};
use crate::image::GrayImage;

pub use charts::{emit_charts, render_chart_svg};
pub use experiment::{
    quality_table, run_experiment, ClassRow, ClassifierKind, DatasetEcho, ExperimentConfig,
    ExperimentReport, Extractor, QualityRow, SplitConfig, REPORT_SCHEMA,
};
pub use export::{export_representations, representation_file_name, LABELS_FILE};
pub use external::{
    load_external_features, read_external_features, write_external_features, FeatureRow, FeatureTable,
};
pub use ingest::{
    ingest, ImageEntry, IngestMode, LabeledImageSet, Provenance, FRACTURED_DIR, MANIFEST_FILE,
    NON_FRACTURED_DIR,
};
pub use report::{
    emit_report, format_number, read_report, write_classification_csv, write_quality_csv,
    CLASSIFICATION_FILE, CLASSIFICATION_HEADER, QUALITY_FILE, QUALITY_HEADER, REPORT_FILE,
};

/// The five inputs compared by the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Original,
    Msb4,
    Lsb4,
    FullDenoised,
    PartialDenoised,
}

impl Representation {
    pub const ALL: [Representation; 5] = [
        Representation::Original,
        Representation::Msb4,
        Representation::Lsb4,
        Representation::FullDenoised,
        Representation::PartialDenoised,
    ];

    /// Machine name used in file names, CSV cells and CLI flags.
    pub fn name(self) -> &'static str {
        match self {
            Representation::Original => "original",
            Representation::Msb4 => "msb4",
            Representation::Lsb4 => "lsb4",
            Representation::FullDenoised => "full_denoised",
            Representation::PartialDenoised => "partial_denoised",
        }
    }

    /// Human-readable label for charts.
    pub fn label(self) -> &'static str {
        match self {
            Representation::Original => "Original",
            Representation::Msb4 => "MSB (4 bit)",
            Representation::Lsb4 => "LSB (4 bit)",
            Representation::FullDenoised => "Full Denoised",
            Representation::PartialDenoised => "Partial Denoised",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Representation::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParams(format!("unknown representation {s:?}")))
    }
}

pub fn build_representation(img: &GrayImage, rep: Representation, nlm: &NlmParams) -> Result<GrayImage> {
    match rep {
        Representation::Original => Ok(img.clone()),
        Representation::Msb4 => Ok(bitplane::recompose(&bitplane::slice(img), PlaneMask::MSB4)),
        Representation::Lsb4 => Ok(bitplane::recompose(&bitplane::slice(img), PlaneMask::LSB4)),
        Representation::FullDenoised => denoise::denoise_full(img, nlm),
        Representation::PartialDenoised => denoise::denoise_partial(img, nlm),
    }
}

/// Maps binary {0, 1} rasters to {0, 255} for viewing; other values pass
/// through unchanged.
pub fn display_scaled(img: &GrayImage) -> GrayImage {
    img.map(|p| if p == 1 { 255 } else { p })
}
