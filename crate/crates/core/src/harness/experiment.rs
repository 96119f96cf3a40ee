use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::external::{load_external_features, FeatureTable};
use super::ingest::{ImageEntry, LabeledImageSet, Provenance};
use super::{build_representation, Representation};
use crate::classify::{
    evaluate, fit_forest, fit_tree, stratified_partition, Confusion, Dataset, ForestParams, Label,
    Partition, Sample, TreeParams,
};
use crate::denoise::NlmParams;
use crate::error::{Error, Result};
use crate::features::{features_at_threshold, handcrafted_features, FeatureVector};
use crate::image::GrayImage;
use crate::metrics::{quality, SsimParams};

pub const REPORT_SCHEMA: &str = "bitplane-lab/report/v1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "path", rename_all = "snake_case")]
pub enum Extractor {
    Handcrafted,
    ExternalCsv(PathBuf),
}

impl Extractor {
    /// Name used in report rows and chart file names.
    pub fn name(&self) -> &'static str {
        match self {
            Extractor::Handcrafted => "handcrafted",
            Extractor::ExternalCsv(_) => "external",
        }
    }
}

impl FromStr for Extractor {
    type Err = Error;

    /// `handcrafted` or `csv:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            _ if s == "handcrafted" => Ok(Extractor::Handcrafted),
            Some(("csv", path)) if !path.is_empty() => Ok(Extractor::ExternalCsv(PathBuf::from(path))),
            _ => Err(Error::InvalidParams(format!(
                "extractor must be handcrafted or csv:<path>, got {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    DecisionTree,
    RandomForest,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::RandomForest => "random_forest",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ClassifierKind::DecisionTree => "Decision Tree",
            ClassifierKind::RandomForest => "Random Forest",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    /// Accepts `dt`/`rf` or the full names.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dt" | "decision_tree" => Ok(ClassifierKind::DecisionTree),
            "rf" | "random_forest" => Ok(ClassifierKind::RandomForest),
            other => Err(Error::InvalidParams(format!("unknown classifier {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_fraction: 0.2,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub representations: Vec<Representation>,
    pub extractors: Vec<Extractor>,
    pub classifiers: Vec<ClassifierKind>,
    pub nlm: NlmParams,
    pub ssim: SsimParams<f64>,
    pub split: SplitConfig,
    pub tree: TreeParams,
    pub forest: ForestParams,
    /// Where the CLI writes outputs. Not echoed into reports, so identical
    /// runs into different directories produce identical bytes.
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            representations: Representation::ALL.to_vec(),
            extractors: vec![Extractor::Handcrafted],
            classifiers: vec![ClassifierKind::DecisionTree, ClassifierKind::RandomForest],
            nlm: NlmParams::default(),
            ssim: SsimParams::default(),
            split: SplitConfig::default(),
            tree: TreeParams::default(),
            forest: ForestParams::default(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Sets the split, tree and forest seeds together.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.split.seed = seed;
        self.tree.rng_seed = seed;
        self.forest.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.representations.is_empty() {
            return Err(Error::InvalidParams("no representations selected".into()));
        }
        if self.extractors.is_empty() {
            return Err(Error::InvalidParams("no feature extractors selected".into()));
        }
        if self.classifiers.is_empty() {
            return Err(Error::InvalidParams("no classifiers selected".into()));
        }
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return Err(Error::InvalidParams(format!(
                "test fraction must lie in (0, 1), got {}",
                self.split.test_fraction
            )));
        }
        self.nlm.validate()?;
        self.ssim.validate()?;
        self.tree.validate()?;
        self.forest.validate()
    }

    /// Selected representations in canonical order without repeats.
    fn reps(&self) -> Vec<Representation> {
        let mut r = self.representations.clone();
        r.sort();
        r.dedup();
        r
    }

    fn classifiers(&self) -> Vec<ClassifierKind> {
        let mut c = self.classifiers.clone();
        c.sort();
        c.dedup();
        c
    }

    fn extractors(&self) -> Vec<Extractor> {
        let mut out: Vec<Extractor> = Vec::new();
        for e in &self.extractors {
            if !out.contains(e) {
                out.push(e.clone());
            }
        }
        out
    }
}

/// Quality of one representation of one image against its original.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityRow {
    pub image_id: String,
    pub representation: Representation,
    #[serde(with = "signed_infinity")]
    pub snr_db: f64,
    pub ssim: f64,
}

impl QualityRow {
    pub fn ssim_percent(&self) -> f64 {
        self.ssim * 100.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub extractor: String,
    pub classifier: ClassifierKind,
    pub representation: Representation,
    pub accuracy: f64,
    pub f1: f64,
    pub confusion: Confusion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetEcho {
    pub provenance: Provenance,
    pub images: usize,
    /// `[non_fractured, fractured]`
    pub class_counts: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub config: ExperimentConfig,
    pub dataset: DatasetEcho,
    pub partition: Partition,
    pub quality_rows: Vec<QualityRow>,
    pub class_rows: Vec<ClassRow>,
}

/// Per-image results: quality rows plus optional handcrafted features per
/// representation.
struct ImageResult {
    quality: Vec<QualityRow>,
    features: Vec<FeatureVector<f64>>,
}

fn process_image(
    set: &LabeledImageSet,
    entry: &ImageEntry,
    reps: &[Representation],
    config: &ExperimentConfig,
    want_features: bool,
) -> Result<ImageResult> {
    let original = set.load(entry)?;
    let mut quality_rows = Vec::with_capacity(reps.len());
    let mut features = Vec::new();
    for &rep in reps {
        let img = build_representation(&original, rep, &config.nlm)?;
        let (snr_db, ssim) = if rep == Representation::Original {
            (f64::INFINITY, 1.0)
        } else {
            let q = quality::<f64>(&original, &img, &config.ssim)?;
            (q.snr_db, q.ssim)
        };
        quality_rows.push(QualityRow {
            image_id: entry.id.clone(),
            representation: rep,
            snr_db,
            ssim,
        });
        if want_features {
            features.push(handcrafted_or_flat(&img)?);
        }
    }
    Ok(ImageResult {
        quality: quality_rows,
        features,
    })
}

/// Otsu features, except that a single-valued image (no threshold exists)
/// is all background.
fn handcrafted_or_flat(img: &GrayImage) -> Result<FeatureVector<f64>> {
    match handcrafted_features(img) {
        Err(Error::DegenerateHistogram) => Ok(features_at_threshold(img, img.pixels()[0])),
        other => other,
    }
}

fn process_all(set: &LabeledImageSet, config: &ExperimentConfig, want_features: bool) -> Result<Vec<ImageResult>> {
    if set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let reps = config.reps();
    set.entries
        .par_iter()
        .map(|e| process_image(set, e, &reps, config, want_features))
        .collect()
}

/// SNR and SSIM of every selected representation of every image, ordered
/// by image id then representation.
pub fn quality_table(set: &LabeledImageSet, config: &ExperimentConfig) -> Result<Vec<QualityRow>> {
    config.nlm.validate()?;
    config.ssim.validate()?;
    Ok(process_all(set, config, false)?
        .into_iter()
        .flat_map(|r| r.quality)
        .collect())
}

/// Runs every (extractor, classifier, representation) cell on one shared
/// stratified train/test partition.
pub fn run_experiment(set: &LabeledImageSet, config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let reps = config.reps();
    let extractors = config.extractors();
    let classifiers = config.classifiers();
    let want_handcrafted = extractors.contains(&Extractor::Handcrafted);

    let externals: BTreeMap<PathBuf, FeatureTable> = extractors
        .iter()
        .filter_map(|e| match e {
            Extractor::ExternalCsv(p) => Some(p.clone()),
            Extractor::Handcrafted => None,
        })
        .map(|p| Ok((p.clone(), load_external_features(&p)?)))
        .collect::<Result<_>>()?;

    let results = process_all(set, config, want_handcrafted)?;

    let labels_only = Dataset::<f64>::new(
        0,
        set.entries
            .iter()
            .map(|e| Sample {
                id: e.id.clone(),
                features: FeatureVector::new(Vec::new()).expect("empty vector is valid"),
                label: e.label,
            })
            .collect(),
    )?;
    let partition = stratified_partition(&labels_only, config.split.test_fraction, config.split.seed)?;

    let mut class_rows = Vec::new();
    for extractor in &extractors {
        for &classifier in &classifiers {
            for (ri, &rep) in reps.iter().enumerate() {
                let dataset = match extractor {
                    Extractor::Handcrafted => handcrafted_dataset(set, &results, ri)?,
                    Extractor::ExternalCsv(p) => external_dataset(set, &externals[p], rep)?,
                };
                let (train, test) = partition.apply(&dataset)?;
                let eval = match classifier {
                    ClassifierKind::DecisionTree => evaluate(&fit_tree(&train, &config.tree)?, &test)?,
                    ClassifierKind::RandomForest => evaluate(&fit_forest(&train, &config.forest)?, &test)?,
                };
                class_rows.push(ClassRow {
                    extractor: extractor.name().to_string(),
                    classifier,
                    representation: rep,
                    accuracy: eval.accuracy,
                    f1: eval.f1,
                    confusion: eval.confusion,
                });
            }
        }
    }

    Ok(ExperimentReport {
        schema: REPORT_SCHEMA.to_string(),
        config: config.clone(),
        dataset: DatasetEcho {
            provenance: set.provenance,
            images: set.len(),
            class_counts: set.class_counts(),
        },
        partition,
        quality_rows: results.into_iter().flat_map(|r| r.quality).collect(),
        class_rows,
    })
}

fn handcrafted_dataset(set: &LabeledImageSet, results: &[ImageResult], rep_index: usize) -> Result<Dataset<f64>> {
    let rows = set
        .entries
        .iter()
        .zip(results)
        .map(|(e, r)| Sample {
            id: e.id.clone(),
            features: r.features[rep_index].clone(),
            label: e.label,
        })
        .collect();
    Dataset::new(crate::features::HANDCRAFTED_DIM, rows)
}

fn external_dataset(set: &LabeledImageSet, table: &FeatureTable, rep: Representation) -> Result<Dataset<f64>> {
    let index: BTreeMap<&str, (&FeatureVector<f64>, Label)> = table
        .rows
        .iter()
        .filter(|r| r.representation == rep)
        .map(|r| (r.image_id.as_str(), (&r.features, r.label)))
        .collect();
    let rows = set
        .entries
        .iter()
        .map(|e| {
            let (features, label) = index.get(e.id.as_str()).ok_or_else(|| {
                Error::FeatureJoinMismatch(format!("no external features for image {} ({rep})", e.id))
            })?;
            if *label != e.label {
                return Err(Error::FeatureJoinMismatch(format!(
                    "image {} is labelled {} in the dataset but {label} in the feature file",
                    e.id, e.label
                )));
            }
            Ok(Sample {
                id: e.id.clone(),
                features: (*features).clone(),
                label: e.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(table.feature_dim, rows)
}

/// JSON has no infinities: they are written as the strings `"inf"` and
/// `"-inf"`.
mod signed_infinity {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number, got {t:?}"))),
        }
    }
}
