//! CART decision tree and bagged random forest for binary labels
//! (0 = non-fractured, 1 = fractured), plus stratified splitting and
//! accuracy/F1 evaluation.
//!
//! Split quality is weighted Gini impurity. Candidate thresholds are the
//! midpoints between consecutive distinct feature values, and split scores
//! are compared as exact integer ratios, so ties resolve to the lowest
//! feature index and then the lowest threshold regardless of rounding.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::scalar::Real;

pub type Label = u8;
pub const NON_FRACTURED: Label = 0;
pub const FRACTURED: Label = 1;

pub const TREE_SCHEMA: &str = "bitplane-lab/tree/v1";
pub const FOREST_SCHEMA: &str = "bitplane-lab/forest/v1";

#[derive(Clone, Debug, PartialEq)]
pub struct Sample<T> {
    pub id: String,
    pub features: FeatureVector<T>,
    pub label: Label,
}

/// Labelled rows sharing one feature dimension, with unique ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    feature_dim: usize,
    rows: Vec<Sample<T>>,
}

impl<T: Real> Dataset<T> {
    pub fn new(feature_dim: usize, rows: Vec<Sample<T>>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(rows.len());
        for row in &rows {
            if row.features.len() != feature_dim {
                return Err(Error::InvalidDataset(format!(
                    "row {} has {} features, expected {feature_dim}",
                    row.id,
                    row.features.len()
                )));
            }
            if row.label > 1 {
                return Err(Error::InvalidDataset(format!(
                    "row {} has label {}",
                    row.id, row.label
                )));
            }
            if !seen.insert(row.id.as_str()) {
                return Err(Error::InvalidDataset(format!("duplicate id {}", row.id)));
            }
        }
        Ok(Dataset { feature_dim, rows })
    }

    /// Builds a dataset from `(features, label)` pairs with ids `"0"`, `"1"`, ...
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Vec<T>, Label)>) -> Result<Self> {
        let rows = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (x, label))| {
                Ok(Sample {
                    id: i.to_string(),
                    features: FeatureVector::new(x)?,
                    label,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let dim = rows.first().map_or(0, |r| r.features.len());
        Self::new(dim, rows)
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn rows(&self) -> &[Sample<T>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0; 2];
        for r in &self.rows {
            c[r.label as usize] += 1;
        }
        c
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().map(|r| r.id.as_str())
    }
}

/// Train/test assignment by id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

impl Partition {
    /// Splits `ds` by this partition, keeping dataset order within each side.
    pub fn apply<T: Real>(&self, ds: &Dataset<T>) -> Result<(Dataset<T>, Dataset<T>)> {
        let test: HashSet<&str> = self.test.iter().map(String::as_str).collect();
        let train: HashSet<&str> = self.train.iter().map(String::as_str).collect();
        let (mut tr, mut te) = (Vec::new(), Vec::new());
        for row in ds.rows() {
            if test.contains(row.id.as_str()) {
                te.push(row.clone());
            } else if train.contains(row.id.as_str()) {
                tr.push(row.clone());
            } else {
                return Err(Error::InvalidDataset(format!(
                    "id {} is not covered by the partition",
                    row.id
                )));
            }
        }
        if tr.len() != self.train.len() || te.len() != self.test.len() {
            return Err(Error::InvalidDataset(
                "partition names ids that are absent from the dataset".into(),
            ));
        }
        Ok((Dataset::new(ds.feature_dim, tr)?, Dataset::new(ds.feature_dim, te)?))
    }
}

/// Stratified partition with `round(test_fraction * n)` test rows in total.
///
/// Each class receives `floor(test_fraction * n_class)` test rows and the
/// remaining slots go to the classes with the largest fractional parts
/// (label 0 first on ties). Rows within a class are chosen by a seeded
/// shuffle.
pub fn stratified_partition<T: Real>(ds: &Dataset<T>, test_fraction: f64, seed: u64) -> Result<Partition> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParams(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let counts = ds.class_counts();
    if counts.iter().any(|&c| c < 2) {
        return Err(Error::InsufficientData(format!(
            "need at least 2 rows per class, have {} / {}",
            counts[0], counts[1]
        )));
    }
    let n_test = (test_fraction * ds.len() as f64).round() as usize;
    let exact: Vec<f64> = counts.iter().map(|&c| test_fraction * c as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..2).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut k = 0;
    while quota.iter().sum::<usize>() < n_test {
        let c = order[k % 2];
        if quota[c] < counts[c] {
            quota[c] += 1;
        }
        k += 1;
    }

    let mut in_test = vec![false; ds.len()];
    for label in 0..2u8 {
        let mut members: Vec<usize> = ds
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label == label)
            .map(|(i, _)| i)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::from(label));
        shuffle(&mut members, &mut rng);
        for &i in &members[..quota[label as usize]] {
            in_test[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (row, &t) in ds.rows.iter().zip(&in_test) {
        if t {
            test.push(row.id.clone());
        } else {
            train.push(row.id.clone());
        }
    }
    Ok(Partition { train, test })
}

pub fn train_test_split<T: Real>(
    ds: &Dataset<T>,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset<T>, Dataset<T>)> {
    stratified_partition(ds, test_fraction, seed)?.apply(ds)
}

/// Fisher-Yates, spelled out so the permutation depends only on the RNG
/// stream and not on a library's shuffle implementation.
fn shuffle<R: Rng>(items: &mut [usize], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    #[default]
    Gini,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub criterion: SplitCriterion,
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub rng_seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            criterion: SplitCriterion::Gini,
            max_depth: None,
            min_samples_split: 2,
            rng_seed: 42,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == Some(0) {
            return Err(Error::InvalidParams("max_depth must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidParams("min_samples_split must be >= 2".into()));
        }
        Ok(())
    }
}

/// Number of candidate features drawn at each node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `ceil(sqrt(d))`
    Sqrt,
    All,
    Fixed(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((d as f64).sqrt().ceil() as usize).clamp(1, d.max(1)),
            MaxFeatures::All => d,
            MaxFeatures::Fixed(k) => k.min(d),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub features_per_split: MaxFeatures,
    pub bootstrap: bool,
    pub rng_seed: u64,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_estimators: 100,
            features_per_split: MaxFeatures::Sqrt,
            bootstrap: true,
            rng_seed: 42,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators < 1 {
            return Err(Error::InvalidParams("n_estimators must be >= 1".into()));
        }
        if self.features_per_split == MaxFeatures::Fixed(0) {
            return Err(Error::InvalidParams("features_per_split must be >= 1".into()));
        }
        self.tree_params(0).validate()
    }

    fn tree_params(&self, seed: u64) -> TreeParams {
        TreeParams {
            criterion: SplitCriterion::Gini,
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            rng_seed: seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node<T> {
    Leaf {
        label: Label,
        /// Training rows of each class that reached this leaf.
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: T,
        left: Box<Node<T>>,
        right: Box<Node<T>>,
    },
}

impl<T: Real> Node<T> {
    fn leaf(counts: [usize; 2]) -> Self {
        // ties go to label 0
        let label = if counts[1] > counts[0] { FRACTURED } else { NON_FRACTURED };
        Node::Leaf { label, counts }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeModel<T> {
    pub feature_dim: usize,
    pub root: Node<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel<T> {
    pub feature_dim: usize,
    pub trees: Vec<TreeModel<T>>,
    /// RNG seed each tree was grown from, derived from the forest seed and
    /// the tree index.
    pub seeds: Vec<u64>,
}

pub trait Classifier<T> {
    fn feature_dim(&self) -> usize;

    fn predict_unchecked(&self, x: &[T]) -> Label;

    fn predict(&self, x: &[T]) -> Result<Label> {
        if x.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch(format!(
                "model expects {} features, got {}",
                self.feature_dim(),
                x.len()
            )));
        }
        Ok(self.predict_unchecked(x))
    }
}

impl<T: Real> Classifier<T> for TreeModel<T> {
    fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    fn predict_unchecked(&self, x: &[T]) -> Label {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label, .. } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }
}

impl<T: Real> Classifier<T> for ForestModel<T> {
    fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Unweighted majority vote; an exact tie predicts label 0.
    fn predict_unchecked(&self, x: &[T]) -> Label {
        let positive = self
            .trees
            .iter()
            .filter(|t| t.predict_unchecked(x) == FRACTURED)
            .count();
        if 2 * positive > self.trees.len() {
            FRACTURED
        } else {
            NON_FRACTURED
        }
    }
}

pub fn predict_tree<T: Real>(model: &TreeModel<T>, x: &FeatureVector<T>) -> Result<Label> {
    model.predict(x.values())
}

pub fn predict_forest<T: Real>(model: &ForestModel<T>, x: &FeatureVector<T>) -> Result<Label> {
    model.predict(x.values())
}

#[derive(Serialize, Deserialize)]
struct ModelDocument<M> {
    schema: String,
    model: M,
}

fn to_document<M: Serialize>(schema: &str, model: &M) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelDocument {
        schema: schema.to_string(),
        model,
    })?)
}

fn from_document<M: DeserializeOwned>(schema: &str, json: &str) -> Result<M> {
    let doc: ModelDocument<serde_json::Value> = serde_json::from_str(json)?;
    if doc.schema != schema {
        return Err(Error::SchemaMismatch(format!(
            "expected schema {schema}, found {}",
            doc.schema
        )));
    }
    Ok(serde_json::from_value(doc.model)?)
}

impl<T: Real + Serialize + DeserializeOwned> TreeModel<T> {
    pub fn to_json(&self) -> Result<String> {
        to_document(TREE_SCHEMA, self)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        from_document(TREE_SCHEMA, json)
    }
}

impl<T: Real + Serialize + DeserializeOwned> ForestModel<T> {
    pub fn to_json(&self) -> Result<String> {
        to_document(FOREST_SCHEMA, self)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        from_document(FOREST_SCHEMA, json)
    }
}

/// `sum_child (n0^2 + n1^2) / n_child` as the exact ratio `num / den`.
/// Larger is better: weighted Gini equals `1 - score / n`.
#[derive(Clone, Copy, Debug)]
struct SplitScore {
    num: u128,
    den: u128,
}

impl SplitScore {
    fn of(left: [usize; 2], right: [usize; 2]) -> Self {
        let sq = |c: [usize; 2]| (c[0] as u128).pow(2) + (c[1] as u128).pow(2);
        let nl = (left[0] + left[1]) as u128;
        let nr = (right[0] + right[1]) as u128;
        SplitScore {
            num: sq(left) * nr + sq(right) * nl,
            den: nl * nr,
        }
    }

    fn cmp(&self, other: &SplitScore) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

struct Candidate<T> {
    feature: usize,
    threshold: T,
    score: SplitScore,
}

/// Midpoint of two consecutive distinct values, kept strictly below `hi`.
fn midpoint<T: Real>(lo: T, hi: T) -> T {
    let two = T::one() + T::one();
    let mid = lo + (hi - lo) / two;
    if mid < hi {
        mid
    } else {
        lo
    }
}

struct Grower<'a, T> {
    rows: &'a [Sample<T>],
    max_depth: Option<usize>,
    min_samples_split: usize,
    features_per_split: usize,
    feature_dim: usize,
    rng: Option<ChaCha8Rng>,
}

impl<T: Real> Grower<'_, T> {
    fn counts(&self, idx: &[usize]) -> [usize; 2] {
        let mut c = [0; 2];
        for &i in idx {
            c[self.rows[i].label as usize] += 1;
        }
        c
    }

    fn best_for_feature(&self, idx: &[usize], feature: usize, total: [usize; 2]) -> Option<Candidate<T>> {
        let mut col: Vec<(T, Label)> = idx
            .iter()
            .map(|&i| (self.rows[i].features[feature], self.rows[i].label))
            .collect();
        col.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        let mut left = [0usize; 2];
        let mut best: Option<Candidate<T>> = None;
        for w in 0..col.len() - 1 {
            left[col[w].1 as usize] += 1;
            if col[w].0 >= col[w + 1].0 {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let score = SplitScore::of(left, right);
            if best.as_ref().is_none_or(|b| score.cmp(&b.score) == Ordering::Greater) {
                best = Some(Candidate {
                    feature,
                    threshold: midpoint(col[w].0, col[w + 1].0),
                    score,
                });
            }
        }
        best
    }

    fn best_split(&self, idx: &[usize], features: &[usize], total: [usize; 2]) -> Option<Candidate<T>> {
        let mut best: Option<Candidate<T>> = None;
        for &f in features {
            if let Some(c) = self.best_for_feature(idx, f, total) {
                if best.as_ref().is_none_or(|b| c.score.cmp(&b.score) == Ordering::Greater) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn candidate_features(&mut self) -> (Vec<usize>, Vec<usize>) {
        let d = self.feature_dim;
        match self.rng.as_mut() {
            Some(rng) if self.features_per_split < d => {
                let mut chosen = sample_indices(rng, d, self.features_per_split).into_vec();
                chosen.sort_unstable();
                let rest = (0..d).filter(|f| chosen.binary_search(f).is_err()).collect();
                (chosen, rest)
            }
            _ => ((0..d).collect(), Vec::new()),
        }
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> Node<T> {
        let total = self.counts(idx);
        let pure = total[0] == 0 || total[1] == 0;
        let depth_capped = self.max_depth.is_some_and(|m| depth >= m);
        if pure || depth_capped || idx.len() < self.min_samples_split {
            return Node::leaf(total);
        }
        let (drawn, rest) = self.candidate_features();
        // fall back to the undrawn features when every drawn one is constant
        let best = self
            .best_split(idx, &drawn, total)
            .or_else(|| self.best_split(idx, &rest, total));
        let Some(best) = best else {
            return Node::leaf(total);
        };
        let pivot = partition_in_place(idx, |&i| self.rows[i].features[best.feature] <= best.threshold);
        let (l, r) = idx.split_at_mut(pivot);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

/// Stable partition; returns the number of elements satisfying `pred`.
fn partition_in_place(idx: &mut [usize], pred: impl Fn(&usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = idx.iter().partition(|i| pred(i));
    let n = yes.len();
    idx[..n].copy_from_slice(&yes);
    idx[n..].copy_from_slice(&no);
    n
}

pub fn fit_tree<T: Real>(train: &Dataset<T>, params: &TreeParams) -> Result<TreeModel<T>> {
    params.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut grower = Grower {
        rows: &train.rows,
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
        features_per_split: train.feature_dim,
        feature_dim: train.feature_dim,
        rng: None,
    };
    let mut idx: Vec<usize> = (0..train.len()).collect();
    Ok(TreeModel {
        feature_dim: train.feature_dim,
        root: grower.grow(&mut idx, 0),
    })
}

/// Seed of tree `index`: first output of the ChaCha stream `index` keyed by
/// the forest seed.
pub fn tree_seed(forest_seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(forest_seed);
    rng.set_stream(index as u64);
    rng.next_u64()
}

pub fn fit_forest<T: Real>(train: &Dataset<T>, params: &ForestParams) -> Result<ForestModel<T>> {
    params.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = train.len();
    let d = train.feature_dim;
    let k = params.features_per_split.resolve(d);
    let seeds: Vec<u64> = (0..params.n_estimators).map(|i| tree_seed(params.rng_seed, i)).collect();
    let trees = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut grower = Grower {
                rows: &train.rows,
                max_depth: params.max_depth,
                min_samples_split: params.min_samples_split,
                features_per_split: k,
                feature_dim: d,
                rng: Some(rng),
            };
            TreeModel {
                feature_dim: d,
                root: grower.grow(&mut idx, 0),
            }
        })
        .collect();
    Ok(ForestModel {
        feature_dim: d,
        trees,
        seeds,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (FRACTURED, FRACTURED) => self.tp += 1,
            (FRACTURED, _) => self.fn_ += 1,
            (_, FRACTURED) => self.fp += 1,
            _ => self.tn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Binary metrics with fractured (1) as the positive class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub f1: f64,
    pub confusion: Confusion,
}

impl EvalReport {
    /// F1 is defined as 0 when `2tp + fp + fn == 0`.
    pub fn from_confusion(confusion: Confusion) -> Self {
        let c = confusion;
        let total = c.total();
        let accuracy = if total == 0 {
            0.0
        } else {
            (c.tp + c.tn) as f64 / total as f64
        };
        let f1_den = 2 * c.tp + c.fp + c.fn_;
        let f1 = if f1_den == 0 {
            0.0
        } else {
            (2 * c.tp) as f64 / f1_den as f64
        };
        EvalReport {
            accuracy,
            f1,
            confusion,
        }
    }
}

pub fn evaluate<T: Real, C: Classifier<T> + ?Sized>(model: &C, test: &Dataset<T>) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut confusion = Confusion::default();
    for row in test.rows() {
        confusion.record(row.label, model.predict(row.features.values())?);
    }
    Ok(EvalReport::from_confusion(confusion))
}
