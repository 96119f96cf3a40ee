//! Externally computed feature vectors (deep-network embeddings).
//!
//! CSV contract: header `image_id,representation,label,f0,...,f{d-1}`,
//! UTF-8, one row per image and representation, every value a finite
//! decimal.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::Representation;
use crate::classify::Label;
use crate::error::{Error, Result};
use crate::features::FeatureVector;

const FIXED_COLUMNS: [&str; 3] = ["image_id", "representation", "label"];

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRow {
    pub image_id: String,
    pub representation: Representation,
    pub label: Label,
    pub features: FeatureVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub feature_dim: usize,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn get(&self, image_id: &str, rep: Representation) -> Option<&FeatureRow> {
        self.rows
            .iter()
            .find(|r| r.representation == rep && r.image_id == image_id)
    }
}

pub fn load_external_features(path: impl AsRef<Path>) -> Result<FeatureTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    read_external_features(file)
}

pub fn read_external_features<R: Read>(reader: R) -> Result<FeatureTable> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() <= FIXED_COLUMNS.len()
        || headers.iter().take(3).ne(FIXED_COLUMNS.iter().copied())
    {
        return Err(Error::SchemaMismatch(format!(
            "header must start with {} followed by f0..",
            FIXED_COLUMNS.join(",")
        )));
    }
    for (i, h) in headers.iter().skip(3).enumerate() {
        if h != format!("f{i}") {
            return Err(Error::SchemaMismatch(format!("column {} is {h:?}, expected \"f{i}\"", i + 3)));
        }
    }
    let feature_dim = headers.len() - 3;

    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(Error::RaggedRows {
                line,
                expected: feature_dim,
                found: record.len().saturating_sub(3),
            });
        }
        let image_id = record[0].to_string();
        let representation: Representation = record[1]
            .parse()
            .map_err(|_| Error::SchemaMismatch(format!("line {line}: unknown representation {:?}", &record[1])))?;
        let label = match &record[2] {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::SchemaMismatch(format!("line {line}: label {other:?}")));
            }
        };
        let values = record
            .iter()
            .skip(3)
            .map(|v| match v.trim().parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(Error::SchemaMismatch(format!("line {line}: bad feature value {v:?}"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        if !seen.insert((image_id.clone(), representation)) {
            return Err(Error::DuplicateId(format!("{image_id}/{representation}")));
        }
        rows.push(FeatureRow {
            image_id,
            representation,
            label,
            features: FeatureVector::new(values)?,
        });
    }
    Ok(FeatureTable { feature_dim, rows })
}

/// Writes `table` in the contract format with shortest round-trip decimals.
pub fn write_external_features<W: Write>(table: &FeatureTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..table.feature_dim).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for row in &table.rows {
        let mut rec = vec![
            row.image_id.clone(),
            row.representation.name().to_string(),
            row.label.to_string(),
        ];
        rec.extend(row.features.values().iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<feature csv>", e))?;
    Ok(())
}
