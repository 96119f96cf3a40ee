use std::fs;
use std::path::{Path, PathBuf};

use super::experiment::{ClassRow, ExperimentReport, QualityRow};
use crate::error::{Error, Result};

pub const QUALITY_FILE: &str = "quality.csv";
pub const CLASSIFICATION_FILE: &str = "classification.csv";
pub const REPORT_FILE: &str = "report.json";

pub const QUALITY_HEADER: [&str; 5] = ["image_id", "representation", "snr_db", "ssim", "ssim_percent"];
pub const CLASSIFICATION_HEADER: [&str; 5] = [
    "extractor",
    "classifier",
    "representation",
    "testing_accuracy",
    "f1_score",
];

/// Shortest decimal that round-trips; infinities as `inf` / `-inf`.
pub fn format_number(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        v.to_string()
    }
}

pub fn write_quality_csv(rows: &[QualityRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(QUALITY_HEADER)?;
    for r in rows {
        w.write_record([
            r.image_id.clone(),
            r.representation.name().to_string(),
            format_number(r.snr_db),
            format_number(r.ssim),
            format_number(r.ssim_percent()),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_classification_csv(rows: &[ClassRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CLASSIFICATION_HEADER)?;
    for r in rows {
        w.write_record([
            r.extractor.clone(),
            r.classifier.name().to_string(),
            r.representation.name().to_string(),
            format_number(r.accuracy),
            format_number(r.f1),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `quality.csv`, `classification.csv` and `report.json` into `dir`.
pub fn emit_report(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let quality = dir.join(QUALITY_FILE);
    let classification = dir.join(CLASSIFICATION_FILE);
    let json = dir.join(REPORT_FILE);
    write_quality_csv(&report.quality_rows, &quality)?;
    write_classification_csv(&report.class_rows, &classification)?;
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
    Ok(vec![quality, classification, json])
}

pub fn read_report(path: impl AsRef<Path>) -> Result<ExperimentReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    let report: ExperimentReport = serde_json::from_str(&text)?;
    if report.schema != super::REPORT_SCHEMA {
        return Err(Error::SchemaMismatch(format!(
            "report schema is {:?}, expected {:?}",
            report.schema,
            super::REPORT_SCHEMA
        )));
    }
    Ok(report)
}
