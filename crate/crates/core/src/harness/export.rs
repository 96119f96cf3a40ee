use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::ingest::LabeledImageSet;
use super::{build_representation, Representation};
use crate::denoise::NlmParams;
use crate::error::{Error, Result};
use crate::image::save_image;

/// Manifest written next to exported representation images.
pub const LABELS_FILE: &str = "labels.csv";

/// `<image_id>__<representation>.pgm`
pub fn representation_file_name(image_id: &str, rep: Representation) -> String {
    format!("{image_id}__{}.pgm", rep.name())
}

/// Writes every representation of every image into `out_dir`, plus a
/// `labels.csv` with columns `image_id,representation,label,file`.
pub fn export_representations(
    set: &LabeledImageSet,
    nlm: &NlmParams,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    nlm.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let written: Vec<Vec<PathBuf>> = set
        .entries
        .par_iter()
        .map(|entry| {
            let img = set.load(entry)?;
            Representation::ALL
                .iter()
                .map(|&rep| {
                    let path = out_dir.join(representation_file_name(&entry.id, rep));
                    save_image(&build_representation(&img, rep, nlm)?, &path)?;
                    Ok(path)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let labels_path = out_dir.join(LABELS_FILE);
    let mut w = csv::Writer::from_path(&labels_path)?;
    w.write_record(["image_id", "representation", "label", "file"])?;
    for entry in &set.entries {
        for rep in Representation::ALL {
            let label = entry.label.to_string();
            let file = representation_file_name(&entry.id, rep);
            w.write_record([entry.id.as_str(), rep.name(), label.as_str(), file.as_str()])?;
        }
    }
    w.flush().map_err(|e| Error::io(&labels_path, e))?;

    let mut all: Vec<PathBuf> = written.into_iter().flatten().collect();
    all.push(labels_path);
    Ok(all)
}
