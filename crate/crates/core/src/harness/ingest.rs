use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::Label;
use crate::error::{Error, Result};
use crate::image::{load_image, GrayImage};

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const FRACTURED_DIR: &str = "Fractured";
pub const NON_FRACTURED_DIR: &str = "Non_fractured";

const IMAGE_EXTENSIONS: [&str; 2] = ["pgm", "png"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IngestMode {
    /// Manifest when `manifest.csv` exists, otherwise the folder layout.
    Auto,
    Folder,
    Csv,
}

impl FromStr for IngestMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(IngestMode::Auto),
            "folder" => Ok(IngestMode::Folder),
            "csv" => Ok(IngestMode::Csv),
            other => Err(Error::InvalidParams(format!(
                "ingest mode must be auto, folder or csv, got {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    FolderLayout,
    ManifestCsv,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageEntry {
    pub id: String,
    pub path: PathBuf,
    pub label: Label,
}

/// Entries sorted by id; ids are unique.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledImageSet {
    pub root: PathBuf,
    pub entries: Vec<ImageEntry>,
    pub provenance: Provenance,
}

impl LabeledImageSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn load(&self, entry: &ImageEntry) -> Result<GrayImage> {
        load_image(&entry.path)
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0; 2];
        for e in &self.entries {
            c[e.label as usize] += 1;
        }
        c
    }
}

/// Reads a labelled image set from `root`.
///
/// Folder layout: images under `Fractured/` (label 1) and `Non_fractured/`
/// (label 0), optionally nested one level down in `images/`. The id is the
/// file stem. Manifest layout: `manifest.csv` with columns `image_id`,
/// `fractured` (0/1) and `path` (relative to `root`).
pub fn ingest(root: impl AsRef<Path>, mode: IngestMode) -> Result<LabeledImageSet> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::FileNotFound(root.to_path_buf()));
    }
    let manifest = root.join(MANIFEST_FILE);
    let (mut entries, provenance) = match mode {
        IngestMode::Csv => (read_manifest(root, &manifest)?, Provenance::ManifestCsv),
        IngestMode::Folder => (read_folders(root)?, Provenance::FolderLayout),
        IngestMode::Auto if manifest.is_file() => (read_manifest(root, &manifest)?, Provenance::ManifestCsv),
        IngestMode::Auto => (read_folders(root)?, Provenance::FolderLayout),
    };
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    let mut seen = HashSet::new();
    for e in &entries {
        if !seen.insert(e.id.as_str()) {
            return Err(Error::DuplicateId(e.id.clone()));
        }
    }
    Ok(LabeledImageSet {
        root: root.to_path_buf(),
        entries,
        provenance,
    })
}

fn class_dirs(root: &Path) -> Option<(PathBuf, PathBuf)> {
    [root.to_path_buf(), root.join("images")].into_iter().find_map(|base| {
        let f = base.join(FRACTURED_DIR);
        let n = base.join(NON_FRACTURED_DIR);
        (f.is_dir() && n.is_dir()).then_some((f, n))
    })
}

fn read_folders(root: &Path) -> Result<Vec<ImageEntry>> {
    let (fractured, non_fractured) =
        class_dirs(root).ok_or_else(|| Error::LayoutNotRecognized(root.to_path_buf()))?;
    let mut entries = Vec::new();
    for (dir, label) in [(fractured, 1), (non_fractured, 0)] {
        let listing = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        for item in listing {
            let path = item.map_err(|e| Error::io(&dir, e))?.path();
            let is_image = path.is_file()
                && path
                    .extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)));
            if !is_image {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            entries.push(ImageEntry {
                id: id.to_string(),
                path,
                label,
            });
        }
    }
    if entries.is_empty() {
        return Err(Error::LayoutNotRecognized(root.to_path_buf()));
    }
    Ok(entries)
}

fn read_manifest(root: &Path, manifest: &Path) -> Result<Vec<ImageEntry>> {
    if !manifest.is_file() {
        return Err(Error::LayoutNotRecognized(root.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(manifest)?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::SchemaMismatch(format!("{MANIFEST_FILE} has no {name:?} column")))
    };
    let (id_col, label_col, path_col) = (column("image_id")?, column("fractured")?, column("path")?);
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let id = field(id_col).to_string();
        let label = match field(label_col) {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::SchemaMismatch(format!(
                    "fractured must be 0 or 1 for {id}, got {other:?}"
                )))
            }
        };
        let path = root.join(field(path_col));
        if !path.is_file() {
            return Err(Error::MissingImage { id, path });
        }
        entries.push(ImageEntry { id, path, label });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::save_image;

    fn touch_image(path: &Path) {
        save_image(&GrayImage::filled(2, 2, 9).unwrap(), path).unwrap();
    }

    fn folder_tree(fractured: &[&str], non: &[&str]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for (sub, names) in [(FRACTURED_DIR, fractured), (NON_FRACTURED_DIR, non)] {
            fs::create_dir(dir.path().join(sub)).unwrap();
            for n in names {
                touch_image(&dir.path().join(sub).join(format!("{n}.pgm")));
            }
        }
        dir
    }

    #[test]
    fn folder_layout_labels_by_directory() {
        let dir = folder_tree(&["a", "b", "c"], &["d", "e"]);
        fs::write(dir.path().join(FRACTURED_DIR).join("notes.txt"), "x").unwrap();
        let set = ingest(dir.path(), IngestMode::Auto).unwrap();
        assert_eq!(set.provenance, Provenance::FolderLayout);
        let labels: Vec<u8> = set.entries.iter().map(|e| e.label).collect();
        assert_eq!(labels, vec![1, 1, 1, 0, 0]);
        assert_eq!(set.class_counts(), [2, 3]);
        assert_eq!(ingest(dir.path(), IngestMode::Folder).unwrap(), set);
    }

    #[test]
    fn ids_sort_across_classes() {
        let dir = folder_tree(&["b2"], &["a1", "c3"]);
        let set = ingest(dir.path(), IngestMode::Folder).unwrap();
        let ids: Vec<&str> = set.entries.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, vec!["a1", "b2", "c3"]);
    }

    #[test]
    fn duplicate_ids_across_folders() {
        let dir = folder_tree(&["x"], &["x"]);
        assert!(matches!(ingest(dir.path(), IngestMode::Auto), Err(Error::DuplicateId(id)) if id == "x"));
    }

    #[test]
    fn manifest_is_preferred_and_validated() {
        let dir = folder_tree(&["a"], &["b"]);
        fs::write(
            dir.path().join(MANIFEST_FILE),
            "image_id,fractured,path\nb,0,Non_fractured/b.pgm\na,1,Fractured/a.pgm\n",
        )
        .unwrap();
        let set = ingest(dir.path(), IngestMode::Auto).unwrap();
        assert_eq!(set.provenance, Provenance::ManifestCsv);
        assert_eq!(set.entries[0].id, "a");
        assert_eq!(set.entries[0].label, 1);

        fs::write(
            dir.path().join(MANIFEST_FILE),
            "image_id,fractured,path\nb,0,Non_fractured/missing.pgm\n",
        )
        .unwrap();
        assert!(matches!(ingest(dir.path(), IngestMode::Csv), Err(Error::MissingImage { .. })));

        fs::write(dir.path().join(MANIFEST_FILE), "image_id,path\nb,x\n").unwrap();
        assert!(matches!(ingest(dir.path(), IngestMode::Csv), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn unrecognised_layouts() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(ingest(dir.path(), IngestMode::Auto), Err(Error::LayoutNotRecognized(_))));
        assert!(matches!(ingest(dir.path(), IngestMode::Csv), Err(Error::LayoutNotRecognized(_))));
        assert!(matches!(
            ingest(dir.path().join("absent"), IngestMode::Auto),
            Err(Error::FileNotFound(_))
        ));
    }

    #[test]
    fn fracatlas_style_nested_images_dir() {
        let dir = tempfile::tempdir().unwrap();
        for sub in [FRACTURED_DIR, NON_FRACTURED_DIR] {
            fs::create_dir_all(dir.path().join("images").join(sub)).unwrap();
        }
        touch_image(&dir.path().join("images").join(FRACTURED_DIR).join("IMG1.png.pgm"));
        let set = ingest(dir.path(), IngestMode::Folder).unwrap();
        assert_eq!(set.entries[0].id, "IMG1.png");
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("csv".parse::<IngestMode>().unwrap(), IngestMode::Csv);
        assert!("zip".parse::<IngestMode>().is_err());
    }
}
