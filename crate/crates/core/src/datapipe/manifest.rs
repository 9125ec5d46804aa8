//! Line-delimited JSON manifests describing tile datasets.

use crate::error::{Error, Result};
use crate::imagecore::StainLabel;
use crate::util::sha256_hex;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidParameter(format!("unknown split '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// One tile record. Field order is the canonical (alphabetical) key order of
/// the serialized form; serde emits struct fields in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source_image_id: Option<String>,
    pub split: Split,
    pub stain_label: StainLabel,
    pub tile_path: String,
    /// Set by transfer runs on tiles that passed through unmodified.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub transfer_flag: Option<String>,
}

/// Ordered list of tile records defining a dataset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub records: Vec<ManifestRecord>,
}

impl Manifest {
    pub fn new(records: Vec<ManifestRecord>) -> Result<Self> {
        let m = Self { records };
        m.check_unique_ids()?;
        Ok(m)
    }

    fn check_unique_ids(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.records.len());
        for r in &self.records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }
        Ok(())
    }

    /// SHA-256 over the records serialized in canonical order (sorted by
    /// id), so the hash is independent of incidental listing order.
    pub fn hash(&self) -> String {
        let mut sorted: Vec<&ManifestRecord> = self.records.iter().collect();
        sorted.sort_by(|a, b| a.id.cmp(&b.id));
        let mut buf = Vec::new();
        for r in sorted {
            buf.extend_from_slice(serde_json::to_string(r).expect("record serializes").as_bytes());
            buf.push(b'\n');
        }
        sha256_hex(&buf)
    }

    /// One JSON object per line, UTF-8.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for r in &self.records {
            serde_json::to_writer(&mut f, r)?;
            f.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path.as_ref())?);
        let mut records = Vec::new();
        for (i, line) in f.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record = serde_json::from_str(&line)
                .map_err(|source| Error::ManifestParse { line: i + 1, source })?;
            records.push(record);
        }
        Self::new(records)
    }

    /// Confirms every tile path exists, resolving relative paths against
    /// `base_dir`.
    pub fn validate_paths(&self, base_dir: impl AsRef<Path>) -> Result<()> {
        for r in &self.records {
            let p = Path::new(&r.tile_path);
            let abs = if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.as_ref().join(p)
            };
            if !abs.is_file() {
                return Err(Error::MissingTile(r.tile_path.clone()));
            }
        }
        Ok(())
    }

    pub fn filter(&self, label: Option<&StainLabel>, split: Option<Split>) -> Manifest {
        Manifest {
            records: self
                .records
                .iter()
                .filter(|r| label.is_none_or(|l| &r.stain_label == l))
                .filter(|r| split.is_none_or(|s| r.split == s))
                .cloned()
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// One input directory of tile files for [`build_manifest`].
#[derive(Debug, Clone)]
pub struct ManifestSource {
    pub dir: std::path::PathBuf,
    pub stain_label: StainLabel,
    pub split: Split,
    /// Source image (slide) the tiles in this directory came from, when
    /// known; drives the split-leakage check.
    pub source_image_id: Option<String>,
}

/// Builds a manifest from tile directories. Files are taken in sorted name
/// order (deterministic), ids are file stems, and the result is checked for
/// duplicate ids and for source images leaking between test and train/val.
pub fn build_manifest(sources: &[ManifestSource]) -> Result<Manifest> {
    let mut records = Vec::new();
    for src in sources {
        let mut names: Vec<std::path::PathBuf> = std::fs::read_dir(&src.dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| {
                p.is_file()
                    && matches!(
                        p.extension().and_then(|e| e.to_str()),
                        Some("png" | "tif" | "tiff" | "PNG" | "TIF" | "TIFF")
                    )
            })
            .collect();
        names.sort();
        for path in names {
            let id = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            records.push(ManifestRecord {
                id,
                source_image_id: src.source_image_id.clone(),
                split: src.split,
                stain_label: src.stain_label.clone(),
                tile_path: path.to_string_lossy().into_owned(),
                transfer_flag: None,
            });
        }
    }
    let manifest = Manifest::new(records)?;
    check_split_disjointness(&manifest)?;
    Ok(manifest)
}

/// Test tiles must come from different source images than train/val tiles.
pub fn check_split_disjointness(manifest: &Manifest) -> Result<()> {
    let mut by_source: HashMap<&str, (bool, bool)> = HashMap::new();
    for r in &manifest.records {
        let Some(src) = r.source_image_id.as_deref() else {
            continue;
        };
        let entry = by_source.entry(src).or_default();
        match r.split {
            Split::Train | Split::Val => entry.0 = true,
            Split::Test => entry.1 = true,
        }
    }
    for (src, (train_val, test)) in by_source {
        if train_val && test {
            return Err(Error::SplitLeakage {
                source_id: src.to_string(),
                a: "train/val",
                b: "test",
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, split: Split, source: Option<&str>) -> ManifestRecord {
        ManifestRecord {
            id: id.into(),
            source_image_id: source.map(String::from),
            split,
            stain_label: StainLabel::He,
            tile_path: format!("{id}.png"),
            transfer_flag: None,
        }
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let err = Manifest::new(vec![
            record("a", Split::Train, None),
            record("a", Split::Val, None),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateId(_)));
    }

    #[test]
    fn hash_is_order_independent_but_content_sensitive() {
        let a = Manifest::new(vec![
            record("x", Split::Train, None),
            record("y", Split::Val, None),
        ])
        .unwrap();
        let b = Manifest::new(vec![
            record("y", Split::Val, None),
            record("x", Split::Train, None),
        ])
        .unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = Manifest::new(vec![
            record("x", Split::Train, None),
            record("z", Split::Val, None),
        ])
        .unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn save_load_preserves_hash() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        let m = Manifest::new(vec![
            record("t1", Split::Train, Some("slideA")),
            record("t2", Split::Test, Some("slideB")),
        ])
        .unwrap();
        m.save(&path).unwrap();
        let back = Manifest::load(&path).unwrap();
        assert_eq!(m, back);
        assert_eq!(m.hash(), back.hash());
    }

    #[test]
    fn leakage_between_test_and_train_is_rejected() {
        let m = Manifest::new(vec![
            record("t1", Split::Train, Some("slideA")),
            record("t2", Split::Test, Some("slideA")),
        ])
        .unwrap();
        let err = check_split_disjointness(&m).unwrap_err();
        assert!(matches!(err, Error::SplitLeakage { .. }));
    }

    #[test]
    fn build_from_dirs_assigns_labels() {
        let dir = tempfile::tempdir().unwrap();
        let he_dir = dir.path().join("he");
        let mt_dir = dir.path().join("mt");
        std::fs::create_dir_all(&he_dir).unwrap();
        std::fs::create_dir_all(&mt_dir).unwrap();
        for (d, prefix) in [(&he_dir, "h"), (&mt_dir, "m")] {
            for i in 0..3 {
                let tile = crate::imagecore::ImageTile::constant(4, 4, [10 * i as u8, 0, 0]);
                crate::imagecore::save_tile(&tile, d.join(format!("{prefix}{i}.png"))).unwrap();
            }
        }
        let m = build_manifest(&[
            ManifestSource {
                dir: he_dir,
                stain_label: StainLabel::He,
                split: Split::Train,
                source_image_id: Some("s1".into()),
            },
            ManifestSource {
                dir: mt_dir,
                stain_label: StainLabel::Mt,
                split: Split::Train,
                source_image_id: Some("s2".into()),
            },
        ])
        .unwrap();
        assert_eq!(m.len(), 6);
        assert!(m.records[..3].iter().all(|r| r.stain_label == StainLabel::He));
        assert!(m.records[3..].iter().all(|r| r.stain_label == StainLabel::Mt));
        m.validate_paths(dir.path()).unwrap();
    }

    #[test]
    fn missing_path_fails_validation() {
        let m = Manifest::new(vec![record("ghost", Split::Train, None)]).unwrap();
        assert!(matches!(
            m.validate_paths("/nonexistent"),
            Err(Error::MissingTile(_))
        ));
    }
}
