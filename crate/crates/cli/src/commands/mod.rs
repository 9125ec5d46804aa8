//! Subcommand implementations.

pub mod blindmix;
pub mod evaluate;
pub mod fit;
pub mod report;
pub mod tile;
pub mod transfer;

use crate::error::{CliError, Result};
use stainbench_core::datapipe::{Manifest, ManifestRecord};
use stainbench_core::imagecore::{load_tile, ImageTile, StainLabel};
use std::path::{Path, PathBuf};

/// Resolves a record's tile path against the manifest's directory.
pub(crate) fn resolve_tile_path(manifest_path: &Path, record: &ManifestRecord) -> PathBuf {
    let p = Path::new(&record.tile_path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest_path.parent().unwrap_or(Path::new(".")).join(p)
    }
}

/// Loads every tile of a manifest in record order.
pub(crate) fn load_tiles(manifest_path: &Path, manifest: &Manifest) -> Result<Vec<ImageTile>> {
    manifest
        .records
        .iter()
        .map(|r| {
            let path = resolve_tile_path(manifest_path, r);
            load_tile(&path, r.id.clone(), r.stain_label.clone()).map_err(|e| {
                CliError::Data(format!("{}: {e}", path.display()))
            })
        })
        .collect()
}

pub(crate) fn parse_label(s: &str) -> StainLabel {
    StainLabel::parse(s)
}
