//! Dataset construction: tile extraction, tissue filtering, split manifests,
//! and the blind-mix protocol.

mod blindmix;
mod manifest;
mod tiles;

pub use blindmix::{blind_mix, score_answers, BlindMixSheet, Truth};
pub use manifest::{
    build_manifest, check_split_disjointness, Manifest, ManifestRecord, ManifestSource, Split,
};
pub use tiles::{extract_tiles, tissue_fraction, TileParams};
