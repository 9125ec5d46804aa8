//! `stainbench transfer` — apply a fitted profile to every manifest tile.

use super::load_tiles;
use crate::error::{CliError, Result};
use clap::Args;
use rayon::prelude::*;
use stainbench_core::datapipe::{Manifest, ManifestRecord};
use stainbench_core::imagecore::{save_tile, ImageTile};
use stainbench_core::stainalg::{apply_colorstat, apply_stain_transfer, ProfileDocument};
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Args)]
pub struct TransferArgs {
    /// Source tiles to re-color.
    #[arg(long)]
    pub manifest: PathBuf,

    /// Fitted profile document (from `stainbench fit`).
    #[arg(long)]
    pub profile: PathBuf,

    /// Stain label recorded for output tiles; defaults to the source label.
    #[arg(long)]
    pub out_label: Option<String>,

    /// Output directory; receives tiles/ and manifest.jsonl.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: TransferArgs) -> Result<()> {
    let manifest = Manifest::load(&args.manifest)?;
    if manifest.is_empty() {
        return Err(CliError::Data("source manifest is empty".into()));
    }
    let document = ProfileDocument::from_json(&std::fs::read_to_string(&args.profile)?)?;
    let params = document.fit.params.clone();
    let tiles = load_tiles(&args.manifest, &manifest)?;

    let started = Instant::now();
    let results: Vec<(ImageTile, Option<&'static str>)> = if let Some(cs) =
        document.as_colorstat()
    {
        tiles
            .par_iter()
            .map(|tile| (apply_colorstat(tile, &cs), None))
            .collect()
    } else if let Some(profile) = document.as_stain() {
        tiles
            .par_iter()
            .map(|tile| {
                apply_stain_transfer(tile, &profile, &params)
                    .map(|(out, outcome)| (out, outcome.flag()))
            })
            .collect::<stainbench_core::Result<Vec<_>>>()?
    } else {
        return Err(CliError::Data(format!(
            "profile {} holds no usable payload",
            args.profile.display()
        )));
    };
    let elapsed = started.elapsed();

    let tile_dir = args.out.join("tiles");
    std::fs::create_dir_all(&tile_dir)?;
    let out_label = args.out_label.as_deref().map(super::parse_label);
    let mut records = Vec::with_capacity(results.len());
    let mut passthrough = 0usize;
    for (record, (tile, flag)) in manifest.records.iter().zip(&results) {
        let file = format!("tiles/{}.png", tile.id);
        save_tile(tile, args.out.join(&file))?;
        if flag.is_some() {
            passthrough += 1;
        }
        records.push(ManifestRecord {
            id: record.id.clone(),
            source_image_id: record.source_image_id.clone(),
            split: record.split,
            stain_label: out_label.clone().unwrap_or_else(|| record.stain_label.clone()),
            tile_path: file,
            transfer_flag: flag.map(String::from),
        });
    }
    let out_manifest = Manifest::new(records)?;
    out_manifest.save(args.out.join("manifest.jsonl"))?;

    let per_tile = elapsed.as_secs_f64() / results.len() as f64;
    println!(
        "transferred {} tiles ({} passthrough) in {:.3} s, mean {:.4} s/tile",
        results.len(),
        passthrough,
        elapsed.as_secs_f64(),
        per_tile
    );
    Ok(())
}
