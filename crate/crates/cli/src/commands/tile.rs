//! `stainbench tile` — cut a raster into tiles plus a manifest.

use super::parse_label;
use crate::error::{CliError, Result};
use clap::Args;
use stainbench_core::datapipe::{Manifest, ManifestRecord, Split, TileParams};
use stainbench_core::imagecore::{load_tile, save_tile};
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct TileArgs {
    /// Input raster (PNG or TIFF).
    #[arg(long)]
    pub input: PathBuf,

    /// Source image id; defaults to the input file stem.
    #[arg(long)]
    pub id: Option<String>,

    /// Stain label recorded for every tile (HE, MT, or free-form).
    #[arg(long, default_value = "HE")]
    pub label: String,

    /// Split recorded for every tile (train, val, test).
    #[arg(long, default_value = "train")]
    pub split: String,

    #[arg(long, default_value_t = 256)]
    pub size: u32,

    /// Grid step; defaults to the tile size (non-overlapping).
    #[arg(long)]
    pub stride: Option<u32>,

    /// Minimum tissue fraction for a tile to be kept.
    #[arg(long, default_value_t = 0.5)]
    pub min_tissue: f64,

    /// Mean-OD threshold of the tissue filter.
    #[arg(long, default_value_t = 0.15)]
    pub od_threshold: f64,

    /// Bicubic 1:2 downscale before tiling (for scanner-resolution input).
    #[arg(long)]
    pub downscale2: bool,

    /// Output directory; receives tiles/ and manifest.jsonl.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: TileArgs) -> Result<()> {
    if !args.input.is_file() {
        return Err(CliError::Data(format!(
            "input file not found: {}",
            args.input.display()
        )));
    }
    let split = Split::parse(&args.split)?;
    let label = parse_label(&args.label);
    let id = args.id.clone().unwrap_or_else(|| {
        args.input
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("image")
            .to_string()
    });
    let image = load_tile(&args.input, id.clone(), label.clone())?;
    let tiles = stainbench_core::datapipe::extract_tiles(
        &image,
        &TileParams {
            tile_size: args.size,
            stride: args.stride.unwrap_or(args.size),
            min_tissue_fraction: args.min_tissue,
            od_threshold: args.od_threshold,
            downscale_by_2: args.downscale2,
        },
    )?;

    let tile_dir = args.out.join("tiles");
    std::fs::create_dir_all(&tile_dir)?;
    let mut records = Vec::with_capacity(tiles.len());
    for tile in &tiles {
        let file = format!("tiles/{}.png", tile.id);
        save_tile(tile, args.out.join(&file))?;
        records.push(ManifestRecord {
            id: tile.id.clone(),
            source_image_id: Some(id.clone()),
            split,
            stain_label: label.clone(),
            tile_path: file,
            transfer_flag: None,
        });
    }
    let manifest = Manifest::new(records)?;
    let manifest_path = args.out.join("manifest.jsonl");
    manifest.save(&manifest_path)?;
    println!(
        "wrote {} tiles to {} (manifest hash {})",
        manifest.len(),
        args.out.display(),
        manifest.hash()
    );
    Ok(())
}
