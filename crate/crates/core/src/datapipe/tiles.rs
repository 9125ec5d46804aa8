//! Grid tile extraction with tissue filtering.

use crate::error::{Error, Result};
use crate::imagecore::{resize_bicubic, rgb_to_od, ImageTile};
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct TileParams {
    pub tile_size: u32,
    pub stride: u32,
    pub min_tissue_fraction: f64,
    /// OD threshold of the tissue filter; reuses the stain module's beta.
    pub od_threshold: f64,
    /// Bicubic 1:2 downscale of the input before tiling (for rasters still
    /// at scanner resolution).
    pub downscale_by_2: bool,
}

impl Default for TileParams {
    fn default() -> Self {
        Self {
            tile_size: 256,
            stride: 256,
            min_tissue_fraction: 0.5,
            od_threshold: 0.15,
            downscale_by_2: false,
        }
    }
}

/// Fraction of pixels whose mean-channel optical density exceeds the
/// threshold.
pub fn tissue_fraction(tile: &ImageTile, od_threshold: f64) -> f64 {
    let od = rgb_to_od(tile, 255);
    let tissue = od
        .rows()
        .iter()
        .filter(|r| (r[0] + r[1] + r[2]) / 3.0 > od_threshold)
        .count();
    tissue as f64 / od.len() as f64
}

/// Cuts a strided grid of tiles out of a large raster, dropping tiles whose
/// tissue fraction falls below the threshold. Output order is row-major over
/// grid cells; tile ids encode the source id and pixel offsets.
pub fn extract_tiles(image: &ImageTile, params: &TileParams) -> Result<Vec<ImageTile>> {
    if params.tile_size == 0 || params.stride == 0 {
        return Err(Error::InvalidParameter(
            "tile size and stride must be positive".into(),
        ));
    }
    let source = if params.downscale_by_2 {
        resize_bicubic(image, (image.width() / 2).max(1), (image.height() / 2).max(1))
    } else {
        image.clone()
    };
    let size = params.tile_size;
    if source.width() < size || source.height() < size {
        return Err(Error::ImageTooSmall {
            width: source.width(),
            height: source.height(),
            tile_size: size,
        });
    }
    let mut cells = Vec::new();
    let mut y = 0;
    while y + size <= source.height() {
        let mut x = 0;
        while x + size <= source.width() {
            cells.push((x, y));
            x += params.stride;
        }
        y += params.stride;
    }
    // parallel over grid cells; collect keeps row-major order
    let tiles: Vec<Option<ImageTile>> = cells
        .par_iter()
        .map(|&(x, y)| {
            let tile = source.crop(x, y, size).expect("grid cell is in bounds");
            if tissue_fraction(&tile, params.od_threshold) >= params.min_tissue_fraction {
                let id = if source.id.is_empty() {
                    format!("y{y:05}_x{x:05}")
                } else {
                    format!("{}_y{y:05}_x{x:05}", source.id)
                };
                Some(tile.with_metadata(id, source.stain_label.clone()))
            } else {
                None
            }
        })
        .collect();
    Ok(tiles.into_iter().flatten().collect())
}
