//! Optical density transform and its inverse.
//!
//! OD = -log10((I + 1) / (I0 + 1)). The +1 offset on both sides makes the
//! map exactly invertible on 8-bit integers and keeps log(0) unreachable;
//! I = I0 gives OD = 0.

use super::{ImageTile, StainLabel};
use crate::error::{Error, Result};

pub const DEFAULT_BACKGROUND_INTENSITY: u8 = 255;

/// N×3 matrix of per-pixel optical densities, row-major over pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct OdMatrix {
    rows: Vec<[f64; 3]>,
}

impl OdMatrix {
    pub fn from_rows(rows: Vec<[f64; 3]>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[[f64; 3]] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Per-channel optical density of every pixel; N = width × height, no
/// filtering. Intensities above `background_intensity` saturate at OD 0 so
/// the entries stay non-negative.
pub fn rgb_to_od(tile: &ImageTile, background_intensity: u8) -> OdMatrix {
    let denom = background_intensity as f64 + 1.0;
    let mut lut = [0.0f64; 256];
    for (i, slot) in lut.iter_mut().enumerate() {
        *slot = (-((i as f64 + 1.0) / denom).log10()).max(0.0);
    }
    let rows = tile
        .pixels()
        .chunks_exact(3)
        .map(|px| [lut[px[0] as usize], lut[px[1] as usize], lut[px[2] as usize]])
        .collect();
    OdMatrix::from_rows(rows)
}

/// Exact inverse of [`rgb_to_od`] before 8-bit rounding; clamps to [0, 255].
/// Errors when the row count does not match width × height.
pub fn od_to_rgb(od: &OdMatrix, width: u32, height: u32, background_intensity: u8) -> Result<ImageTile> {
    let expected = width as usize * height as usize;
    if od.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: od.len(),
            context: "OD rows vs tile geometry",
        });
    }
    let scale = background_intensity as f64 + 1.0;
    let mut pixels = Vec::with_capacity(expected * 3);
    for row in od.rows() {
        for &d in row {
            let intensity = scale * 10f64.powf(-d) - 1.0;
            pixels.push(intensity.round().clamp(0.0, 255.0) as u8);
        }
    }
    ImageTile::new(width, height, pixels, "", StainLabel::default())
}
