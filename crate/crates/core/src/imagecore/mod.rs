//! Shared pixel math: tiles, CIELAB conversions, optical density, grayscale.

mod color;
mod io;
mod od;

pub use color::{ab_channels, l_channel, lab_to_rgb, merge_l_ab, rgb_to_gray, rgb_to_lab};
pub use io::{load_tile, save_gray, save_tile};
pub(crate) use io::resize_bicubic;
pub use od::{od_to_rgb, rgb_to_od, OdMatrix, DEFAULT_BACKGROUND_INTENSITY};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Staining reagent of a tile.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StainLabel {
    He,
    Mt,
    Other(String),
}

impl StainLabel {
    pub fn parse(s: &str) -> Self {
        match s {
            "HE" => StainLabel::He,
            "MT" => StainLabel::Mt,
            other => StainLabel::Other(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            StainLabel::He => "HE",
            StainLabel::Mt => "MT",
            StainLabel::Other(s) => s,
        }
    }
}

impl Default for StainLabel {
    fn default() -> Self {
        StainLabel::Other("unknown".to_string())
    }
}

impl std::fmt::Display for StainLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for StainLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for StainLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(StainLabel::parse(&s))
    }
}

/// An H×W×3 8-bit RGB raster with provenance metadata. The atomic unit of
/// all processing; pixels are row-major RGB triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTile {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
    pub id: String,
    pub stain_label: StainLabel,
}

impl ImageTile {
    pub fn new(
        width: u32,
        height: u32,
        pixels: Vec<u8>,
        id: impl Into<String>,
        stain_label: StainLabel,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidTile(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: pixels.len(),
                context: "RGB pixel buffer",
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
            id: id.into(),
            stain_label,
        })
    }

    /// Single-color tile, mostly for tests and synthetic data.
    pub fn constant(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let n = width as usize * height as usize;
        let mut pixels = Vec::with_capacity(n * 3);
        for _ in 0..n {
            pixels.extend_from_slice(&rgb);
        }
        Self::new(width, height, pixels, "", StainLabel::default()).expect("valid geometry")
    }

    /// Builds a tile by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Self {
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, pixels, "", StainLabel::default()).expect("valid geometry")
    }

    pub fn with_metadata(mut self, id: impl Into<String>, stain_label: StainLabel) -> Self {
        self.id = id.into();
        self.stain_label = stain_label;
        self
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Raw row-major RGB bytes.
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Crops a `size`×`size` window with its top-left corner at (x0, y0).
    pub fn crop(&self, x0: u32, y0: u32, size: u32) -> Result<ImageTile> {
        if x0 + size > self.width || y0 + size > self.height {
            return Err(Error::InvalidTile(format!(
                "crop {size}x{size}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(size as usize * size as usize * 3);
        for y in y0..y0 + size {
            let row = (y as usize * self.width as usize + x0 as usize) * 3;
            pixels.extend_from_slice(&self.pixels[row..row + size as usize * 3]);
        }
        ImageTile::new(size, size, pixels, self.id.clone(), self.stain_label.clone())
    }
}

/// Per-pixel CIELAB triplets (L, a, b); L in [0, 100].
#[derive(Debug, Clone)]
pub struct LabImage {
    width: u32,
    height: u32,
    data: Vec<[f64; 3]>,
}

impl LabImage {
    pub(crate) fn from_raw(width: u32, height: u32, data: Vec<[f64; 3]>) -> Self {
        debug_assert_eq!(data.len(), width as usize * height as usize);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.data
    }
}

/// Single-channel 8-bit image, the operand of SSIM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayTile {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayTile {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidTile(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: pixels.len(),
                context: "gray pixel buffer",
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels).expect("valid geometry")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }
}
