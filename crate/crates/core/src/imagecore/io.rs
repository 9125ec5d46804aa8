//! PNG/TIFF reading and writing for 8-bit RGB tiles.

use super::{GrayTile, ImageTile, StainLabel};
use crate::error::Result;
use image::{ColorType, DynamicImage, ImageReader};
use std::path::Path;

/// Loads an 8-bit RGB tile from a PNG or TIFF file. Images with an alpha
/// channel have it dropped with a warning; other layouts are converted to
/// RGB8.
pub fn load_tile(path: impl AsRef<Path>, id: impl Into<String>, stain_label: StainLabel) -> Result<ImageTile> {
    let path = path.as_ref();
    let img = ImageReader::open(path)?.decode()?;
    if img.color().has_alpha() {
        log::warn!("{}: dropping alpha channel", path.display());
    }
    let rgb = img.to_rgb8();
    ImageTile::new(rgb.width(), rgb.height(), rgb.into_raw(), id, stain_label)
}

/// Writes a tile as PNG or TIFF depending on the file extension.
pub fn save_tile(tile: &ImageTile, path: impl AsRef<Path>) -> Result<()> {
    image::save_buffer(
        path.as_ref(),
        tile.pixels(),
        tile.width(),
        tile.height(),
        ColorType::Rgb8,
    )?;
    Ok(())
}

/// Writes a grayscale image (PNG or TIFF by extension).
pub fn save_gray(gray: &GrayTile, path: impl AsRef<Path>) -> Result<()> {
    image::save_buffer(
        path.as_ref(),
        gray.pixels(),
        gray.width(),
        gray.height(),
        ColorType::L8,
    )?;
    Ok(())
}

/// Bicubic resize helper used by tile extraction's 1:2 subsample step and by
/// feature extractors.
pub(crate) fn resize_bicubic(tile: &ImageTile, width: u32, height: u32) -> ImageTile {
    let buf = image::RgbImage::from_raw(tile.width(), tile.height(), tile.pixels().to_vec())
        .expect("tile buffer matches geometry");
    let resized = DynamicImage::ImageRgb8(buf).resize_exact(
        width,
        height,
        image::imageops::FilterType::CatmullRom,
    );
    let rgb = resized.to_rgb8();
    ImageTile::new(width, height, rgb.into_raw(), tile.id.clone(), tile.stain_label.clone())
        .expect("resized buffer matches geometry")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.png");
        let tile = ImageTile::from_fn(8, 5, |x, y| [x as u8 * 10, y as u8 * 20, 7]);
        save_tile(&tile, &path).unwrap();
        let back = load_tile(&path, "t", StainLabel::Mt).unwrap();
        assert_eq!(back.pixels(), tile.pixels());
        assert_eq!(back.id, "t");
    }

    #[test]
    fn tiff_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tiff");
        let tile = ImageTile::from_fn(4, 4, |x, y| [x as u8, y as u8, 200]);
        save_tile(&tile, &path).unwrap();
        let back = load_tile(&path, "t", StainLabel::He).unwrap();
        assert_eq!(back.pixels(), tile.pixels());
    }

    #[test]
    fn alpha_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgba.png");
        let rgba = image::RgbaImage::from_fn(3, 3, |x, y| {
            image::Rgba([x as u8 * 50, y as u8 * 50, 128, 10])
        });
        rgba.save(&path).unwrap();
        let tile = load_tile(&path, "a", StainLabel::He).unwrap();
        assert_eq!(tile.pixels().len(), 27);
        assert_eq!(tile.pixel(1, 0), [50, 0, 128]);
    }

    #[test]
    fn resize_preserves_constant_color() {
        let tile = ImageTile::constant(64, 64, [120, 30, 90]);
        let small = resize_bicubic(&tile, 32, 32);
        assert_eq!(small.width(), 32);
        for px in small.pixels().chunks_exact(3) {
            assert_eq!(px, [120, 30, 90]);
        }
    }
}
