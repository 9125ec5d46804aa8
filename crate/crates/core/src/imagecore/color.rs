//! sRGB ⇄ CIELAB (D65) and grayscale conversions.
//!
//! All pixel math is in f64; quantization back to 8 bits happens only at the
//! image output boundary. The hot paths are table-driven: 8-bit inputs decode
//! through a 256-entry LUT, and quantization to 8 bits runs as a binary
//! search over precomputed bin boundaries instead of calling `powf` per
//! channel, which keeps a full ColorStat transfer of a 256×256 tile in the
//! single-digit-millisecond range on one core.

use super::{GrayTile, ImageTile, LabImage, StainLabel};
use std::sync::OnceLock;

/// sRGB → XYZ (D65). The white point is taken as the exact row sums so that
/// any gray input lands on a == b == 0 to machine precision.
const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

/// Inverse of `SRGB_TO_XYZ` to full f64 precision.
const XYZ_TO_SRGB: [[f64; 3]; 3] = [
    [3.2404548360214087, -1.5371388501025751, -0.498531546868481],
    [-0.9692663898756538, 1.876010928842491, 0.041556082346673545],
    [0.05564341960421367, -0.20402585426769818, 1.057225162457929],
];

const WHITE: [f64; 3] = [
    SRGB_TO_XYZ[0][0] + SRGB_TO_XYZ[0][1] + SRGB_TO_XYZ[0][2],
    SRGB_TO_XYZ[1][0] + SRGB_TO_XYZ[1][1] + SRGB_TO_XYZ[1][2],
    SRGB_TO_XYZ[2][0] + SRGB_TO_XYZ[2][1] + SRGB_TO_XYZ[2][2],
];

// CIE 1976 constants in their exact rational form.
const EPSILON: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;

fn srgb_decode(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

/// 256-entry sRGB decode table for 8-bit inputs.
fn decode_lut() -> &'static [f64; 256] {
    static LUT: OnceLock<[f64; 256]> = OnceLock::new();
    LUT.get_or_init(|| {
        let mut t = [0.0; 256];
        for (i, slot) in t.iter_mut().enumerate() {
            *slot = srgb_decode(i as f64 / 255.0);
        }
        t
    })
}

/// Bin boundaries for quantizing a linear-light value to 8-bit sRGB.
/// `boundaries[k]` is the linear value whose encoded form is exactly
/// (k + 0.5)/255, so `partition_point` over this table reproduces
/// `round(255 * srgb_encode(x))` with round-half-up semantics.
fn encode_boundaries() -> &'static [f64; 255] {
    static BOUNDS: OnceLock<[f64; 255]> = OnceLock::new();
    BOUNDS.get_or_init(|| {
        let mut b = [0.0; 255];
        for (k, slot) in b.iter_mut().enumerate() {
            *slot = srgb_decode((k as f64 + 0.5) / 255.0);
        }
        b
    })
}

#[inline]
fn quantize_srgb(linear: f64) -> u8 {
    let bounds = encode_boundaries();
    bounds.partition_point(|&b| b <= linear) as u8
}

/// Cube root via bit-trick seed plus Newton refinement. Matches `f64::cbrt`
/// to < 1 ulp on (0, 2] but runs ~2-3x faster; only called with positive
/// arguments (the CIELAB forward nonlinearity above EPSILON).
#[inline]
fn cbrt_fast(x: f64) -> f64 {
    let mut y = f64::from_bits(x.to_bits() / 3 + 0x2A9F7893782DA1CE);
    for _ in 0..4 {
        y = (2.0 * y + x / (y * y)) * (1.0 / 3.0);
    }
    y
}

#[inline]
fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        cbrt_fast(t)
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

/// CIELAB under a D65 white point assuming sRGB input. Total on valid tiles;
/// dimensions preserved.
pub fn rgb_to_lab(tile: &ImageTile) -> LabImage {
    let lut = decode_lut();
    let mut data = Vec::with_capacity(tile.pixel_count());
    for px in tile.pixels().chunks_exact(3) {
        let r = lut[px[0] as usize];
        let g = lut[px[1] as usize];
        let b = lut[px[2] as usize];
        let x = SRGB_TO_XYZ[0][0] * r + SRGB_TO_XYZ[0][1] * g + SRGB_TO_XYZ[0][2] * b;
        let y = SRGB_TO_XYZ[1][0] * r + SRGB_TO_XYZ[1][1] * g + SRGB_TO_XYZ[1][2] * b;
        let z = SRGB_TO_XYZ[2][0] * r + SRGB_TO_XYZ[2][1] * g + SRGB_TO_XYZ[2][2] * b;
        let fx = lab_f(x / WHITE[0]);
        let fy = lab_f(y / WHITE[1]);
        let fz = lab_f(z / WHITE[2]);
        data.push([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]);
    }
    LabImage::from_raw(tile.width(), tile.height(), data)
}

#[inline]
fn lab_f_inv(f: f64) -> f64 {
    let f3 = f * f * f;
    if f3 > EPSILON {
        f3
    } else {
        (116.0 * f - 16.0) / KAPPA
    }
}

/// Inverse of [`rgb_to_lab`]; out-of-gamut values clamp to [0, 255] after
/// conversion. Provenance metadata is left at its defaults, callers
/// re-attach it.
pub fn lab_to_rgb(img: &LabImage) -> ImageTile {
    let mut pixels = Vec::with_capacity(img.data().len() * 3);
    for &[l, a, b] in img.data() {
        let fy = (l + 16.0) / 116.0;
        let fx = fy + a / 500.0;
        let fz = fy - b / 200.0;
        let x = lab_f_inv(fx) * WHITE[0];
        let y = if l > KAPPA * EPSILON {
            fy * fy * fy
        } else {
            l / KAPPA
        } * WHITE[1];
        let z = lab_f_inv(fz) * WHITE[2];
        let lr = XYZ_TO_SRGB[0][0] * x + XYZ_TO_SRGB[0][1] * y + XYZ_TO_SRGB[0][2] * z;
        let lg = XYZ_TO_SRGB[1][0] * x + XYZ_TO_SRGB[1][1] * y + XYZ_TO_SRGB[1][2] * z;
        let lb = XYZ_TO_SRGB[2][0] * x + XYZ_TO_SRGB[2][1] * y + XYZ_TO_SRGB[2][2] * z;
        pixels.push(quantize_srgb(lr));
        pixels.push(quantize_srgb(lg));
        pixels.push(quantize_srgb(lb));
    }
    ImageTile::new(img.width(), img.height(), pixels, "", StainLabel::default())
        .expect("LabImage geometry is valid by construction")
}

/// The lightness half of the L/AB channel split: per-pixel L values in
/// [0, 100].
pub fn l_channel(img: &LabImage) -> Vec<f64> {
    img.data().iter().map(|px| px[0]).collect()
}

/// The color half of the L/AB channel split: per-pixel (a, b) pairs.
pub fn ab_channels(img: &LabImage) -> Vec<[f64; 2]> {
    img.data().iter().map(|px| [px[1], px[2]]).collect()
}

/// Recombines a lightness channel with (a, b) color channels, e.g. source
/// lightness with generated colors.
pub fn merge_l_ab(
    l: &[f64],
    ab: &[[f64; 2]],
    width: u32,
    height: u32,
) -> crate::error::Result<LabImage> {
    let expected = width as usize * height as usize;
    if l.len() != expected || ab.len() != expected {
        return Err(crate::error::Error::DimensionMismatch {
            expected,
            got: l.len().min(ab.len()),
            context: "L/AB channel buffers vs geometry",
        });
    }
    let data = l
        .iter()
        .zip(ab)
        .map(|(&lv, &[a, b])| [lv, a, b])
        .collect();
    Ok(LabImage::from_raw(width, height, data))
}

/// ITU-R BT.601 luminance with round-half-up; gray inputs are fixed points.
pub fn rgb_to_gray(tile: &ImageTile) -> GrayTile {
    let mut pixels = Vec::with_capacity(tile.pixel_count());
    for px in tile.pixels().chunks_exact(3) {
        let y = 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64;
        pixels.push(y.round().clamp(0.0, 255.0) as u8);
    }
    GrayTile::new(tile.width(), tile.height(), pixels).expect("same geometry as input")
}
