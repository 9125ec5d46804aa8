//! Deterministic synthetic tiles for tests and benchmarks.
//!
//! All generators are seeded; the same seed always yields the same tile.

use crate::imagecore::{od_to_rgb, ImageTile, OdMatrix, StainLabel};
use crate::stainalg::StainMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The stain matrix planted in [`stain_tile`] outputs.
pub fn planted_matrix() -> StainMatrix {
    StainMatrix::from_estimates([0.65, 0.70, 0.29], [0.07, 0.99, 0.11]).expect("valid columns")
}

/// Smooth value-noise field in [0, 1]: bilinear interpolation of a seeded
/// coarse grid, which gives tiles tissue-like low-frequency texture.
fn smooth_field(rng: &mut ChaCha8Rng, size: u32, cells: u32) -> Vec<f64> {
    let g = cells as usize + 2;
    let grid: Vec<f64> = (0..g * g).map(|_| rng.gen::<f64>()).collect();
    let scale = cells as f64 / size as f64;
    let mut out = Vec::with_capacity(size as usize * size as usize);
    for y in 0..size {
        for x in 0..size {
            let fx = x as f64 * scale;
            let fy = y as f64 * scale;
            let x0 = fx.floor() as usize;
            let y0 = fy.floor() as usize;
            let tx = fx - x0 as f64;
            let ty = fy - y0 as f64;
            let v00 = grid[y0 * g + x0];
            let v01 = grid[y0 * g + x0 + 1];
            let v10 = grid[(y0 + 1) * g + x0];
            let v11 = grid[(y0 + 1) * g + x0 + 1];
            let top = v00 + (v01 - v00) * tx;
            let bot = v10 + (v11 - v10) * tx;
            out.push(top + (bot - top) * ty);
        }
    }
    out
}

/// Two-stain tile with smooth concentration fields: OD = M·C (+ optional
/// uniform OD noise), rendered through the usual 8-bit quantization.
///
/// The mixing field runs from near-pure stain 0 to strongly stain-1-dominant
/// so that percentile-based estimators see both extremes, and a separate
/// amplitude field varies overall staining strength. Every pixel clears the
/// default per-channel tissue threshold.
pub fn stain_tile(seed: u64, size: u32, od_noise: f64) -> ImageTile {
    let m = planted_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E3779B97F4A7C15));
    let mix = smooth_field(&mut rng, size, 6);
    let amp = smooth_field(&mut rng, size, 5);
    let rows: Vec<[f64; 3]> = mix
        .iter()
        .zip(&amp)
        .map(|(&t, &s)| {
            let scale = 0.75 + 0.55 * s;
            let c0 = scale * (0.19 + 1.45 * (1.0 - t));
            let c1 = scale * (0.05 + 1.45 * t);
            let mut od = m.reconstruct([c0, c1]);
            if od_noise > 0.0 {
                for v in &mut od {
                    *v = (*v + (rng.gen::<f64>() * 2.0 - 1.0) * od_noise).max(0.0);
                }
            }
            od
        })
        .collect();
    od_to_rgb(&OdMatrix::from_rows(rows), size, size, 255)
        .expect("row count matches geometry")
        .with_metadata(format!("stain{seed:04}"), StainLabel::He)
}

/// Colored-noise tile: a random base color plus independent per-pixel
/// jitter. Tiles drawn with sequential seeds form one i.i.d. distribution,
/// which is what the FID set-size experiments need.
pub fn colored_noise_tile(seed: u64, size: u32) -> ImageTile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0xD1B54A32D192ED03));
    let base = [
        60 + rng.gen_range(0..140u16) as i16,
        60 + rng.gen_range(0..140u16) as i16,
        60 + rng.gen_range(0..140u16) as i16,
    ];
    let tile = ImageTile::from_fn(size, size, |_, _| {
        let mut px = [0u8; 3];
        for c in 0..3 {
            let v = base[c] + rng.gen_range(-30..=30i16);
            px[c] = v.clamp(0, 255) as u8;
        }
        px
    });
    tile.with_metadata(format!("noise{seed:05}"), StainLabel::Other("synthetic".into()))
}

/// Uniformly random pixels; maximally unlike any structured distribution.
pub fn uniform_noise_tile(seed: u64, size: u32) -> ImageTile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0xA24BAED4963EE407));
    let pixels: Vec<u8> = (0..size as usize * size as usize * 3)
        .map(|_| rng.gen())
        .collect();
    ImageTile::new(size, size, pixels, format!("uni{seed:05}"), StainLabel::Other("synthetic".into()))
        .expect("valid geometry")
}

/// Gray gradient-plus-noise tile; useful as a generic SSIM operand.
pub fn gray_texture(seed: u64, width: u32, height: u32) -> crate::imagecore::GrayTile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0xF1357AEA2E62A9C5));
    crate::imagecore::GrayTile::from_fn(width, height, |x, y| {
        let base = (x * 2 + y) % 256;
        let jitter = rng.gen_range(-40..=40i16);
        (base as i16 + jitter).clamp(0, 255) as u8
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::rgb_to_od;

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(stain_tile(5, 32, 0.01).pixels(), stain_tile(5, 32, 0.01).pixels());
        assert_eq!(
            colored_noise_tile(5, 16).pixels(),
            colored_noise_tile(5, 16).pixels()
        );
    }

    #[test]
    fn stain_tiles_are_all_tissue() {
        let tile = stain_tile(1, 64, 0.0);
        let od = rgb_to_od(&tile, 255);
        let tissue = od
            .rows()
            .iter()
            .filter(|r| r.iter().all(|&v| v > 0.15))
            .count();
        assert_eq!(tissue, 64 * 64);
    }
}
