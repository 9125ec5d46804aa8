//! Color-statistics transfer: match per-channel CIELAB mean and standard
//! deviation of a target appearance.

use super::ColorStatProfile;
use crate::error::{Error, Result};
use crate::imagecore::{lab_to_rgb, rgb_to_lab, ImageTile, LabImage};
use crate::util::KahanSum;

/// Floor on the source standard deviation; a constant channel maps to the
/// constant target mean instead of dividing by zero.
pub const EPSILON_SIGMA: f64 = 1e-6;

fn stats_from_lab(lab: &LabImage) -> ColorStatProfile {
    let n = lab.data().len() as f64;
    let mut sums = [KahanSum::new(); 3];
    for px in lab.data() {
        for c in 0..3 {
            sums[c].add(px[c]);
        }
    }
    let mean = [sums[0].value() / n, sums[1].value() / n, sums[2].value() / n];
    let mut sq = [KahanSum::new(); 3];
    for px in lab.data() {
        for c in 0..3 {
            let d = px[c] - mean[c];
            sq[c].add(d * d);
        }
    }
    // population standard deviation (N denominator)
    let std = [
        (sq[0].value() / n).sqrt(),
        (sq[1].value() / n).sqrt(),
        (sq[2].value() / n).sqrt(),
    ];
    ColorStatProfile { mean, std }
}

/// Per-channel mean and population standard deviation of the tile in CIELAB.
pub fn stats_lab(tile: &ImageTile) -> ColorStatProfile {
    stats_from_lab(&rgb_to_lab(tile))
}

/// Unweighted average of per-image means and per-image standard deviations
/// across the corpus.
pub fn fit_colorstat(corpus: &[ImageTile]) -> Result<ColorStatProfile> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let per_image: Vec<ColorStatProfile> = corpus.iter().map(stats_lab).collect();
    let n = per_image.len() as f64;
    let mut mean_acc = [KahanSum::new(); 3];
    let mut std_acc = [KahanSum::new(); 3];
    for p in &per_image {
        for c in 0..3 {
            mean_acc[c].add(p.mean[c]);
            std_acc[c].add(p.std[c]);
        }
    }
    Ok(ColorStatProfile {
        mean: [
            mean_acc[0].value() / n,
            mean_acc[1].value() / n,
            mean_acc[2].value() / n,
        ],
        std: [
            std_acc[0].value() / n,
            std_acc[1].value() / n,
            std_acc[2].value() / n,
        ],
    })
}

/// Shifts and scales each LAB channel of `tile` to the target statistics:
/// out = (in - mean_src) * (std_tgt / max(std_src, eps)) + mean_tgt.
pub fn apply_colorstat(tile: &ImageTile, target: &ColorStatProfile) -> ImageTile {
    let mut lab = rgb_to_lab(tile);
    let src = stats_from_lab(&lab);
    let mut gain = [0.0f64; 3];
    for (c, g) in gain.iter_mut().enumerate() {
        *g = target.std[c] / src.std[c].max(EPSILON_SIGMA);
    }
    for px in lab.data_mut() {
        for c in 0..3 {
            px[c] = (px[c] - src.mean[c]) * gain[c] + target.mean[c];
        }
    }
    lab_to_rgb(&lab).with_metadata(tile.id.clone(), tile.stain_label.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::StainLabel;
    use rand::{Rng, SeedableRng};

    fn random_tile(seed: u64, w: u32, h: u32) -> ImageTile {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pixels: Vec<u8> = (0..w as usize * h as usize * 3)
            .map(|_| rng.gen())
            .collect();
        ImageTile::new(w, h, pixels, format!("rand{seed}"), StainLabel::He).unwrap()
    }

    #[test]
    fn constant_gray_has_zero_std() {
        let p = stats_lab(&ImageTile::constant(4, 4, [119, 119, 119]));
        assert!((p.mean[0] - 50.034438792538).abs() < 1e-9);
        assert!(p.mean[1].abs() < 1e-9 && p.mean[2].abs() < 1e-9);
        assert_eq!(p.std, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn black_white_pair_has_symmetric_l_stats() {
        let tile = ImageTile::new(
            2,
            1,
            vec![0, 0, 0, 255, 255, 255],
            "bw",
            StainLabel::He,
        )
        .unwrap();
        let p = stats_lab(&tile);
        assert!((p.mean[0] - 50.0).abs() < 1e-12);
        assert!((p.std[0] - 50.0).abs() < 1e-12);
    }

    #[test]
    fn stats_match_two_pass_oracle() {
        let tile = random_tile(7, 32, 32);
        let p = stats_lab(&tile);
        // independent plain two-pass mean/std over the same LAB data
        let lab = rgb_to_lab(&tile);
        let n = lab.data().len() as f64;
        for c in 0..3 {
            let mean: f64 = lab.data().iter().map(|px| px[c]).sum::<f64>() / n;
            let var: f64 = lab
                .data()
                .iter()
                .map(|px| (px[c] - mean) * (px[c] - mean))
                .sum::<f64>()
                / n;
            assert!((p.mean[c] - mean).abs() < 1e-9);
            assert!((p.std[c] - var.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn fit_of_single_tile_equals_stats() {
        let tile = random_tile(3, 16, 16);
        let fit = fit_colorstat(std::slice::from_ref(&tile)).unwrap();
        let direct = stats_lab(&tile);
        assert_eq!(fit.mean, direct.mean);
        assert_eq!(fit.std, direct.std);
    }

    #[test]
    fn fit_of_identical_tiles_equals_stats() {
        let tile = random_tile(4, 16, 16);
        let fit = fit_colorstat(&[tile.clone(), tile.clone()]).unwrap();
        let direct = stats_lab(&tile);
        for c in 0..3 {
            assert!((fit.mean[c] - direct.mean[c]).abs() < 1e-12);
            assert!((fit.std[c] - direct.std[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_of_two_tiles_is_arithmetic_mean() {
        let a = random_tile(5, 16, 16);
        let b = random_tile(6, 16, 16);
        let pa = stats_lab(&a);
        let pb = stats_lab(&b);
        let fit = fit_colorstat(&[a, b]).unwrap();
        for c in 0..3 {
            assert!((fit.mean[c] - (pa.mean[c] + pb.mean[c]) / 2.0).abs() < 1e-12);
            assert!((fit.std[c] - (pa.std[c] + pb.std[c]) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(fit_colorstat(&[]), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn self_profile_is_near_identity() {
        let tile = random_tile(11, 32, 32);
        let out = apply_colorstat(&tile, &stats_lab(&tile));
        for (a, b) in out.pixels().iter().zip(tile.pixels()) {
            assert!((*a as i16 - *b as i16).abs() <= 2, "{a} vs {b}");
        }
    }

    #[test]
    fn constant_tile_maps_to_target_mean() {
        let tile = ImageTile::constant(8, 8, [80, 140, 200]);
        let target = ColorStatProfile {
            mean: [62.0, 11.0, -20.0],
            std: [5.0, 3.0, 3.0],
        };
        let out = apply_colorstat(&tile, &target);
        let got = stats_lab(&out);
        for c in 0..3 {
            assert!(
                (got.mean[c] - target.mean[c]).abs() < 1.0,
                "channel {c}: {} vs {}",
                got.mean[c],
                target.mean[c]
            );
        }
        // still constant
        let first = out.pixel(0, 0);
        assert!(out.pixels().chunks_exact(3).all(|px| px == first));
    }

    #[test]
    fn gray_tile_shifts_toward_red_target() {
        let tile = random_tile(13, 16, 16);
        // make it gray
        let gray_pixels: Vec<u8> = tile
            .pixels()
            .chunks_exact(3)
            .flat_map(|px| {
                let v = px[0];
                [v, v, v]
            })
            .collect();
        let gray = ImageTile::new(16, 16, gray_pixels, "g", StainLabel::He).unwrap();
        let mut target = stats_lab(&gray);
        target.mean[1] = 20.0;
        target.std[1] = 1.0;
        let out = apply_colorstat(&gray, &target);
        let got = stats_lab(&out);
        assert!(
            (got.mean[1] - 20.0).abs() < 1.5,
            "a-channel mean {}",
            got.mean[1]
        );
    }
}
