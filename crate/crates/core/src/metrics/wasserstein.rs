//! Exact 1-D Wasserstein-1 distance and its color-channel wiring.

use crate::error::{Error, Result};
use crate::imagecore::{rgb_to_lab, ImageTile};

/// Default cap on pooled pixel samples per color channel.
pub const WD_SAMPLE_CAP: usize = 1_000_000;

/// One-channel empirical distribution held as sorted samples; the CDF is
/// implicit in the order statistics.
#[derive(Debug, Clone)]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn from_samples(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySamples("empirical distribution"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample);
        }
        values.sort_unstable_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty() // construction rejects empty sets; always false
    }
}

/// Exact W1 via CDF-difference integration over the merged support. For
/// equal sample counts this equals the mean absolute difference of sorted
/// order statistics.
pub fn wasserstein_1d(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let av = a.values();
    let bv = b.values();
    let na = av.len() as f64;
    let nb = bv.len() as f64;
    let mut i = 0usize;
    let mut j = 0usize;
    let mut prev = f64::NAN;
    let mut acc = 0.0;
    while i < av.len() || j < bv.len() {
        let v = match (av.get(i), bv.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!("loop condition"),
        };
        if prev.is_finite() {
            let fa = i as f64 / na;
            let fb = j as f64 / nb;
            acc += (fa - fb).abs() * (v - prev);
        }
        while i < av.len() && av[i] <= v {
            i += 1;
        }
        while j < bv.len() && bv[j] <= v {
            j += 1;
        }
        prev = v;
    }
    acc
}

/// Pools one LAB channel (1 = a, 2 = b) across a tile set with deterministic
/// stride subsampling in tile order, then rescales to [0, 1] via the fixed
/// affine map for the nominal [-128, 127] range.
fn pooled_channel(tiles: &[ImageTile], channel: usize, cap: usize) -> Result<EmpiricalDistribution> {
    let total: usize = tiles.iter().map(|t| t.pixel_count()).sum();
    if total == 0 {
        return Err(Error::EmptySamples("tile set has no pixels"));
    }
    let stride = total.div_ceil(cap).max(1);
    let mut samples = Vec::with_capacity(total.div_ceil(stride));
    let mut counter = 0usize;
    for tile in tiles {
        let lab = rgb_to_lab(tile);
        for px in lab.data() {
            if counter.is_multiple_of(stride) {
                samples.push((px[channel] + 128.0) / 255.0);
            }
            counter += 1;
        }
    }
    EmpiricalDistribution::from_samples(samples)
}

/// Mean of the per-channel Wasserstein distances between the pooled a and b
/// color channels of two tile sets.
pub fn wd_color(generated: &[ImageTile], target: &[ImageTile], sample_cap: usize) -> Result<f64> {
    if generated.is_empty() || target.is_empty() {
        return Err(Error::EmptySamples("wd_color tile set"));
    }
    let mut acc = 0.0;
    for channel in [1usize, 2usize] {
        let g = pooled_channel(generated, channel, sample_cap)?;
        let t = pooled_channel(target, channel, sample_cap)?;
        acc += wasserstein_1d(&g, &t);
    }
    Ok(acc / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::colored_noise_tile;
    use rand::{Rng, SeedableRng};

    fn dist(v: Vec<f64>) -> EmpiricalDistribution {
        EmpiricalDistribution::from_samples(v).unwrap()
    }

    /// Independent oracle: evaluate both CDFs by binary search on a grid of
    /// all breakpoints plus interval midpoints, and integrate.
    pub(crate) fn wd_oracle(a: &[f64], b: &[f64]) -> f64 {
        let mut asort = a.to_vec();
        let mut bsort = b.to_vec();
        asort.sort_by(f64::total_cmp);
        bsort.sort_by(f64::total_cmp);
        let mut grid: Vec<f64> = asort.iter().chain(bsort.iter()).copied().collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let mut fine = Vec::with_capacity(grid.len() * 2);
        for w in grid.windows(2) {
            fine.push(w[0]);
            fine.push(0.5 * (w[0] + w[1]));
        }
        fine.push(*grid.last().unwrap());
        let cdf = |sorted: &[f64], v: f64| -> f64 {
            sorted.partition_point(|&s| s <= v) as f64 / sorted.len() as f64
        };
        let mut acc = 0.0;
        for w in fine.windows(2) {
            acc += (cdf(&asort, w[0]) - cdf(&bsort, w[0])).abs() * (w[1] - w[0]);
        }
        acc
    }

    #[test]
    fn identical_distributions_have_zero_distance() {
        let d = dist(vec![1.0, 2.0, 5.0, -3.0]);
        assert_eq!(wasserstein_1d(&d, &d), 0.0);
    }

    #[test]
    fn point_masses() {
        let a = dist(vec![0.0]);
        let b = dist(vec![2.5]);
        assert!((wasserstein_1d(&a, &b) - 2.5).abs() < 1e-15);
        let c = dist(vec![-1.75]);
        assert!((wasserstein_1d(&a, &c) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn matches_cdf_integration_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let na = rng.gen_range(1..200);
            let nb = rng.gen_range(1..200);
            let a: Vec<f64> = (0..na).map(|_| rng.gen::<f64>() * 10.0 - 5.0).collect();
            let b: Vec<f64> = (0..nb).map(|_| rng.gen::<f64>() * 6.0 - 1.0).collect();
            let fast = wasserstein_1d(&dist(a.clone()), &dist(b.clone()));
            let slow = wd_oracle(&a, &b);
            assert!((fast - slow).abs() < 1e-9, "{fast} vs {slow}");
        }
    }

    #[test]
    fn equal_count_form_agrees() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let a: Vec<f64> = (0..500).map(|_| rng.gen::<f64>()).collect();
        let b: Vec<f64> = (0..500).map(|_| rng.gen::<f64>() * 2.0).collect();
        let fast = wasserstein_1d(&dist(a.clone()), &dist(b.clone()));
        let mut asort = a;
        let mut bsort = b;
        asort.sort_by(f64::total_cmp);
        bsort.sort_by(f64::total_cmp);
        let direct: f64 = asort
            .iter()
            .zip(&bsort)
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>()
            / 500.0;
        assert!((fast - direct).abs() < 1e-12);
    }

    #[test]
    fn translation_property() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        let a: Vec<f64> = (0..137).map(|_| rng.gen::<f64>() * 4.0).collect();
        let shifted: Vec<f64> = a.iter().map(|v| v + 0.73).collect();
        let d = wasserstein_1d(&dist(a), &dist(shifted));
        assert!((d - 0.73).abs() < 1e-12, "{d}");
    }

    #[test]
    fn identical_tile_sets_have_zero_wd() {
        let set: Vec<ImageTile> = (0..8).map(|s| colored_noise_tile(s, 16)).collect();
        assert_eq!(wd_color(&set, &set, WD_SAMPLE_CAP).unwrap(), 0.0);
    }

    #[test]
    fn constant_b_shift_gives_half_delta() {
        // two constant-color sets whose a channel differs while b stays put:
        // the mean over the two channel WDs is delta_a / 2
        let g = vec![ImageTile::constant(16, 16, [140, 90, 110])];
        let t = vec![ImageTile::constant(16, 16, [160, 85, 112])];
        let la = rgb_to_lab(&g[0]).data()[0];
        let lb = rgb_to_lab(&t[0]).data()[0];
        let delta_a = ((la[1] - lb[1]) / 255.0).abs();
        let delta_b = ((la[2] - lb[2]) / 255.0).abs();
        let wd = wd_color(&g, &t, WD_SAMPLE_CAP).unwrap();
        assert!((wd - (delta_a + delta_b) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn subsampling_is_deterministic_and_bounded() {
        let set: Vec<ImageTile> = (0..4).map(|s| colored_noise_tile(s + 50, 64)).collect();
        let other: Vec<ImageTile> = (0..4).map(|s| colored_noise_tile(s + 90, 64)).collect();
        let w1 = wd_color(&set, &other, 1000).unwrap();
        let w2 = wd_color(&set, &other, 1000).unwrap();
        assert_eq!(w1, w2);
    }

    #[test]
    fn empty_set_is_an_error() {
        let set = vec![ImageTile::constant(4, 4, [1, 2, 3])];
        assert!(wd_color(&[], &set, WD_SAMPLE_CAP).is_err());
        assert!(EmpiricalDistribution::from_samples(vec![]).is_err());
        assert!(EmpiricalDistribution::from_samples(vec![f64::NAN]).is_err());
    }
}
