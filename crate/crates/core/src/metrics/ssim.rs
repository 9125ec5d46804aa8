//! Windowed structural similarity on grayscale images.
//!
//! Uniform (unweighted) square windows over fully-interior positions;
//! statistics are exact because window sums come from u64 integral images.

use crate::error::{Error, Result};
use crate::imagecore::GrayTile;

pub const DEFAULT_WINDOW: usize = 7;
pub const DEFAULT_DATA_RANGE: f64 = 255.0;

#[derive(Debug, Clone)]
pub struct SsimResult {
    /// Arithmetic mean of the per-window map.
    pub mean_ssim: f64,
    /// Per-window SSIM values, row-major over window top-left positions.
    pub map: Vec<f64>,
    pub map_width: u32,
    pub map_height: u32,
    pub window_size: usize,
}

/// Summed-area table with a zero border; sums of arbitrary windows become
/// four lookups.
struct Integral {
    w: usize,
    data: Vec<u64>,
}

impl Integral {
    fn build(width: usize, height: usize, value: impl Fn(usize) -> u64) -> Self {
        let w = width + 1;
        let mut data = vec![0u64; w * (height + 1)];
        for y in 0..height {
            let mut row_sum = 0u64;
            for x in 0..width {
                row_sum += value(y * width + x);
                data[(y + 1) * w + x + 1] = data[y * w + x + 1] + row_sum;
            }
        }
        Self { w, data }
    }

    #[inline]
    fn window_sum(&self, x: usize, y: usize, size: usize) -> u64 {
        let (x1, y1) = (x + size, y + size);
        self.data[y1 * self.w + x1] + self.data[y * self.w + x]
            - self.data[y * self.w + x1]
            - self.data[y1 * self.w + x]
    }
}

/// Mean SSIM between two aligned grayscale images with a uniform
/// `window`×`window` kernel, c1 = (0.01·data_range)², c2 = (0.03·data_range)².
pub fn ssim(x: &GrayTile, y: &GrayTile, window: usize, data_range: f64) -> Result<SsimResult> {
    if x.width() != y.width() || x.height() != y.height() {
        return Err(Error::SizeMismatch(x.width(), x.height(), y.width(), y.height()));
    }
    let (w, h) = (x.width() as usize, x.height() as usize);
    if window == 0 || window.is_multiple_of(2) || window > w || window > h {
        return Err(Error::InvalidWindow {
            window,
            width: x.width(),
            height: x.height(),
        });
    }

    let xp = x.pixels();
    let yp = y.pixels();
    let sx = Integral::build(w, h, |i| xp[i] as u64);
    let sy = Integral::build(w, h, |i| yp[i] as u64);
    let sxx = Integral::build(w, h, |i| (xp[i] as u64) * (xp[i] as u64));
    let syy = Integral::build(w, h, |i| (yp[i] as u64) * (yp[i] as u64));
    let sxy = Integral::build(w, h, |i| (xp[i] as u64) * (yp[i] as u64));

    let c1 = (0.01 * data_range) * (0.01 * data_range);
    let c2 = (0.03 * data_range) * (0.03 * data_range);
    let n = (window * window) as f64;

    let map_w = w - window + 1;
    let map_h = h - window + 1;
    let mut map = Vec::with_capacity(map_w * map_h);
    let mut total = 0.0f64;
    for wy in 0..map_h {
        for wx in 0..map_w {
            let mx = sx.window_sum(wx, wy, window) as f64 / n;
            let my = sy.window_sum(wx, wy, window) as f64 / n;
            let vx = sxx.window_sum(wx, wy, window) as f64 / n - mx * mx;
            let vy = syy.window_sum(wx, wy, window) as f64 / n - my * my;
            let cov = sxy.window_sum(wx, wy, window) as f64 / n - mx * my;
            let v = ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            map.push(v);
            total += v;
        }
    }
    Ok(SsimResult {
        mean_ssim: total / map.len() as f64,
        map,
        map_width: map_w as u32,
        map_height: map_h as u32,
        window_size: window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::gray_texture;

    /// Direct per-window implementation: plain loops over pixels, no
    /// integral images. The independent oracle for the fast path.
    pub(crate) fn ssim_oracle(x: &GrayTile, y: &GrayTile, window: usize, data_range: f64) -> f64 {
        let (w, h) = (x.width() as usize, x.height() as usize);
        let c1 = (0.01 * data_range).powi(2);
        let c2 = (0.03 * data_range).powi(2);
        let n = (window * window) as f64;
        let mut total = 0.0;
        let mut count = 0usize;
        for wy in 0..=(h - window) {
            for wx in 0..=(w - window) {
                let mut sx = 0.0;
                let mut sy = 0.0;
                for dy in 0..window {
                    for dx in 0..window {
                        sx += x.pixels()[(wy + dy) * w + wx + dx] as f64;
                        sy += y.pixels()[(wy + dy) * w + wx + dx] as f64;
                    }
                }
                let mx = sx / n;
                let my = sy / n;
                let mut vx = 0.0;
                let mut vy = 0.0;
                let mut cov = 0.0;
                for dy in 0..window {
                    for dx in 0..window {
                        let a = x.pixels()[(wy + dy) * w + wx + dx] as f64 - mx;
                        let b = y.pixels()[(wy + dy) * w + wx + dx] as f64 - my;
                        vx += a * a;
                        vy += b * b;
                        cov += a * b;
                    }
                }
                vx /= n;
                vy /= n;
                cov /= n;
                total += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                    / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1;
            }
        }
        total / count as f64
    }

    #[test]
    fn self_similarity_is_exactly_one() {
        let x = gray_texture(1, 40, 33);
        let r = ssim(&x, &x, 7, 255.0).unwrap();
        assert_eq!(r.mean_ssim, 1.0);
        assert!(r.map.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn matches_direct_oracle() {
        for seed in 0..6 {
            let x = gray_texture(seed, 64, 64);
            let y = gray_texture(seed + 100, 64, 64);
            let fast = ssim(&x, &y, 7, 255.0).unwrap().mean_ssim;
            let slow = ssim_oracle(&x, &y, 7, 255.0);
            assert!((fast - slow).abs() < 1e-6, "{fast} vs {slow}");
        }
    }

    #[test]
    fn inverted_image_scores_low() {
        let x = gray_texture(3, 64, 64);
        let inv = GrayTile::from_fn(64, 64, |cx, cy| 255 - x.pixels()[(cy * 64 + cx) as usize]);
        let r = ssim(&x, &inv, 7, 255.0).unwrap();
        assert!(r.mean_ssim < 0.5, "got {}", r.mean_ssim);
        let oracle = ssim_oracle(&x, &inv, 7, 255.0);
        assert!((r.mean_ssim - oracle).abs() < 1e-6);
    }

    #[test]
    fn symmetric_in_arguments() {
        let x = gray_texture(4, 48, 48);
        let y = gray_texture(5, 48, 48);
        let a = ssim(&x, &y, 7, 255.0).unwrap().mean_ssim;
        let b = ssim(&y, &x, 7, 255.0).unwrap().mean_ssim;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn window_and_size_validation() {
        let x = gray_texture(6, 8, 8);
        let y = gray_texture(7, 9, 8);
        assert!(matches!(ssim(&x, &y, 7, 255.0), Err(Error::SizeMismatch(..))));
        let y = gray_texture(7, 8, 8);
        assert!(matches!(ssim(&x, &y, 9, 255.0), Err(Error::InvalidWindow { .. })));
        assert!(matches!(ssim(&x, &y, 4, 255.0), Err(Error::InvalidWindow { .. })));
        assert!(ssim(&x, &y, 7, 255.0).is_ok());
    }

    #[test]
    fn map_dimensions_cover_interior_windows() {
        let x = gray_texture(8, 20, 12);
        let r = ssim(&x, &x, 7, 255.0).unwrap();
        assert_eq!(r.map_width, 14);
        assert_eq!(r.map_height, 6);
        assert_eq!(r.map.len(), 14 * 6);
    }
}
