//! Small numeric and hashing helpers shared across modules.

use sha2::{Digest, Sha256};

/// Compensated (Neumaier) accumulator. Corpus fits reduce per-tile results
/// with this so that permuting the corpus moves no output by more than ~1 ulp.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Percentile with linear interpolation between order statistics
/// (the `numpy` "linear" method). `p` is in [0, 100]; `sorted` must be
/// ascending and non-empty.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * (p / 100.0).clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Percentile of an unsorted slice without a full sort. Uses
/// `select_nth_unstable` for the two bracketing order statistics, so the
/// result is identical to sorting first.
pub fn percentile_unsorted(values: &mut [f64], p: f64) -> f64 {
    debug_assert!(!values.is_empty());
    let n = values.len();
    if n == 1 {
        return values[0];
    }
    let h = (n - 1) as f64 * (p / 100.0).clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    let (_, &mut vlo, rest) = values.select_nth_unstable_by(lo, f64::total_cmp);
    if frac == 0.0 || lo + 1 >= n {
        return vlo;
    }
    // smallest element of the upper partition = (lo+1)-th order statistic
    let vhi = rest.iter().copied().fold(f64::INFINITY, f64::min);
    vlo + frac * (vhi - vlo)
}

/// SHA-256 of `bytes` as a lowercase hex string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

/// Mean and standard error (sample std / sqrt(n)) of a slice.
/// Returns (0, 0) for an empty slice and stderr 0 for a single value.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mut acc = KahanSum::new();
    for &v in values {
        acc.add(v);
    }
    let mean = acc.value() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let mut var_acc = KahanSum::new();
    for &v in values {
        var_acc.add((v - mean) * (v - mean));
    }
    let sample_var = var_acc.value() / (n - 1) as f64;
    (mean, (sample_var / n as f64).sqrt())
}
