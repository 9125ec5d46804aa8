//! Vahadane stain estimation: sparse non-negative factorization of the
//! tissue OD cloud.
//!
//! Minimizes ||OD - C·Wᵀ||²_F + λ·||C||₁ subject to C ≥ 0, W ≥ 0 and
//! ||w_j|| ≤ 1, by alternating exact block updates:
//!
//! * concentration step: per-pixel coordinate descent with a non-negative
//!   soft threshold at λ/2;
//! * dictionary step: per-column closed-form minimization followed by
//!   projection onto the non-negative unit ball (the quadratic in each
//!   column is isotropic, so projecting the unconstrained optimum is the
//!   exact constrained minimizer).
//!
//! Every substep is an exact minimization over a convex set, so the
//! objective is non-increasing across iterations; the trace is recorded so
//! callers can assert it.

use super::macenko::{stain_plane, tissue_rows};
use super::{StainMatrix, StainParams};
use crate::error::{Error, Result};
use crate::imagecore::OdMatrix;
use crate::util::percentile_unsorted;

/// Fallback initial dictionary (classic hematoxylin/eosin absorption
/// directions) for inputs whose OD cloud spans no plane.
const FALLBACK_INIT: [[f64; 3]; 2] = [
    [0.6504627355128258, 0.7004983259337253, 0.29020644922803457],
    [0.07, 0.99, 0.11],
];

/// Maximum coordinate-descent sweeps per concentration update. Each sweep is
/// an exact per-coordinate minimization, so truncation cannot break
/// monotonicity, only slow convergence.
const MAX_C_SWEEPS: usize = 6;

#[derive(Debug, Clone)]
pub struct VahadaneFit {
    pub matrix: StainMatrix,
    /// Objective after initialization and after every iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// Final per-tissue-pixel concentrations from the sparse solve.
    pub concentrations: Vec<[f64; 2]>,
    /// Final mean squared reconstruction residual per tissue pixel.
    pub mean_residual: f64,
}

/// Initial dictionary: the robust angle extremes of the OD plane, the same
/// construction Macenko uses, which lands inside the basin of the planted
/// solution on clean data. Falls back to reference H&E directions when the
/// cloud is rank-deficient.
fn initial_dictionary(rows: &[[f64; 3]], alpha: f64) -> [[f64; 3]; 2] {
    let Ok((v1, v2)) = stain_plane(rows) else {
        return FALLBACK_INIT;
    };
    let mut angles: Vec<f64> = rows
        .iter()
        .map(|r| {
            let p = v1.x * r[0] + v1.y * r[1] + v1.z * r[2];
            let q = v2.x * r[0] + v2.y * r[1] + v2.z * r[2];
            q.atan2(p)
        })
        .collect();
    let lo = percentile_unsorted(&mut angles, alpha);
    let hi = percentile_unsorted(&mut angles, 100.0 - alpha);
    let dir = |phi: f64| -> [f64; 3] {
        let (s, c) = phi.sin_cos();
        [
            (c * v1.x + s * v2.x).max(0.0),
            (c * v1.y + s * v2.y).max(0.0),
            (c * v1.z + s * v2.z).max(0.0),
        ]
    };
    let (a, b) = (unit_or(dir(lo), FALLBACK_INIT[0]), unit_or(dir(hi), FALLBACK_INIT[1]));
    if a == b {
        FALLBACK_INIT
    } else {
        [a, b]
    }
}

fn unit_or(v: [f64; 3], fallback: [f64; 3]) -> [f64; 3] {
    let n = norm(v);
    if n < 1e-9 {
        fallback
    } else {
        [v[0] / n, v[1] / n, v[2] / n]
    }
}

#[inline]
fn norm(v: [f64; 3]) -> f64 {
    dot(v, v).sqrt()
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Exact coordinate-descent update of one pixel's concentration pair.
#[inline]
fn update_pixel(
    c: &mut [f64; 2],
    b0: f64,
    b1: f64,
    g01: f64,
    wn0: f64,
    wn1: f64,
    thr: f64,
) {
    for _ in 0..MAX_C_SWEEPS {
        let old0 = c[0];
        let old1 = c[1];
        c[0] = if wn0 > 0.0 {
            ((b0 - g01 * c[1] - thr) / wn0).max(0.0)
        } else {
            0.0
        };
        c[1] = if wn1 > 0.0 {
            ((b1 - g01 * c[0] - thr) / wn1).max(0.0)
        } else {
            0.0
        };
        if (c[0] - old0).abs() + (c[1] - old1).abs() <= 1e-12 * (1.0 + c[0] + c[1]) {
            break;
        }
    }
}

/// Sparse non-negative dictionary fit of the two stain directions.
pub fn fit_vahadane_dictionary(od: &OdMatrix, params: &StainParams) -> Result<VahadaneFit> {
    let rows = tissue_rows(od, params.beta_od_threshold);
    if rows.len() < params.min_tissue_pixels {
        return Err(Error::InsufficientTissue {
            found: rows.len(),
            required: params.min_tissue_pixels,
        });
    }
    let n = rows.len();
    let lambda = params.sparsity_lambda;
    let thr = lambda / 2.0;

    let init = initial_dictionary(&rows, params.alpha_percentile);
    let mut w = init;
    let mut c = vec![[0.0f64; 2]; n];

    let objective = |w: &[[f64; 3]; 2], c: &[[f64; 2]]| -> f64 {
        let mut f = 0.0;
        for (row, ci) in rows.iter().zip(c) {
            for ch in 0..3 {
                let r = row[ch] - w[0][ch] * ci[0] - w[1][ch] * ci[1];
                f += r * r;
            }
            f += lambda * (ci[0] + ci[1]);
        }
        f
    };

    let concentration_step = |w: &[[f64; 3]; 2], c: &mut Vec<[f64; 2]>| {
        let g01 = dot(w[0], w[1]);
        let wn0 = dot(w[0], w[0]);
        let wn1 = dot(w[1], w[1]);
        for (row, ci) in rows.iter().zip(c.iter_mut()) {
            let b0 = dot(w[0], *row);
            let b1 = dot(w[1], *row);
            update_pixel(ci, b0, b1, g01, wn0, wn1, thr);
        }
    };

    concentration_step(&w, &mut c);
    let mut trace = vec![objective(&w, &c)];
    let mut iterations = 0;

    for _ in 0..params.max_iters {
        // dictionary step: exact per-column minimization with projection
        // onto {w >= 0, |w| <= 1}
        for j in 0..2 {
            let other = 1 - j;
            let mut g = [0.0f64; 3];
            let mut csq = 0.0f64;
            for (row, ci) in rows.iter().zip(&c) {
                let cj = ci[j];
                if cj == 0.0 {
                    continue;
                }
                csq += cj * cj;
                for ch in 0..3 {
                    g[ch] += cj * (row[ch] - w[other][ch] * ci[other]);
                }
            }
            if csq <= 0.0 {
                continue; // column unused; leave its atom in place
            }
            let mut wj = [
                (g[0] / csq).max(0.0),
                (g[1] / csq).max(0.0),
                (g[2] / csq).max(0.0),
            ];
            let nj = norm(wj);
            if nj > 1.0 {
                for v in &mut wj {
                    *v /= nj;
                }
            }
            w[j] = wj;
        }

        concentration_step(&w, &mut c);
        let f = objective(&w, &c);
        let prev = *trace.last().expect("trace is seeded");
        trace.push(f);
        iterations += 1;
        if (prev - f).abs() <= params.tol * prev.abs().max(1e-300) {
            break;
        }
    }

    let mut residual = 0.0;
    for (row, ci) in rows.iter().zip(&c) {
        for ch in 0..3 {
            let r = row[ch] - w[0][ch] * ci[0] - w[1][ch] * ci[1];
            residual += r * r;
        }
    }

    let matrix = StainMatrix::from_estimates(unit_or(w[0], init[0]), unit_or(w[1], init[1]))?;
    Ok(VahadaneFit {
        matrix,
        objective_trace: trace,
        iterations,
        concentrations: c,
        mean_residual: residual / n as f64,
    })
}
