//! Per-pixel stain concentrations and their robust maxima.

use super::StainMatrix;
use crate::imagecore::OdMatrix;
use crate::util::percentile_unsorted;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConcentrationSolver {
    /// Unconstrained least squares (may go negative on noisy OD).
    Lstsq,
    /// Exact non-negative least squares; with two stains the active sets can
    /// be enumerated, so this is the true NNLS optimum per pixel.
    #[default]
    Nnls,
}

impl std::fmt::Display for ConcentrationSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConcentrationSolver::Lstsq => f.write_str("lstsq"),
            ConcentrationSolver::Nnls => f.write_str("nnls"),
        }
    }
}

/// Solves od_row ≈ m · c_row for every pixel. The normal equations are 2×2,
/// so both solvers are closed-form.
pub fn compute_concentrations(
    od: &OdMatrix,
    m: &StainMatrix,
    solver: ConcentrationSolver,
) -> Vec<[f64; 2]> {
    let m0 = m.column(0);
    let m1 = m.column(1);
    let g00 = dot(m0, m0);
    let g01 = dot(m0, m1);
    let g11 = dot(m1, m1);
    let det = g00 * g11 - g01 * g01;
    let degenerate = det.abs() < 1e-12 * g00 * g11;

    od.rows()
        .iter()
        .map(|row| {
            let b0 = dot(m0, *row);
            let b1 = dot(m1, *row);
            if degenerate {
                // columns are (near-)parallel; attribute everything to stain 0
                let c0 = b0 / g00;
                return match solver {
                    ConcentrationSolver::Lstsq => [c0, 0.0],
                    ConcentrationSolver::Nnls => [c0.max(0.0), 0.0],
                };
            }
            let u0 = (g11 * b0 - g01 * b1) / det;
            let u1 = (g00 * b1 - g01 * b0) / det;
            match solver {
                ConcentrationSolver::Lstsq => [u0, u1],
                ConcentrationSolver::Nnls => {
                    if u0 >= 0.0 && u1 >= 0.0 {
                        return [u0, u1];
                    }
                    // enumerate the boundary candidates; objective relative
                    // to ||od||^2 is c'Gc - 2c'b
                    let (c0_only, f0) = if b0 > 0.0 {
                        (b0 / g00, -b0 * b0 / g00)
                    } else {
                        (0.0, 0.0)
                    };
                    let (c1_only, f1) = if b1 > 0.0 {
                        (b1 / g11, -b1 * b1 / g11)
                    } else {
                        (0.0, 0.0)
                    };
                    if f0 <= f1 {
                        [c0_only, 0.0]
                    } else {
                        [0.0, c1_only]
                    }
                }
            }
        })
        .collect()
}

/// Per-column empirical percentile of the concentration matrix, with linear
/// interpolation between order statistics.
pub fn pseudo_max_concentration(c: &[[f64; 2]], percentile: f64) -> [f64; 2] {
    debug_assert!(!c.is_empty());
    let mut col0: Vec<f64> = c.iter().map(|r| r[0]).collect();
    let mut col1: Vec<f64> = c.iter().map(|r| r[1]).collect();
    [
        percentile_unsorted(&mut col0, percentile),
        percentile_unsorted(&mut col1, percentile),
    ]
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
