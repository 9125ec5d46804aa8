//! The three traditional stain-transfer methods: per-image estimation,
//! corpus-averaged fitting, and transfer application.

mod colorstat;
mod concentration;
mod macenko;
mod transfer;
mod vahadane;

pub use colorstat::{apply_colorstat, fit_colorstat, stats_lab, EPSILON_SIGMA};
pub use concentration::{compute_concentrations, pseudo_max_concentration, ConcentrationSolver};
pub use macenko::estimate_stain_matrix_macenko;
pub use transfer::{apply_stain_transfer, fit_stain_profile, FitOutcome, TransferOutcome};
pub use vahadane::{fit_vahadane_dictionary, VahadaneFit};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Mean and population standard deviation of each CIELAB channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorStatProfile {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

/// 3×2 matrix whose unit-norm, non-negative columns are the OD absorption
/// directions of the two stains. Columns are ordered deterministically: the
/// one with the larger red-channel OD component is column 0, so averaging
/// across images never mixes stains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StainMatrix {
    columns: [[f64; 3]; 2],
}

impl StainMatrix {
    /// Builds a stain matrix from two raw direction estimates: columns with
    /// a negative entry sum are flipped, residual negative entries clamp to
    /// zero, then each column is renormalized and the pair is ordered by the
    /// red-OD component.
    pub fn from_estimates(a: [f64; 3], b: [f64; 3]) -> Result<Self> {
        let a = fix_column(a)?;
        let b = fix_column(b)?;
        Ok(Self::ordered(a, b))
    }

    /// Assembles already-sanitized unit columns, applying only the
    /// deterministic ordering: larger red-OD component first, remaining
    /// channels breaking ties lexicographically.
    pub(crate) fn ordered(a: [f64; 3], b: [f64; 3]) -> Self {
        let a_first = match a[0].total_cmp(&b[0]) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => {
                a[1].total_cmp(&b[1]).then(a[2].total_cmp(&b[2])) != std::cmp::Ordering::Less
            }
        };
        if a_first {
            Self { columns: [a, b] }
        } else {
            Self { columns: [b, a] }
        }
    }

    pub fn column(&self, j: usize) -> [f64; 3] {
        self.columns[j]
    }

    /// Entries in row-major order (row = RGB channel, column = stain).
    pub fn row_major(&self) -> [f64; 6] {
        let c = &self.columns;
        [c[0][0], c[1][0], c[0][1], c[1][1], c[0][2], c[1][2]]
    }

    pub fn from_row_major(m: [f64; 6]) -> Result<Self> {
        Self::from_estimates([m[0], m[2], m[4]], [m[1], m[3], m[5]])
    }

    /// OD of one pixel given its two stain concentrations.
    #[inline]
    pub fn reconstruct(&self, c: [f64; 2]) -> [f64; 3] {
        let [m0, m1] = &self.columns;
        [
            m0[0] * c[0] + m1[0] * c[1],
            m0[1] * c[0] + m1[1] * c[1],
            m0[2] * c[0] + m1[2] * c[1],
        ]
    }
}

fn fix_column(mut col: [f64; 3]) -> Result<[f64; 3]> {
    if !col.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter(
            "stain column contains a non-finite entry".into(),
        ));
    }
    if col.iter().sum::<f64>() < 0.0 {
        for v in &mut col {
            *v = -*v;
        }
    }
    for v in &mut col {
        // also rewrites the -0.0 a sign flip can leave behind
        if *v <= 0.0 {
            *v = 0.0;
        }
    }
    let norm = (col[0] * col[0] + col[1] * col[1] + col[2] * col[2]).sqrt();
    if norm < 1e-12 {
        return Err(Error::DegenerateStainPlane);
    }
    Ok([col[0] / norm, col[1] / norm, col[2] / norm])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StainMethod {
    Macenko,
    Vahadane,
}

impl std::fmt::Display for StainMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StainMethod::Macenko => f.write_str("macenko"),
            StainMethod::Vahadane => f.write_str("vahadane"),
        }
    }
}

/// Fitted stain-transfer parameters: the stain matrix plus the robust
/// per-stain concentration maxima used to rescale between appearances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StainProfile {
    pub method: StainMethod,
    pub stain_matrix: StainMatrix,
    pub max_concentration: [f64; 2],
}

/// Every tunable of the stain methods, materialized so profile documents
/// carry the exact values a fit ran with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StainParams {
    /// Robust angle percentile for Macenko extremes (uses alpha and
    /// 100 - alpha).
    pub alpha_percentile: f64,
    /// OD magnitude below which a pixel counts as background.
    pub beta_od_threshold: f64,
    /// Minimum number of tissue pixels required before estimation.
    pub min_tissue_pixels: usize,
    /// Percentile defining the pseudo-maximum of each concentration column.
    pub pseudo_max_percentile: f64,
    pub solver: ConcentrationSolver,
    pub background_intensity: u8,
    /// Vahadane l1 weight on the concentration matrix.
    pub sparsity_lambda: f64,
    /// Vahadane alternating-minimization iteration cap.
    pub max_iters: usize,
    /// Vahadane relative objective-change stopping tolerance.
    pub tol: f64,
}

impl Default for StainParams {
    fn default() -> Self {
        Self {
            alpha_percentile: 1.0,
            beta_od_threshold: 0.15,
            min_tissue_pixels: 100,
            pseudo_max_percentile: 99.0,
            solver: ConcentrationSolver::Nnls,
            background_intensity: 255,
            sparsity_lambda: 0.1,
            max_iters: 200,
            tol: 1e-6,
        }
    }
}

/// Versioned on-disk form of a fitted profile. f64 fields survive the JSON
/// round trip bit-exactly (serde_json emits shortest-roundtrip literals).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub version: u32,
    #[serde(flatten)]
    pub payload: ProfilePayload,
    pub fit: FitMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum ProfilePayload {
    Colorstat {
        mean: [f64; 3],
        std: [f64; 3],
    },
    Macenko {
        matrix_row_major: [f64; 6],
        max_concentration: [f64; 2],
    },
    Vahadane {
        matrix_row_major: [f64; 6],
        max_concentration: [f64; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    pub corpus_size: usize,
    pub skipped: usize,
    pub params: StainParams,
}

pub const PROFILE_DOCUMENT_VERSION: u32 = 1;

impl ProfileDocument {
    pub fn from_colorstat(profile: &ColorStatProfile, fit: FitMetadata) -> Self {
        Self {
            version: PROFILE_DOCUMENT_VERSION,
            payload: ProfilePayload::Colorstat {
                mean: profile.mean,
                std: profile.std,
            },
            fit,
        }
    }

    pub fn from_stain(profile: &StainProfile, fit: FitMetadata) -> Self {
        let matrix_row_major = profile.stain_matrix.row_major();
        let max_concentration = profile.max_concentration;
        Self {
            version: PROFILE_DOCUMENT_VERSION,
            payload: match profile.method {
                StainMethod::Macenko => ProfilePayload::Macenko {
                    matrix_row_major,
                    max_concentration,
                },
                StainMethod::Vahadane => ProfilePayload::Vahadane {
                    matrix_row_major,
                    max_concentration,
                },
            },
            fit,
        }
    }

    pub fn as_colorstat(&self) -> Option<ColorStatProfile> {
        match &self.payload {
            ProfilePayload::Colorstat { mean, std } => Some(ColorStatProfile {
                mean: *mean,
                std: *std,
            }),
            _ => None,
        }
    }

    pub fn as_stain(&self) -> Option<StainProfile> {
        let (method, matrix, max_concentration) = match &self.payload {
            ProfilePayload::Macenko {
                matrix_row_major,
                max_concentration,
            } => (StainMethod::Macenko, matrix_row_major, max_concentration),
            ProfilePayload::Vahadane {
                matrix_row_major,
                max_concentration,
            } => (StainMethod::Vahadane, matrix_row_major, max_concentration),
            ProfilePayload::Colorstat { .. } => return None,
        };
        Some(StainProfile {
            method,
            stain_matrix: StainMatrix::from_row_major(*matrix).ok()?,
            max_concentration: *max_concentration,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_ordering_is_deterministic() {
        let a = [0.2, 0.7, 0.3];
        let b = [0.9, 0.1, 0.2];
        let m1 = StainMatrix::from_estimates(a, b).unwrap();
        let m2 = StainMatrix::from_estimates(b, a).unwrap();
        assert_eq!(m1, m2);
        assert!(m1.column(0)[0] > m1.column(1)[0]);
    }

    #[test]
    fn columns_are_unit_norm_and_non_negative() {
        let m = StainMatrix::from_estimates([-0.1, 0.8, 0.6], [0.5, -0.9, -0.1]).unwrap();
        for j in 0..2 {
            let c = m.column(j);
            let norm = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
            assert!(c.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn negative_sum_column_is_flipped() {
        let m = StainMatrix::from_estimates([-0.6, -0.7, -0.3], [0.9, 0.1, 0.1]).unwrap();
        // the flipped column keeps its direction rather than clamping to zero
        let c = m.column(0).iter().chain(m.column(1).iter()).all(|&v| v >= 0.0);
        assert!(c);
    }

    #[test]
    fn profile_document_roundtrip_is_bit_exact() {
        let profile = StainProfile {
            method: StainMethod::Macenko,
            stain_matrix: StainMatrix::from_estimates(
                [0.5700924862254485, 0.7132441659871238, 0.40773247894397744],
                [0.1, 0.9, 0.3],
            )
            .unwrap(),
            max_concentration: [1.2345678901234568, 0.000012345],
        };
        let doc = ProfileDocument::from_stain(
            &profile,
            FitMetadata {
                corpus_size: 10,
                skipped: 1,
                params: StainParams::default(),
            },
        );
        let json = doc.to_json().unwrap();
        let back = ProfileDocument::from_json(&json).unwrap();
        assert_eq!(doc, back);
        let p2 = back.as_stain().unwrap();
        assert_eq!(p2.max_concentration, profile.max_concentration);
    }
}
