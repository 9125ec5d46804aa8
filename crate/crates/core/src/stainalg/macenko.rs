//! Macenko stain-matrix estimation: SVD plane of the tissue OD cloud plus
//! robust angle extremes.

use super::{StainMatrix, StainParams};
use crate::error::{Error, Result};
use crate::imagecore::OdMatrix;
use crate::util::percentile_unsorted;
use nalgebra::{Matrix3, Vector3};

/// Relative eigenvalue floor below which the OD cloud is treated as
/// rank-deficient (a single stain spans no plane).
const PLANE_RANK_TOL: f64 = 1e-8;

/// Pixels count as tissue when every OD channel exceeds beta.
pub(crate) fn tissue_rows(od: &OdMatrix, beta: f64) -> Vec<[f64; 3]> {
    od.rows()
        .iter()
        .filter(|r| r[0] > beta && r[1] > beta && r[2] > beta)
        .copied()
        .collect()
}

/// Two leading eigenvectors of the (uncentered) OD scatter matrix, ordered
/// by eigenvalue, with the first flipped toward the data.
pub(crate) fn stain_plane(rows: &[[f64; 3]]) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let mut scatter = Matrix3::zeros();
    for r in rows {
        let v = Vector3::new(r[0], r[1], r[2]);
        scatter += v * v.transpose();
    }
    let eig = nalgebra::SymmetricEigen::new(scatter);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lead = eig.eigenvalues[idx[0]];
    let second = eig.eigenvalues[idx[1]];
    if lead <= 0.0 || second <= lead * PLANE_RANK_TOL {
        return Err(Error::DegenerateStainPlane);
    }
    let mut v1: Vector3<f64> = eig.eigenvectors.column(idx[0]).into();
    let v2: Vector3<f64> = eig.eigenvectors.column(idx[1]).into();
    // orient the leading direction into the non-negative OD cloud so the
    // projection angles stay clear of the atan2 branch cut
    if rows.iter().map(|r| v1.x * r[0] + v1.y * r[1] + v1.z * r[2]).sum::<f64>() < 0.0 {
        v1 = -v1;
    }
    Ok((v1, v2))
}

/// Estimates the 3×2 stain matrix from an OD cloud: filter background, find
/// the dominant plane, take the directions at the `alpha` and `100 - alpha`
/// percentiles of the projection angle, and map them back to OD space.
pub fn estimate_stain_matrix_macenko(od: &OdMatrix, params: &StainParams) -> Result<StainMatrix> {
    let rows = tissue_rows(od, params.beta_od_threshold);
    if rows.len() < params.min_tissue_pixels {
        return Err(Error::InsufficientTissue {
            found: rows.len(),
            required: params.min_tissue_pixels,
        });
    }
    let (v1, v2) = stain_plane(&rows)?;

    let mut angles: Vec<f64> = rows
        .iter()
        .map(|r| {
            let p = v1.x * r[0] + v1.y * r[1] + v1.z * r[2];
            let q = v2.x * r[0] + v2.y * r[1] + v2.z * r[2];
            q.atan2(p)
        })
        .collect();
    let alpha = params.alpha_percentile;
    let lo = percentile_unsorted(&mut angles, alpha);
    let hi = percentile_unsorted(&mut angles, 100.0 - alpha);
    if (hi - lo).abs() < 1e-9 {
        // the extremes coincide: no usable second stain direction
        return Err(Error::DegenerateStainPlane);
    }

    let dir = |phi: f64| -> [f64; 3] {
        let (s, c) = phi.sin_cos();
        [
            c * v1.x + s * v2.x,
            c * v1.y + s * v2.y,
            c * v1.z + s * v2.z,
        ]
    };
    StainMatrix::from_estimates(dir(lo), dir(hi))
}
