//! Corpus-averaged profile fitting and transfer application.

use super::{
    compute_concentrations, estimate_stain_matrix_macenko, fit_vahadane_dictionary,
    pseudo_max_concentration, StainMatrix, StainMethod, StainParams, StainProfile,
};
use crate::error::{Error, Result};
use crate::imagecore::{od_to_rgb, rgb_to_od, ImageTile, OdMatrix};
use crate::util::KahanSum;
use rayon::prelude::*;

/// What happened to a single tile during transfer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferOutcome {
    Transferred,
    /// Too few tissue pixels to estimate a stain matrix; input returned
    /// unchanged.
    PassthroughInsufficientTissue,
    /// Rank-deficient OD cloud; input returned unchanged.
    PassthroughDegenerate,
}

impl TransferOutcome {
    /// Flag value recorded in output manifests, `None` for a clean transfer.
    pub fn flag(&self) -> Option<&'static str> {
        match self {
            TransferOutcome::Transferred => None,
            TransferOutcome::PassthroughInsufficientTissue => Some("insufficient_tissue"),
            TransferOutcome::PassthroughDegenerate => Some("degenerate_stain_plane"),
        }
    }
}

/// Result of a corpus fit: the averaged profile plus which tiles could not
/// contribute and why.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub profile: StainProfile,
    pub used: usize,
    pub skipped: Vec<(String, String)>,
}

fn estimate_matrix(od: &OdMatrix, method: StainMethod, params: &StainParams) -> Result<StainMatrix> {
    match method {
        StainMethod::Macenko => estimate_stain_matrix_macenko(od, params),
        StainMethod::Vahadane => Ok(fit_vahadane_dictionary(od, params)?.matrix),
    }
}

/// Per-tile estimate: deterministic-ordered stain matrix plus pseudo-maxima.
type TileEstimate = (StainMatrix, [f64; 2]);

fn estimate_tile(
    tile: &ImageTile,
    method: StainMethod,
    params: &StainParams,
) -> Result<TileEstimate> {
    let od = rgb_to_od(tile, params.background_intensity);
    let matrix = estimate_matrix(&od, method, params)?;
    // pseudo-maxima come from solver concentrations over the whole image so
    // that fitted profiles and per-tile transfer scaling are comparable
    let c = compute_concentrations(&od, &matrix, params.solver);
    let pmax = pseudo_max_concentration(&c, params.pseudo_max_percentile);
    Ok((matrix, pmax))
}

/// Fits a stain profile over a corpus: per-image stain matrices (already
/// sign-fixed and deterministically ordered) are averaged element-wise and
/// re-normalized, and per-image pseudo-maxima are averaged. Tiles that fail
/// estimation are skipped and reported.
pub fn fit_stain_profile(
    corpus: &[ImageTile],
    method: StainMethod,
    params: &StainParams,
) -> Result<FitOutcome> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let per_tile: Vec<(String, Result<TileEstimate>)> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, tile)| {
            let id = if tile.id.is_empty() {
                format!("tile[{i}]")
            } else {
                tile.id.clone()
            };
            (id, estimate_tile(tile, method, params))
        })
        .collect();

    let mut col_acc = [[KahanSum::new(); 3]; 2];
    let mut max_acc = [KahanSum::new(); 2];
    let mut used = 0usize;
    let mut skipped = Vec::new();
    for (id, result) in per_tile {
        match result {
            Ok((matrix, pmax)) => {
                for (j, &pm) in pmax.iter().enumerate() {
                    let col = matrix.column(j);
                    for ch in 0..3 {
                        col_acc[j][ch].add(col[ch]);
                    }
                    max_acc[j].add(pm);
                }
                used += 1;
            }
            Err(e) => skipped.push((id, e.to_string())),
        }
    }
    if used == 0 {
        return Err(Error::NoUsableTiles { reasons: skipped });
    }
    let n = used as f64;
    let mean_col = |acc: &[KahanSum; 3]| [acc[0].value() / n, acc[1].value() / n, acc[2].value() / n];
    let stain_matrix = StainMatrix::from_estimates(mean_col(&col_acc[0]), mean_col(&col_acc[1]))?;
    let max_concentration = [max_acc[0].value() / n, max_acc[1].value() / n];
    Ok(FitOutcome {
        profile: StainProfile {
            method,
            stain_matrix,
            max_concentration,
        },
        used,
        skipped,
    })
}

/// Re-colors a tile to the target appearance: estimate the source stain
/// matrix and concentrations from the tile itself, rescale each
/// concentration column to the target pseudo-maximum, and reconstruct OD
/// through the target stain matrix.
///
/// Tiles whose own estimation fails with insufficient tissue or a degenerate
/// stain plane pass through unchanged with a flag, so one bad tile cannot
/// abort a corpus run; other errors propagate.
pub fn apply_stain_transfer(
    tile: &ImageTile,
    target: &StainProfile,
    params: &StainParams,
) -> Result<(ImageTile, TransferOutcome)> {
    let od = rgb_to_od(tile, params.background_intensity);
    let src_matrix = match estimate_matrix(&od, target.method, params) {
        Ok(m) => m,
        Err(Error::InsufficientTissue { .. }) => {
            return Ok((tile.clone(), TransferOutcome::PassthroughInsufficientTissue))
        }
        Err(Error::DegenerateStainPlane) => {
            return Ok((tile.clone(), TransferOutcome::PassthroughDegenerate))
        }
        Err(e) => return Err(e),
    };
    let c = compute_concentrations(&od, &src_matrix, params.solver);
    let src_max = pseudo_max_concentration(&c, params.pseudo_max_percentile);
    let mut scale = [0.0f64; 2];
    for j in 0..2 {
        scale[j] = if src_max[j] > 1e-8 {
            target.max_concentration[j] / src_max[j]
        } else {
            0.0
        };
    }
    let rows: Vec<[f64; 3]> = c
        .iter()
        .map(|ci| target.stain_matrix.reconstruct([ci[0] * scale[0], ci[1] * scale[1]]))
        .collect();
    let out = od_to_rgb(
        &OdMatrix::from_rows(rows),
        tile.width(),
        tile.height(),
        params.background_intensity,
    )?
    .with_metadata(tile.id.clone(), tile.stain_label.clone());
    Ok((out, TransferOutcome::Transferred))
}
