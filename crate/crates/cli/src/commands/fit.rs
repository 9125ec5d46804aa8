//! `stainbench fit` — fit a transfer profile over a manifest corpus.

use super::{load_tiles, parse_label};
use crate::error::{CliError, Result};
use clap::Args;
use stainbench_core::datapipe::{Manifest, Split};
use stainbench_core::stainalg::{
    fit_colorstat, fit_stain_profile, ConcentrationSolver, FitMetadata, ProfileDocument,
    StainMethod, StainParams,
};
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct FitArgs {
    /// colorstat, macenko, or vahadane.
    #[arg(long)]
    pub method: String,

    #[arg(long)]
    pub manifest: PathBuf,

    /// Restrict the corpus to records with this stain label.
    #[arg(long)]
    pub label: Option<String>,

    /// Restrict the corpus to records in this split.
    #[arg(long)]
    pub split: Option<String>,

    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    #[arg(long, default_value_t = 0.15)]
    pub beta: f64,

    #[arg(long, default_value_t = 99.0)]
    pub pseudo_percentile: f64,

    #[arg(long, default_value_t = 100)]
    pub min_tissue_pixels: usize,

    /// lstsq or nnls.
    #[arg(long, default_value = "nnls")]
    pub solver: String,

    /// Vahadane sparsity weight.
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,

    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,

    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,

    #[arg(long)]
    pub out: PathBuf,
}

pub(crate) fn parse_solver(s: &str) -> Result<ConcentrationSolver> {
    match s {
        "lstsq" => Ok(ConcentrationSolver::Lstsq),
        "nnls" => Ok(ConcentrationSolver::Nnls),
        other => Err(CliError::Usage(format!("unknown solver '{other}'"))),
    }
}

pub fn run(args: FitArgs) -> Result<()> {
    let manifest = Manifest::load(&args.manifest)?;
    let label = args.label.as_deref().map(parse_label);
    let split = args.split.as_deref().map(Split::parse).transpose()?;
    let filtered = manifest.filter(label.as_ref(), split);
    if filtered.is_empty() {
        return Err(CliError::Data(format!(
            "no records match label={:?} split={:?} in {}",
            args.label,
            args.split,
            args.manifest.display()
        )));
    }
    let tiles = load_tiles(&args.manifest, &filtered)?;
    let params = StainParams {
        alpha_percentile: args.alpha,
        beta_od_threshold: args.beta,
        min_tissue_pixels: args.min_tissue_pixels,
        pseudo_max_percentile: args.pseudo_percentile,
        solver: parse_solver(&args.solver)?,
        sparsity_lambda: args.lambda,
        max_iters: args.max_iters,
        tol: args.tol,
        ..StainParams::default()
    };

    let document = match args.method.as_str() {
        "colorstat" => {
            let profile = fit_colorstat(&tiles)?;
            ProfileDocument::from_colorstat(
                &profile,
                FitMetadata {
                    corpus_size: tiles.len(),
                    skipped: 0,
                    params,
                },
            )
        }
        "macenko" | "vahadane" => {
            let method = if args.method == "macenko" {
                StainMethod::Macenko
            } else {
                StainMethod::Vahadane
            };
            let outcome = fit_stain_profile(&tiles, method, &params)?;
            for (id, why) in &outcome.skipped {
                log::warn!("skipped {id}: {why}");
            }
            ProfileDocument::from_stain(
                &outcome.profile,
                FitMetadata {
                    corpus_size: tiles.len(),
                    skipped: outcome.skipped.len(),
                    params,
                },
            )
        }
        other => return Err(CliError::Usage(format!("unknown method '{other}'"))),
    };

    std::fs::write(&args.out, document.to_json()? + "\n")?;
    println!(
        "fitted {} profile over {} tiles ({} skipped) -> {}",
        args.method,
        document.fit.corpus_size,
        document.fit.skipped,
        args.out.display()
    );
    Ok(())
}
