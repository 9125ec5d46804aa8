//! `stainbench evaluate` — SSIM on source/generated pairs, WD and FID on
//! generated-vs-target sets, per direction plus an averaged row.

use super::load_tiles;
use crate::config::{ExtractorSpec, RunConfig};
use crate::error::{CliError, Result};
use crate::report::{Direction, EvaluationReport, ReportRow};
use clap::Args;
use rayon::prelude::*;
use stainbench_core::datapipe::Manifest;
use stainbench_core::imagecore::{rgb_to_gray, ImageTile};
use stainbench_core::metrics::{
    extract_features, fit_feature_gaussian, frechet_distance, load_features, mean_and_stderr,
    save_features, ssim, wd_color, ExternalMlpExtractor, FeatureExtractor,
    RandomProjectionExtractor,
};
use std::collections::HashMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// JSON config file; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Method name recorded in report rows.
    #[arg(long)]
    pub method_name: Option<String>,

    /// Split tag recorded in report rows (records are also filtered to it).
    #[arg(long)]
    pub split: Option<String>,

    /// Manifest of real H&E tiles.
    #[arg(long)]
    pub he: Option<PathBuf>,

    /// Manifest of real MT tiles.
    #[arg(long)]
    pub mt: Option<PathBuf>,

    /// Manifest of generated H&E→MT tiles (ids must match the H&E manifest).
    #[arg(long)]
    pub gen_he_to_mt: Option<PathBuf>,

    /// Manifest of generated MT→H&E tiles (ids must match the MT manifest).
    #[arg(long)]
    pub gen_mt_to_he: Option<PathBuf>,

    /// Path to an external extractor model file; defaults to the built-in
    /// extractor.
    #[arg(long)]
    pub extractor_model: Option<PathBuf>,

    /// Directory for cached feature matrices.
    #[arg(long)]
    pub feature_cache: Option<PathBuf>,

    #[arg(long)]
    pub wd_cap: Option<usize>,

    #[arg(long)]
    pub ssim_window: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Report file to write.
    #[arg(long)]
    pub out: PathBuf,
}

fn materialize_config(args: &EvaluateArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let path_str = |p: &PathBuf| p.to_string_lossy().into_owned();
    if let Some(v) = &args.method_name {
        cfg.method_name = v.clone();
    }
    if let Some(v) = &args.split {
        cfg.split = v.clone();
    }
    if let Some(v) = &args.he {
        cfg.he_manifest = Some(path_str(v));
    }
    if let Some(v) = &args.mt {
        cfg.mt_manifest = Some(path_str(v));
    }
    if let Some(v) = &args.gen_he_to_mt {
        cfg.gen_he_to_mt = Some(path_str(v));
    }
    if let Some(v) = &args.gen_mt_to_he {
        cfg.gen_mt_to_he = Some(path_str(v));
    }
    if let Some(v) = &args.extractor_model {
        cfg.extractor = ExtractorSpec::External {
            model_path: path_str(v),
        };
    }
    if let Some(v) = &args.feature_cache {
        cfg.feature_cache = Some(path_str(v));
    }
    if let Some(v) = args.wd_cap {
        cfg.wd_sample_cap = v;
    }
    if let Some(v) = args.ssim_window {
        cfg.ssim_window = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if cfg.method_name.is_empty() {
        return Err(CliError::Usage("--method-name is required".into()));
    }
    Ok(cfg)
}

fn build_extractor(spec: &ExtractorSpec) -> Result<Box<dyn FeatureExtractor>> {
    Ok(match spec {
        ExtractorSpec::Builtin => Box::new(RandomProjectionExtractor::new()),
        ExtractorSpec::External { model_path } => {
            Box::new(ExternalMlpExtractor::load(model_path)?)
        }
    })
}

struct LoadedSet {
    manifest: Manifest,
    tiles: Vec<ImageTile>,
}

fn load_set(path: &Path, split: &str) -> Result<LoadedSet> {
    let manifest = Manifest::load(path)?;
    let split = stainbench_core::datapipe::Split::parse(split)?;
    let filtered = manifest.filter(None, Some(split));
    let effective = if filtered.is_empty() {
        log::warn!(
            "{}: no records tagged split={}, evaluating all {} records",
            path.display(),
            split.as_str(),
            manifest.len()
        );
        manifest
    } else {
        filtered
    };
    if effective.is_empty() {
        return Err(CliError::Data(format!("{}: no records", path.display())));
    }
    let tiles = load_tiles(path, &effective)?;
    Ok(LoadedSet {
        manifest: effective,
        tiles,
    })
}

/// SSIM pairs are matched by tile id, not file order; any id imbalance is an
/// error naming the first ten offenders.
fn ssim_over_pairs(
    sources: &LoadedSet,
    generated: &LoadedSet,
    window: usize,
    data_range: f64,
) -> Result<(f64, f64, usize)> {
    let gen_by_id: HashMap<&str, &ImageTile> = generated
        .manifest
        .records
        .iter()
        .zip(&generated.tiles)
        .map(|(r, t)| (r.id.as_str(), t))
        .collect();
    let mut offenders: Vec<String> = sources
        .manifest
        .records
        .iter()
        .filter(|r| !gen_by_id.contains_key(r.id.as_str()))
        .map(|r| format!("{} (missing in generated)", r.id))
        .collect();
    let src_ids: std::collections::HashSet<&str> = sources
        .manifest
        .records
        .iter()
        .map(|r| r.id.as_str())
        .collect();
    offenders.extend(
        generated
            .manifest
            .records
            .iter()
            .filter(|r| !src_ids.contains(r.id.as_str()))
            .map(|r| format!("{} (missing in sources)", r.id)),
    );
    if !offenders.is_empty() {
        offenders.truncate(10);
        return Err(CliError::IdMismatch(offenders));
    }

    let values: Vec<f64> = sources
        .manifest
        .records
        .par_iter()
        .zip(sources.tiles.par_iter())
        .map(|(record, src_tile)| {
            let gen_tile = gen_by_id[record.id.as_str()];
            let result = ssim(
                &rgb_to_gray(src_tile),
                &rgb_to_gray(gen_tile),
                window,
                data_range,
            )?;
            Ok(result.mean_ssim)
        })
        .collect::<Result<_>>()?;
    let (mean, stderr) = mean_and_stderr(&values);
    Ok((mean, stderr, values.len()))
}

/// FID with the sidecar feature cache: keyed by (manifest hash, extractor
/// name), recomputed on any mismatch.
fn gaussian_with_cache(
    set: &LoadedSet,
    extractor: &dyn FeatureExtractor,
    cache_dir: Option<&Path>,
) -> Result<stainbench_core::metrics::FeatureGaussian> {
    let features = if let Some(dir) = cache_dir {
        std::fs::create_dir_all(dir)?;
        let hash = set.manifest.hash();
        let file = dir.join(format!("{hash}-{}.feat", extractor.name()));
        match load_features(&file, &hash, extractor.name()) {
            Ok(f) if f.nrows() == set.tiles.len() => f,
            _ => {
                let f = extract_features(&set.tiles, extractor)?;
                save_features(&file, &hash, extractor.name(), &f)?;
                f
            }
        }
    } else {
        extract_features(&set.tiles, extractor)?
    };
    Ok(fit_feature_gaussian(&features)?)
}

pub fn run(args: EvaluateArgs) -> Result<()> {
    let config = materialize_config(&args)?;
    let extractor = build_extractor(&config.extractor)?;
    let cache_dir = config.feature_cache.as_deref().map(Path::new);
    let config_hash = config.hash();

    let he = config
        .he_manifest
        .as_deref()
        .map(|p| load_set(Path::new(p), &config.split))
        .transpose()?;
    let mt = config
        .mt_manifest
        .as_deref()
        .map(|p| load_set(Path::new(p), &config.split))
        .transpose()?;

    let mut directions: Vec<(Direction, &LoadedSet, LoadedSet, &LoadedSet)> = Vec::new();
    if let Some(gen_path) = config.gen_he_to_mt.as_deref() {
        let (Some(he), Some(mt)) = (he.as_ref(), mt.as_ref()) else {
            return Err(CliError::Usage(
                "--gen-he-to-mt needs both --he (sources) and --mt (targets)".into(),
            ));
        };
        let generated = load_set(Path::new(gen_path), &config.split)?;
        directions.push((Direction::HeToMt, he, generated, mt));
    }
    if let Some(gen_path) = config.gen_mt_to_he.as_deref() {
        let (Some(he), Some(mt)) = (he.as_ref(), mt.as_ref()) else {
            return Err(CliError::Usage(
                "--gen-mt-to-he needs both --mt (sources) and --he (targets)".into(),
            ));
        };
        let generated = load_set(Path::new(gen_path), &config.split)?;
        directions.push((Direction::MtToHe, mt, generated, he));
    }
    if directions.is_empty() {
        return Err(CliError::Usage(
            "nothing to evaluate: pass --gen-he-to-mt and/or --gen-mt-to-he".into(),
        ));
    }

    let mut rows = Vec::new();
    for (direction, sources, generated, targets) in &directions {
        let (ssim_mean, ssim_stderr, n_pairs) = ssim_over_pairs(
            sources,
            generated,
            config.ssim_window,
            config.ssim_data_range,
        )?;
        let wd = wd_color(&generated.tiles, &targets.tiles, config.wd_sample_cap)?;
        let g_gen = gaussian_with_cache(generated, extractor.as_ref(), cache_dir)?;
        let g_tgt = gaussian_with_cache(targets, extractor.as_ref(), cache_dir)?;
        let fid = frechet_distance(&g_gen, &g_tgt)?;
        rows.push(ReportRow {
            method_name: config.method_name.clone(),
            direction: *direction,
            split: config.split.clone(),
            fid,
            wd,
            ssim_mean,
            ssim_stderr,
            n_pairs,
            extractor_name: extractor.name().to_string(),
            config_hash: config_hash.clone(),
        });
    }
    if rows.len() == 2 {
        let avg = ReportRow {
            method_name: config.method_name.clone(),
            direction: Direction::Averaged,
            split: config.split.clone(),
            fid: (rows[0].fid + rows[1].fid) / 2.0,
            wd: (rows[0].wd + rows[1].wd) / 2.0,
            ssim_mean: (rows[0].ssim_mean + rows[1].ssim_mean) / 2.0,
            ssim_stderr: (rows[0].ssim_stderr + rows[1].ssim_stderr) / 2.0,
            n_pairs: rows[0].n_pairs + rows[1].n_pairs,
            extractor_name: extractor.name().to_string(),
            config_hash: config_hash.clone(),
        };
        rows.push(avg);
    }

    let report = EvaluationReport::new(rows, config)?;
    report.save(&args.out)?;
    for row in &report.rows {
        println!(
            "{} {} {}: fid={:.4} wd={:.6e} ssim={:.4}+/-{:.4} (n={})",
            row.method_name,
            row.split,
            row.direction.as_str(),
            row.fid,
            row.wd,
            row.ssim_mean,
            row.ssim_stderr,
            row.n_pairs
        );
    }
    println!("report -> {}", args.out.display());
    Ok(())
}
