//! `stainbench blindmix` — build shuffled presentation sheets with sealed
//! keys, and score answer lists against a key.

use crate::error::{CliError, Result};
use clap::{Args, Subcommand};
use stainbench_core::datapipe::{blind_mix, score_answers, Manifest, Truth};
use std::collections::HashMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Subcommand)]
pub enum BlindmixCommand {
    /// Sample and shuffle real + artificial tiles into a presentation sheet.
    Generate(GenerateArgs),
    /// Score an answer CSV against a sealed key.
    Score(ScoreArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Manifest of real tiles.
    #[arg(long)]
    pub real: PathBuf,

    /// Manifest of artificial tiles.
    #[arg(long)]
    pub artificial: PathBuf,

    #[arg(long, default_value_t = 200)]
    pub n_each: usize,

    #[arg(long)]
    pub seed: u64,

    /// Output directory; receives presentation.csv and key.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Sealed key CSV written by `blindmix generate`.
    #[arg(long)]
    pub key: PathBuf,

    /// Answers CSV in the same (display_id, truth) layout.
    #[arg(long)]
    pub answers: PathBuf,
}

pub fn run(cmd: BlindmixCommand) -> Result<()> {
    match cmd {
        BlindmixCommand::Generate(args) => generate(args),
        BlindmixCommand::Score(args) => score(args),
    }
}

/// Rewrites record paths so they stay valid from outside the manifest's own
/// directory. No filesystem canonicalization, so output stays deterministic.
fn resolved_records(
    manifest_path: &Path,
) -> Result<Vec<stainbench_core::datapipe::ManifestRecord>> {
    let manifest = Manifest::load(manifest_path)?;
    let parent = manifest_path.parent().unwrap_or(Path::new("."));
    Ok(manifest
        .records
        .into_iter()
        .map(|mut r| {
            if !Path::new(&r.tile_path).is_absolute() {
                r.tile_path = parent.join(&r.tile_path).to_string_lossy().into_owned();
            }
            r
        })
        .collect())
}

fn generate(args: GenerateArgs) -> Result<()> {
    let real = resolved_records(&args.real)?;
    let artificial = resolved_records(&args.artificial)?;
    let sheet = blind_mix(&real, &artificial, args.n_each, args.seed)?;

    std::fs::create_dir_all(&args.out)?;
    let mut pres = csv::Writer::from_path(args.out.join("presentation.csv"))?;
    pres.write_record(["display_id", "tile_path"])?;
    for (id, path) in &sheet.presentation {
        pres.write_record([id, path])?;
    }
    pres.flush()?;

    let mut key = csv::Writer::from_path(args.out.join("key.csv"))?;
    key.write_record(["display_id", "truth"])?;
    for (id, truth) in &sheet.key {
        key.write_record([id.as_str(), truth.as_str()])?;
    }
    key.flush()?;

    println!(
        "blind mix of {} items (seed {}) -> {}",
        sheet.presentation.len(),
        args.seed,
        args.out.display()
    );
    Ok(())
}

fn read_truth_csv(path: &Path) -> Result<Vec<(String, Truth)>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let id = record
            .get(0)
            .ok_or_else(|| CliError::Data(format!("{}: missing display_id", path.display())))?;
        let truth = record
            .get(1)
            .ok_or_else(|| CliError::Data(format!("{}: missing truth column", path.display())))?;
        rows.push((id.to_string(), Truth::parse(truth)?));
    }
    Ok(rows)
}

fn score(args: ScoreArgs) -> Result<()> {
    let key = read_truth_csv(&args.key)?;
    let answers: HashMap<String, Truth> = read_truth_csv(&args.answers)?.into_iter().collect();
    let accuracy = score_answers(&key, &answers);
    println!("accuracy: {accuracy:.4} over {} items", key.len());
    Ok(())
}
