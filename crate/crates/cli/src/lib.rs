//! Library behind the `stainbench` binary: argument surface, config,
//! report types, and the command implementations.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "stainbench",
    about = "Fit, apply, and score stain-transfer methods on histology tiles",
    version
)]
pub struct Cli {
    /// Worker threads for parallel tile processing (also settable via
    /// STAINBENCH_WORKERS; defaults to the number of cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cut a large raster into tiles and write a manifest.
    Tile(commands::tile::TileArgs),
    /// Fit a transfer profile over a tile corpus.
    Fit(commands::fit::FitArgs),
    /// Apply a fitted profile to every tile in a manifest.
    Transfer(commands::transfer::TransferArgs),
    /// Score generated tiles against sources and targets (SSIM/WD/FID).
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Render evaluation reports as CSV, Markdown, and aligned text.
    Report(commands::report::ReportArgs),
    /// Build or score blind-mix sheets.
    #[command(subcommand)]
    Blindmix(commands::blindmix::BlindmixCommand),
}

/// Runs the parsed CLI, returning the process exit code.
pub fn run(cli: Cli) -> i32 {
    if let Some(n) = cli
        .workers
        .or_else(|| std::env::var("STAINBENCH_WORKERS").ok()?.parse().ok())
    {
        // a second initialization (e.g. in tests) is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match cli.command {
        Command::Tile(args) => commands::tile::run(args),
        Command::Fit(args) => commands::fit::run(args),
        Command::Transfer(args) => commands::transfer::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Report(args) => commands::report::run(args),
        Command::Blindmix(cmd) => commands::blindmix::run(cmd),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            e.emit();
            e.exit_code()
        }
    }
}
