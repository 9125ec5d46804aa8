//! `stainbench report` — merge evaluation reports into rendered tables.

use crate::error::{CliError, Result};
use crate::report::{EvaluationReport, ReportTable};
use clap::Args;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report files from `stainbench evaluate`.
    #[arg(long, required = true, num_args = 1..)]
    pub reports: Vec<PathBuf>,

    /// Emit one row per translation direction instead of the averaged row.
    #[arg(long)]
    pub per_direction: bool,

    /// csv, markdown, text, or all.
    #[arg(long, default_value = "all")]
    pub format: String,

    /// Output prefix; writes PREFIX.csv / PREFIX.md / PREFIX.txt.
    /// The text table always also goes to stdout.
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
}

pub fn run(args: ReportArgs) -> Result<()> {
    let reports: Vec<EvaluationReport> = args
        .reports
        .iter()
        .map(EvaluationReport::load)
        .collect::<Result<_>>()?;
    let table = ReportTable::from_reports(&reports, args.per_direction);

    let (want_csv, want_md, want_text) = match args.format.as_str() {
        "csv" => (true, false, false),
        "markdown" | "md" => (false, true, false),
        "text" => (false, false, true),
        "all" => (true, true, true),
        other => return Err(CliError::Usage(format!("unknown format '{other}'"))),
    };

    if let Some(prefix) = &args.out_prefix {
        if let Some(parent) = prefix.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        if want_csv {
            std::fs::write(prefix.with_extension("csv"), table.render_csv())?;
        }
        if want_md {
            std::fs::write(prefix.with_extension("md"), table.render_markdown())?;
        }
        if want_text {
            std::fs::write(prefix.with_extension("txt"), table.render_text())?;
        }
    }
    print!("{}", table.render_text());
    Ok(())
}
