use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match stainbench_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap would exit 2 on bad usage; the documented contract is 1
            let _ = e.print();
            let failed = !matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            std::process::exit(if failed { 1 } else { 0 });
        }
    };
    std::process::exit(stainbench_cli::run(cli));
}
