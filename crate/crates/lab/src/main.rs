use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hyperlab::config::Kind;
use hyperlab::{load_config, run};

/// Runs one hyperlab experiment and writes its reports.
#[derive(Parser, Debug)]
#[command(name = "hyperlab", version)]
struct Cli {
    /// estimate-d, busemann, uniqueness, width, lamination, periodic, recurrent or simple
    kind: String,
    /// Config file of key = value lines.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory of the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Some(kind) = Kind::parse(&cli.kind) else {
        let names: Vec<&str> = Kind::ALL.iter().map(|k| k.name()).collect();
        eprintln!("unknown experiment kind {:?}; expected one of {}", cli.kind, names.join(", "));
        return ExitCode::from(1);
    };
    let outcome = load_config(kind, &cli.config, cli.seed, cli.out.as_deref()).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(s) => {
            println!("{} {}: {}", kind, s.status.as_str(), s.out_dir.display());
            ExitCode::from(s.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{}: {e}", cli.config.display());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
