use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use centroid_imaging::experiment::{compare_files, error_report, exit_code, run, RunOptions};
use centroid_imaging::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ocm", version, about = "Optical centroid measurement experiments")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Compare two distribution CSV files.
    Compare { a: PathBuf, b: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("{}", error_report(&Error::Config(e.to_string())));
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Run { config } => {
            let opts = RunOptions { out_dir: cli.out_dir.clone(), seed: cli.seed, base_dir: None };
            run(config, &opts).map(|r| {
                for w in &r.warnings {
                    eprintln!("warning: {w}");
                }
                let _ = writeln!(std::io::stdout(), "wrote {} files to {}", r.files.len() + 1, r.out_dir.display());
            })
        }
        Command::Compare { a, b } => compare_files(a, b).and_then(|report| {
            let text = serde_json::to_string_pretty(&report).expect("serializable");
            if let Some(dir) = &cli.out_dir {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("compare.json"), format!("{text}\n"))?;
            }
            let _ = writeln!(std::io::stdout(), "{text}");
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_report(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
