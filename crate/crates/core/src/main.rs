use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dualbound::cli::{format_point, load_config, run};

#[derive(Parser)]
#[command(name = "dualbound", version, about = "Primal and dual bounds for stochastic optimal control")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration and write results.csv and report.txt.
    Run { config: PathBuf },
    /// Parse and validate a configuration without running it.
    Check { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let (Command::Run { config } | Command::Check { config }) = &args.command;
    let cfg = match load_config(config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{}: {e}", config.display());
            return ExitCode::from(2);
        }
    };
    match args.command {
        Command::Check { .. } => {
            let points: Vec<_> = cfg.x0.iter().map(format_point).collect();
            println!(
                "ok: problem={} d={} model={} methods={} x0=[{}] M={} output_dir={}",
                cfg.problem,
                cfg.d,
                cfg.model.label(),
                cfg.methods.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(","),
                points.join("; "),
                cfg.dual.samples,
                cfg.output_dir.display()
            );
            ExitCode::SUCCESS
        }
        Command::Run { .. } => match run(&cfg) {
            Ok(out) => {
                println!("{} rows written to {}", out.rows.len(), out.csv.display());
                print!("{}", std::fs::read_to_string(&out.report).unwrap_or_default());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("run failed: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
