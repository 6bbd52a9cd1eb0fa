use clap::{Parser, Subcommand};
use gapfem::harness::{run_study, write_outputs, ExperimentConfig, Overrides, OUT_ENV};
use gapfem::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gapfem", version, about = "Hybridized Nitsche experiments on multipatch surfaces with gaps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the study described by a TOML config.
    Run {
        config: PathBuf,
        /// fixed_gap, gap_scaling, hybrid_study or single_solve.
        #[arg(long)]
        study: Option<String>,
        #[arg(long)]
        p: Option<usize>,
        /// Cells per axis, comma separated.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        delta: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        s: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<bool, Error> {
    let Command::Run { config, study, p, levels, delta, s, out } = cli.command;
    let mut cfg = ExperimentConfig::load(&config)?;
    let env_out = std::env::var_os(OUT_ENV).map(PathBuf::from);
    cfg.apply(&Overrides { study, p, levels, delta, s, out }, env_out)?;
    let output = run_study(&cfg)?;
    for r in &output.rows {
        let l2 = r.report.as_ref().map_or(f64::NAN, |e| e.l2());
        let h1 = r.report.as_ref().map_or(f64::NAN, |e| e.h1());
        println!("{} n={} delta={:e} l2={l2:e} h1={h1:e} {}", r.series, r.n, r.delta, r.status);
    }
    for r in &output.rates {
        println!("rate {} {} {:.3}", r.series, r.norm, r.fit);
    }
    let paths = write_outputs(&output)?;
    println!("wrote {} files to {}", paths.len(), cfg.out.display());
    Ok(!output.failed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some levels failed, see the status column");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
