//! Argument parsing for the `cavity-detect` binary.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::io::{self, parse_override, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "cavity-detect", version, about = "Mean-field cavity-QED detection runs")]
pub struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// TOML config, or a `manifest.json` from an earlier run.
    pub config: PathBuf,
    /// Dotted-path override, e.g. `--set ensemble.n_c=1e6`. Later ones win;
    /// an empty value removes the key.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    pub set: Vec<String>,
    /// Output root; the run goes to `<out>/<run id>/`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// 3-level probe scan across both vacuum Rabi peaks.
    VrsScan(RunArgs),
    /// 4-level probe scan across the EIT line.
    EitScan(RunArgs),
    /// Settle, switch the probe off and record the decay.
    Ringdown {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        cycles: Option<usize>,
    },
    /// Cartesian sweep described by a TOML sweep file.
    Sweep {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and print the derived quantities as JSON.
    Validate {
        config: PathBuf,
        #[arg(long = "set", value_name = "PATH=VALUE")]
        set: Vec<String>,
    },
}

fn options(run: &RunArgs, cycles: Option<usize>) -> Result<RunOptions> {
    Ok(RunOptions {
        overrides: run.set.iter().map(|s| parse_override(s)).collect::<Result<_>>()?,
        output_dir: run.out.clone(),
        cycles,
    })
}

/// Execute a parsed command line. Output paths and reports go to stdout.
pub fn run(cli: &Cli) -> Result<()> {
    let out = match &cli.command {
        Cmd::VrsScan(a) => io::cmd_vrs_scan(&a.config, &options(a, None)?)?,
        Cmd::EitScan(a) => io::cmd_eit_scan(&a.config, &options(a, None)?)?,
        Cmd::Ringdown { run, cycles } => io::cmd_ringdown(&run.config, &options(run, *cycles)?)?,
        Cmd::Sweep { spec, out } => {
            let r = io::cmd_sweep(spec, out.as_deref())?;
            println!("{}", r.aggregate.display());
            println!("{} of {} points completed", r.completed, r.size);
            if !r.failures.is_empty() {
                return Err(Error::Numerical(format!(
                    "{} sweep point(s) failed; see {}",
                    r.failures.len(),
                    r.dir.join(io::sweep::FAILURES_FILE).display()
                )));
            }
            return Ok(());
        }
        Cmd::Validate { config, set } => {
            let o = set.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>>>()?;
            let report = io::cmd_validate(config, &o)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            return Ok(());
        }
    };
    println!("{}", out.dir.display());
    println!("loss fraction {:.6e}", out.summary.loss_fraction());
    Ok(())
}
