//! Run one of the shipped sweep files and print its aggregate table.
//!
//! cargo run --release --example sweep -- [sweep file] [output root]

use std::path::{Path, PathBuf};

use cavity_detect::io::cmd_sweep;

fn main() -> cavity_detect::Result<()> {
    let mut args = std::env::args().skip(1);
    let spec = args.next().map(PathBuf::from).unwrap_or_else(|| {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/sweeps/ringdown_rates.toml")
    });
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("cavity-detect-sweeps"));
    let report = cmd_sweep(&spec, Some(&out))?;
    println!("{} of {} points, table at {}", report.completed, report.size, report.aggregate.display());
    let table = std::fs::read_to_string(&report.aggregate).map_err(|e| cavity_detect::Error::io(&report.aggregate, e))?;
    print!("{table}");
    for f in &report.failures {
        eprintln!("point {} ({}) failed: {}", f.index, f.values.join(", "), f.error);
    }
    Ok(())
}
