//! Run a scan, then replay it from the manifest it wrote and confirm the
//! tables are identical.

use cavity_detect::io::output::{MANIFEST_FILE, SCAN_FILE};
use cavity_detect::io::{cmd_eit_scan, RunOptions};

fn main() -> cavity_detect::Result<()> {
    let config = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/eit_baseline.toml");
    let root = std::env::temp_dir().join("cavity-detect-replay");
    let opts = RunOptions {
        overrides: vec![("ensemble.n_c".into(), "1e4".into())],
        output_dir: Some(root.join("first")),
        cycles: None,
    };
    let first = cmd_eit_scan(&config, &opts)?;
    println!("run {} -> {}", first.run_id, first.dir.display());

    let replay_opts = RunOptions {
        output_dir: Some(root.join("replay")),
        ..RunOptions::default()
    };
    let again = cmd_eit_scan(&first.dir.join(MANIFEST_FILE), &replay_opts)?;
    let read = |d: &std::path::Path| std::fs::read(d.join(SCAN_FILE)).expect("scan table");
    println!(
        "replay {} -> {}: identical table = {}",
        again.run_id,
        again.dir.display(),
        read(&first.dir) == read(&again.dir)
    );
    Ok(())
}
