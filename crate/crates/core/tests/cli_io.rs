//! Run directories, replay, sweeps and the binary's exit codes.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command as Process;

use cavity_detect::io::output::{MANIFEST_FILE, RINGDOWN_FILE, SCAN_FILE, SUMMARY_FILE};
use cavity_detect::io::{cmd_vrs_scan, execute, read_csv, run_sweep, Command, RunOptions, Summary, SweepSpec};
use cavity_detect::Error;
use common::{config, configs_dir, VRS};

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_cavity-detect"))
}

fn small_vrs() -> cavity_detect::Config {
    let mut c = config(VRS);
    c.run.steps = Some(60);
    c
}

#[test]
fn manifest_replay_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = execute(Command::VrsScan, &small_vrs(), a.path()).unwrap();
    let opts = RunOptions {
        output_dir: Some(b.path().to_path_buf()),
        ..RunOptions::default()
    };
    let again = cmd_vrs_scan(&first.dir.join(MANIFEST_FILE), &opts).unwrap();
    assert_eq!(first.run_id, again.run_id);
    for f in [SCAN_FILE, SUMMARY_FILE] {
        assert_eq!(fs::read(first.dir.join(f)).unwrap(), fs::read(again.dir.join(f)).unwrap(), "{f}");
    }
    assert_eq!(first.manifest.config, again.manifest.config);
}

#[test]
fn scan_csv_has_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = execute(Command::VrsScan, &small_vrs(), dir.path()).unwrap();
    let (header, rows) = read_csv(&out.dir.join(SCAN_FILE)).unwrap();
    assert_eq!(header, ["detuning_hz", "p_out_w", "n_bar", "rho_g", "rho_e", "rho_gp"]);
    assert_eq!(rows.len(), 60);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));

    let mut eit = config(common::EIT);
    eit.run.steps = Some(40);
    let out = execute(Command::EitScan, &eit, dir.path()).unwrap();
    let (header, _) = read_csv(&out.dir.join(SCAN_FILE)).unwrap();
    assert_eq!(header.last().map(String::as_str), Some("rho_gpp"));
    assert!(header.iter().any(|h| h == "rho_gp"));
}

#[test]
fn empty_cavity_vrs_has_one_peak_and_no_loss() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_vrs();
    c.ensemble.n_c = Some(0.0);
    let out = execute(Command::VrsScan, &c, dir.path()).unwrap();
    let Summary::VrsScan(s) = out.summary else { panic!("wrong summary kind") };
    assert_eq!(s.peaks.len(), 1);
    assert_eq!(s.loss_fraction, 0.0);
    assert!(s.splitting_hz.is_none());
}

#[test]
fn empty_cavity_ringdown_decays_at_twice_kappa() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(common::RINGDOWN);
    c.ensemble.n_c = Some(0.0);
    c.run.cycles = Some(1);
    let out = execute(Command::Ringdown, &c, dir.path()).unwrap();
    let Summary::Ringdown(s) = &out.summary else { panic!("wrong summary kind") };
    let two_kappa = 2.0 * 0.5e6 * std::f64::consts::TAU;
    assert!((s.fitted_rate_per_s.unwrap() / two_kappa - 1.0).abs() < 1e-3);
    let (header, rows) = read_csv(&out.dir.join(RINGDOWN_FILE)).unwrap();
    assert_eq!(header, ["t_s", "p_out_w"]);
    assert_eq!(rows.len(), 200);
}

#[test]
fn missing_key_is_a_config_error_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    fs::write(&path, VRS.replace("kappa_t_hz", "# kappa_t_hz")).unwrap();
    let out = bin().arg("vrs-scan").arg(&path).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("config error") && err.contains("kappa_t_hz"), "{err}");
}

#[test]
fn invalid_model_exits_one_and_lists_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["validate"])
        .arg(configs_dir().join("vrs_baseline.toml"))
        .args(["--set", "cavity.roc_m=1e-3", "--set", "levels.gamma1_hz=-1"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("gamma1_hz"), "{err}");
}

#[test]
fn validate_prints_derived_quantities() {
    let out = bin().arg("validate").arg(configs_dir().join("eit_baseline.toml")).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let w = v["waist_m"].as_f64().unwrap();
    assert!((w - 32.5e-6).abs() < 0.1e-6, "{w}");
}

#[test]
fn binary_runs_a_scan_into_the_requested_root() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("eit-scan")
        .arg(configs_dir().join("eit_baseline.toml"))
        .args(["--set", "run.steps=30", "--set", "ensemble.n_c=1e4", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let run_dir = Path::new(stdout.lines().next().unwrap());
    assert!(run_dir.starts_with(dir.path()));
    for f in [SCAN_FILE, SUMMARY_FILE, MANIFEST_FILE] {
        assert!(run_dir.join(f).is_file(), "{f}");
    }
}

fn sweep_spec(extra: &str) -> SweepSpec {
    let base = configs_dir().join("vrs_baseline.toml");
    toml::from_str(&format!(
        r#"
        kind = "vrs-scan"
        base_config = "{}"
        parallelism = 2
        [set]
        "run.steps" = 40
        {extra}
        [[axis]]
        path = "cavity.kappa_t_hz"
        values = [2.5e6, 20e6]
        "#,
        base.display()
    ))
    .unwrap()
}

#[test]
fn sweep_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = sweep_spec("");
    spec.axes.push(toml::from_str("path = \"ensemble.n_c\"\nvalues = [1e4, 5e4, 1e6]").unwrap());
    let report = run_sweep(&spec, Some(dir.path())).unwrap();
    assert_eq!(report.size, 6);
    assert_eq!(report.completed, 6);
    assert!(report.failures.is_empty());
    let text = fs::read_to_string(&report.aggregate).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("index,cavity.kappa_t_hz,ensemble.n_c,run_id,"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    // row-major: the last axis varies fastest
    assert!(rows[1].contains("5.0000000000000000e4"));
    assert!(rows[3].starts_with("3,2.0000000000000000e7,1.0000000000000000e4"));
}

#[test]
fn failed_sweep_points_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = sweep_spec("");
    spec.axes[0].values.push(toml::Value::Float(-1.0));
    let report = run_sweep(&spec, Some(dir.path())).unwrap();
    assert_eq!((report.size, report.completed), (3, 2));
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0].index, 2);
    assert!(report.failures[0].error.contains("kappa_t"), "{}", report.failures[0].error);

    // the binary reports the same sweep with exit status 2
    let file = dir.path().join("sweep.toml");
    fs::write(&file, toml::to_string(&spec).unwrap()).unwrap();
    let out = bin().arg("sweep").arg(&file).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_sweep_kind_is_rejected() {
    let mut spec = sweep_spec("");
    spec.kind = "plot".into();
    assert!(matches!(run_sweep(&spec, None), Err(Error::Config(_))));
}

#[test]
fn shipped_sweep_files_parse() {
    for entry in fs::read_dir(configs_dir().join("sweeps")).unwrap() {
        let path = entry.unwrap().path();
        let spec = cavity_detect::io::sweep::load_sweep(&path).unwrap();
        spec.check().unwrap();
        assert!(spec.base_config.is_file(), "{}", spec.base_config.display());
        assert!(spec.size() >= 4);
    }
}
