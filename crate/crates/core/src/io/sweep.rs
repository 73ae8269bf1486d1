//! Cartesian parameter sweeps over any run command.

use std::path::{Path, PathBuf};

use log::{error, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Value;

use super::commands::{execute, Command, DEFAULT_OUTPUT_DIR};
use super::config::{apply_values, load_config};
use super::output::{ensure_dir, fmt17, write_json};
use crate::error::{Error, Result};

pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const FAILURES_FILE: &str = "failures.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    /// Dotted config path, e.g. `cavity.kappa_t_hz`.
    pub path: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub kind: String,
    /// Relative paths resolve against the sweep file's directory.
    pub base_config: PathBuf,
    #[serde(default = "one")]
    pub parallelism: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Fixed overrides applied to every point before the axes.
    #[serde(default)]
    pub set: toml::Table,
    /// Keys removed from the base config before anything else.
    #[serde(default)]
    pub unset: Vec<String>,
    #[serde(rename = "axis")]
    pub axes: Vec<Axis>,
}

fn one() -> usize {
    1
}

impl SweepSpec {
    pub fn check(&self) -> Result<Command> {
        let kind = Command::parse(&self.kind)?;
        if self.axes.is_empty() {
            return Err(Error::Config("sweep needs at least one [[axis]]".into()));
        }
        for a in &self.axes {
            if a.values.is_empty() {
                return Err(Error::Config(format!("axis `{}` has no values", a.path)));
            }
        }
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be >= 1".into()));
        }
        Ok(kind)
    }

    pub fn size(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    /// Points in row-major order: the last axis varies fastest.
    pub fn points(&self) -> Vec<Vec<Value>> {
        let mut out = vec![Vec::new()];
        for a in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    a.values.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(v.clone());
                        p
                    })
                })
                .collect();
        }
        out
    }
}

pub fn load_sweep(path: &Path) -> Result<SweepSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut spec: SweepSpec = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
    if spec.base_config.is_relative() {
        if let Some(dir) = path.parent() {
            spec.base_config = dir.join(&spec.base_config);
        }
    }
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub index: usize,
    pub values: Vec<String>,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub sweep_id: String,
    pub dir: PathBuf,
    pub size: usize,
    pub completed: usize,
    pub failures: Vec<PointFailure>,
    pub aggregate: PathBuf,
}

fn render(v: &Value) -> String {
    match v {
        Value::Float(f) => fmt17(*f),
        Value::Integer(i) => i.to_string(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Run every point of `spec`, at most `parallelism` at a time.
///
/// Each point gets its own run directory below `<root>/<sweep id>/`. A failed
/// point is recorded and skipped; the aggregate table is written once, in
/// point order, after all points finish.
pub fn cmd_sweep(path: &Path, output_dir: Option<&Path>) -> Result<SweepReport> {
    let spec = load_sweep(path)?;
    run_sweep(&spec, output_dir)
}

pub fn run_sweep(spec: &SweepSpec, output_dir: Option<&Path>) -> Result<SweepReport> {
    let kind = spec.check()?;
    let base = load_config(&spec.base_config)?;
    let mut fixed: Vec<(String, Option<Value>)> =
        spec.unset.iter().map(|k| (k.clone(), None)).collect();
    fixed.extend(spec.set.iter().map(|(k, v)| (k.clone(), Some(v.clone()))));
    let base = apply_values(&base, &fixed)?;

    let mut h = Sha256::new();
    h.update(kind.name().as_bytes());
    h.update(serde_json::to_vec(&base)?);
    h.update(serde_json::to_vec(&spec.axes)?);
    let sweep_id = format!("sweep-{}", &hex::encode(h.finalize())[..12]);
    let root = output_dir
        .map(Path::to_path_buf)
        .or_else(|| spec.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    let dir = ensure_dir(&root.join(&sweep_id))?;

    let points = spec.points();
    info!(
        "sweep {sweep_id}: {} points ({}), parallelism {}",
        points.len(),
        spec.axes
            .iter()
            .map(|a| format!("{} x{}", a.path, a.values.len()))
            .collect::<Vec<_>>()
            .join(", "),
        spec.parallelism
    );

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<_> = pool.install(|| {
        points
            .par_iter()
            .map(|values| {
                let overrides: Vec<(String, Option<Value>)> = spec
                    .axes
                    .iter()
                    .zip(values)
                    .map(|(a, v)| (a.path.clone(), Some(v.clone())))
                    .collect();
                apply_values(&base, &overrides).and_then(|c| execute(kind, &c, &dir))
            })
            .collect()
    });

    let mut header: Vec<String> = vec!["index".into()];
    header.extend(spec.axes.iter().map(|a| a.path.clone()));
    header.push("run_id".into());
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut failures = Vec::new();
    for (i, (values, res)) in points.iter().zip(results).enumerate() {
        let rendered: Vec<String> = values.iter().map(render).collect();
        match res {
            Ok(out) => {
                let obs = out.summary.key_observables();
                if header.len() == spec.axes.len() + 2 {
                    header.extend(obs.iter().map(|(k, _)| k.to_string()));
                }
                let mut row = vec![i.to_string()];
                row.extend(rendered);
                row.push(out.run_id);
                row.extend(obs.iter().map(|(_, v)| fmt17(*v)));
                rows.push(row);
            }
            Err(e) => {
                error!("sweep point {i} ({}) failed: {e}", rendered.join(", "));
                failures.push(PointFailure {
                    index: i,
                    values: rendered,
                    error: e.to_string(),
                });
            }
        }
    }

    let aggregate = dir.join(AGGREGATE_FILE);
    let mut w = csv::Writer::from_path(&aggregate)
        .map_err(|e| Error::Serialization(format!("{}: {e}", aggregate.display())))?;
    w.write_record(&header)?;
    for r in &rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| Error::io(&aggregate, e))?;
    write_json(&dir.join(FAILURES_FILE), &failures)?;

    Ok(SweepReport {
        sweep_id,
        dir,
        size: points.len(),
        completed: rows.len(),
        failures,
        aggregate,
    })
}
