#![allow(dead_code)]

use cavity_detect::model::validate;
use cavity_detect::{Config, Model};

pub const VRS: &str = include_str!("../../configs/vrs_baseline.toml");
pub const EIT: &str = include_str!("../../configs/eit_baseline.toml");
pub const RINGDOWN: &str = include_str!("../../configs/ringdown_baseline.toml");

pub fn config(base: &str) -> Config {
    toml::from_str(base).unwrap()
}

pub fn model(base: &str, edit: impl FnOnce(&mut Config)) -> Model {
    let mut c = config(base);
    edit(&mut c);
    validate(&c).unwrap()
}

/// Same model driven by a fixed input power instead of a target output.
pub fn with_input(base: &str, p_in_w: f64, edit: impl FnOnce(&mut Config)) -> Model {
    model(base, |c| {
        c.drive.target_peak_p_out_w = None;
        c.drive.p_in_w = Some(p_in_w);
        edit(c);
    })
}

pub fn configs_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}
