pub mod data;
pub mod replay;
pub mod report;
pub mod serve;
pub mod train;

use std::path::Path;

use crate::error::{invalid, Result};

pub(crate) fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("--{name} must be positive, got {v}")))
    }
}

pub(crate) fn unit(name: &str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(invalid(format!("--{name} must lie in [0, 1], got {v}")))
    }
}

pub(crate) fn fraction(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(invalid(format!("--{name} must lie in (0, 1), got {v}")))
    }
}

pub(crate) fn need_dir(p: &Path) -> Result<()> {
    if p.is_dir() {
        Ok(())
    } else {
        Err(invalid(format!("{} is not a directory", p.display())))
    }
}

pub(crate) fn need_file(p: &Path) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(invalid(format!("{} does not exist", p.display())))
    }
}

pub(crate) fn write_json(path: &Path, v: &impl serde::Serialize) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

pub(crate) fn parent_dir(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

/// `model.json` -> `model.report.json`
pub(crate) fn sibling(path: &Path, suffix: &str) -> std::path::PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}
