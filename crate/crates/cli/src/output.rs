use std::path::Path;

use serde::Serialize;
use trawl::Sidecar;

use crate::{CliError, CliResult};

/// Writes `bytes` to `path` and a provenance sidecar next to it.
pub fn write_with_sidecar(path: &Path, bytes: &[u8], sidecar: &Sidecar) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| io_error(path, e))?;
    let mut side = sidecar.clone();
    let name = path
        .file_name()
        .map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    side.outputs.clear();
    side.record_output(&name, bytes);
    side.write(path)?;
    Ok(())
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Core(trawl::Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("configuration serializes")
}

/// Decimal places that keep `digits` significant digits for the largest
/// magnitude in `values`.
pub fn decimals_for(values: &[f64], digits: usize) -> usize {
    let top = values
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return digits;
    }
    let lead = top.log10().floor() as i64;
    (digits as i64 - 1 - lead).clamp(0, 300) as usize
}

/// `v` rounded to `decimals` places, printed in shortest form. Values that
/// agree to that precision print identically.
pub fn fixed(v: f64, decimals: usize) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let rounded: f64 = format!("{v:.decimals$}").parse().unwrap_or(v);
    // no negative zero
    format!("{}", rounded + 0.0)
}

pub fn file_digest(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
    Ok(trawl::harness::hex_sha256(&bytes))
}

pub fn parse_json<T: serde::de::DeserializeOwned>(flag: &str, text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}

pub fn read_json(path: &Path) -> CliResult<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// The resolved configuration stored in a sidecar written by `command`.
pub fn sidecar_config(path: &Path, command: &str) -> CliResult<serde_json::Value> {
    let side = Sidecar::load(path)?;
    if side.command != command {
        return Err(CliError::Usage(format!(
            "{} records a `{}` run, not `{command}`",
            path.display(),
            side.command
        )));
    }
    Ok(side.config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_to_column_precision() {
        let d = decimals_for(&[0.5, -0.25], 12);
        assert_eq!(d, 12);
        assert_eq!(fixed(0.5, d), "0.5");
        assert_eq!(fixed(0.49999999999999994, d), "0.5");
        assert_eq!(fixed(-0.25, d), "-0.25");
        assert_eq!(fixed(-1e-17, d), "0");
        assert_eq!(fixed(f64::NAN, d), "NaN");
        assert_eq!(decimals_for(&[1234.5], 4), 0);
        assert_eq!(decimals_for(&[0.0], 12), 12);
    }
}
