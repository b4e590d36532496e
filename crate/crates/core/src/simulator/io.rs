//! CSV import/export of sampled paths (`t,x`, one row per grid point).

use std::fmt::Write as _;
use std::path::Path;

use super::grid::SampledPath;
use crate::error::{Error, Result};

const UNIFORM_TOLERANCE: f64 = 1e-9;

/// Writes `t,x` with shortest round-trip decimal formatting.
pub fn write_csv(path: &SampledPath, out: &Path) -> Result<()> {
    std::fs::write(out, path_csv(path)).map_err(|e| Error::io(out, e))
}

/// `t,x` CSV text of a path.
pub fn path_csv(path: &SampledPath) -> String {
    let mut s = String::from("t,x\n");
    for (t, x) in path.times().zip(&path.values) {
        let _ = writeln!(s, "{t},{x}");
    }
    s
}

/// Reads a single-column (`x`) or two-column (`t,x`) file. A single column
/// needs `delta`; two columns infer it and check the grid is uniform.
pub fn ingest_csv(file: &Path, delta: Option<f64>) -> Result<SampledPath> {
    let text = std::fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
    parse_series(&text, delta)
}

pub fn parse_series(text: &str, delta: Option<f64>) -> Result<SampledPath> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut columns = None;
    for (row, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let nums = match parsed {
            Ok(v) => v,
            // header row
            Err(_)
                if values.is_empty()
                    && columns.is_none()
                    && fields.iter().all(|f| f.chars().any(char::is_alphabetic)) =>
            {
                columns = Some(fields.len());
                continue;
            }
            Err(_) => {
                let bad = fields
                    .iter()
                    .find(|f| f.parse::<f64>().is_err())
                    .copied()
                    .unwrap_or(line);
                return Err(Error::Parse {
                    row: row + 1,
                    text: bad.to_string(),
                });
            }
        };
        let width = *columns.get_or_insert(nums.len());
        if nums.len() != width || !(1..=2).contains(&width) {
            return Err(Error::Parse {
                row: row + 1,
                text: line.to_string(),
            });
        }
        if width == 2 {
            times.push(nums[0]);
            values.push(nums[1]);
        } else {
            values.push(nums[0]);
        }
    }

    let delta = if times.is_empty() {
        delta.ok_or(Error::MissingStep)?
    } else {
        let inferred = infer_step(&times)?;
        delta.unwrap_or(inferred)
    };
    SampledPath::from_values(delta, values)
}

fn infer_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::PathTooShort {
            len: times.len(),
            min: 3,
        });
    }
    let step = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for (row, w) in times.windows(2).enumerate() {
        let found = w[1] - w[0];
        if (found - step).abs() > UNIFORM_TOLERANCE * step.abs() {
            return Err(Error::NonUniformGrid {
                row: row + 1,
                found,
                expected: step,
            });
        }
    }
    Ok(step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_column_with_supplied_step() {
        let p = parse_series("0\n1\n0\n", Some(1.0)).unwrap();
        assert_eq!(p.values, vec![0.0, 1.0, 0.0]);
        assert_eq!(p.delta, 1.0);
        assert!(matches!(parse_series("0\n1\n0\n", None), Err(Error::MissingStep)));
    }

    #[test]
    fn two_columns_infer_step() {
        let p = parse_series("t,x\n0,1\n0.5,2\n1.0,3\n", None).unwrap();
        assert_eq!(p.delta, 0.5);
        assert_eq!(p.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn non_uniform_grid_is_rejected() {
        let r = parse_series("0,1\n0.5,2\n1.1,3\n", None);
        assert!(matches!(r, Err(Error::NonUniformGrid { .. })), "{r:?}");
    }

    #[test]
    fn non_numeric_row_is_rejected() {
        let r = parse_series("t,x\n0,1\n0.5,abc\n1.0,3\n", None);
        assert!(matches!(r, Err(Error::Parse { row: 3, .. })), "{r:?}");
    }

    #[test]
    fn export_round_trips() {
        let p = SampledPath::from_values(0.1, vec![0.1, -2.5e-7, 3.0, 1.0 / 3.0]).unwrap();
        let text = path_csv(&p);
        assert!(text.starts_with("t,x\n0,0.1\n"));
        let q = parse_series(&text, None).unwrap();
        assert_eq!(q.values, p.values);
        assert!((q.delta - 0.1).abs() < 1e-15);
    }
}
