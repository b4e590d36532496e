use serde_json::json;
use trawl::{tau_test, Sidecar};

use super::load_path;
use crate::args::TdepArgs;
use crate::output::{file_digest, write_with_sidecar};
use crate::CliResult;

pub fn run(a: TdepArgs) -> CliResult<()> {
    let path = load_path(&a.input)?;
    let report = tau_test(&path, a.horizon, a.p)?;
    if report.p_below_clt_threshold {
        eprintln!(
            "warning: p = {} ≤ 3 is outside the regime where the statistic is robust to memory",
            a.p
        );
    }
    let text = serde_json::to_string_pretty(&report).map_err(trawl::Error::from)? + "\n";
    match &a.out {
        Some(out) => {
            let config = json!({
                "input": a.input.input,
                "input_sha256": file_digest(&a.input.input)?,
                "delta": path.delta,
                "T": a.horizon,
                "p": a.p,
            });
            write_with_sidecar(out, text.as_bytes(), &Sidecar::new("tdep", config, None))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
