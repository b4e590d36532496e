use serde::{Deserialize, Serialize};
use trawl::simulator::path_csv;
use trawl::{simulate, GridScheme, Horizon, LevySeedSpec, Sidecar, SimulatorChoice, TrawlSpec};

use super::with_threads;
use crate::args::{SimulateArgs, SimulatorArg};
use crate::output::{parse_json, read_json, sidecar_config, to_value, write_with_sidecar};
use crate::{CliError, CliResult};

/// Simulation spec file; every field may also come from a flag.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateSpec {
    trawl: Option<TrawlSpec>,
    seed: Option<LevySeedSpec>,
    n: Option<usize>,
    delta: Option<f64>,
    master_seed: Option<u64>,
    horizon: Option<Horizon>,
    simulator: Option<SimulatorChoice>,
}

#[derive(Debug, Serialize)]
struct Resolved {
    trawl: TrawlSpec,
    seed: LevySeedSpec,
    n: usize,
    delta: f64,
    master_seed: u64,
    horizon: Horizon,
    simulator: SimulatorChoice,
}

fn missing(what: &str) -> CliError {
    CliError::Usage(format!("no {what} given: pass --{what} or set it in the spec file"))
}

fn resolve(a: &SimulateArgs) -> CliResult<Resolved> {
    let base = if let Some(path) = &a.from_sidecar {
        Some(sidecar_config(path, "simulate")?)
    } else {
        a.spec.as_deref().map(read_json).transpose()?
    };
    let mut spec: SimulateSpec = match base {
        Some(v) => serde_json::from_value(v).map_err(|e| CliError::Usage(format!("spec: {e}")))?,
        None => SimulateSpec::default(),
    };
    if let Some(t) = &a.trawl {
        spec.trawl = Some(parse_json("trawl", t)?);
    }
    if let Some(s) = &a.basis {
        spec.seed = Some(parse_json("basis", s)?);
    }
    spec.n = a.n.or(spec.n);
    spec.delta = a.delta.or(spec.delta);
    spec.master_seed = a.seed.or(spec.master_seed);
    if a.exact {
        spec.horizon = Some(Horizon::Exact);
    } else if let Some(tolerance) = a.truncation {
        spec.horizon = Some(Horizon::Truncated { tolerance });
    }
    if let Some(s) = a.simulator {
        spec.simulator = Some(match s {
            SimulatorArg::Auto => SimulatorChoice::Auto,
            SimulatorArg::Slices => SimulatorChoice::Slices,
            SimulatorArg::Points => SimulatorChoice::Points,
        });
    }
    Ok(Resolved {
        trawl: spec.trawl.ok_or_else(|| missing("trawl"))?,
        seed: spec.seed.ok_or_else(|| missing("basis"))?,
        n: spec.n.ok_or_else(|| missing("n"))?,
        delta: spec.delta.ok_or_else(|| missing("delta"))?,
        master_seed: spec.master_seed.unwrap_or(0),
        horizon: spec.horizon.unwrap_or(Horizon::Truncated {
            tolerance: trawl::simulator::DEFAULT_TRUNCATION,
        }),
        simulator: spec.simulator.unwrap_or_default(),
    })
}

pub fn run(a: SimulateArgs, threads: Option<usize>) -> CliResult<()> {
    let r = resolve(&a)?;
    let scheme = GridScheme::new(r.n, r.delta, r.master_seed)?.with_horizon(r.horizon);
    let path = with_threads(threads, || simulate(&r.trawl, &r.seed, &scheme, r.simulator))??;
    let csv = path_csv(&path);
    let side = Sidecar::new("simulate", to_value(&r), Some(r.master_seed));
    write_with_sidecar(&a.out, csv.as_bytes(), &side)
}
