use serde::{Deserialize, Serialize};
use trawl::limit_theory::grid_csv;
use trawl::{AvarKernel, LevySeedSpec, Sidecar, TrawlSpec};

use crate::args::{KernelArgs, KernelKind};
use crate::output::{parse_json, read_json, to_value, write_with_sidecar};
use crate::{CliError, CliResult};

#[derive(Debug, Default, Deserialize)]
struct KernelSpec {
    trawl: Option<TrawlSpec>,
    seed: Option<LevySeedSpec>,
    k4: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Resolved {
    trawl: TrawlSpec,
    k4: f64,
    kind: &'static str,
    index: Option<(u8, u8)>,
    s_grid: Vec<f64>,
    r_grid: Vec<f64>,
}

fn resolve(a: &KernelArgs) -> CliResult<Resolved> {
    let mut spec: KernelSpec = match &a.spec {
        Some(path) => serde_json::from_value(read_json(path)?).map_err(|e| CliError::Usage(format!("spec: {e}")))?,
        None => KernelSpec::default(),
    };
    if let Some(t) = &a.trawl {
        spec.trawl = Some(parse_json("trawl", t)?);
    }
    let trawl = spec
        .trawl
        .ok_or_else(|| CliError::Usage("no trawl given: pass --trawl or set it in the spec file".into()))?;
    let k4 =
        a.k4.or(spec.k4)
            .or(spec.seed.map(|s| s.cumulants().fourth))
            .ok_or_else(|| CliError::Usage("no fourth cumulant: pass --k4 or give `seed`/`k4` in the spec".into()))?;
    let (kind, index) = match a.kind {
        KernelKind::SigmaA => ("sigma_a", None),
        KernelKind::SigmaASq => ("sigma_a_sq", None),
        KernelKind::F => match a.index.as_deref() {
            Some(&[l, lp]) => ("f", Some((l, lp))),
            _ => return Err(CliError::Usage("--kind f needs --index l,l'".into())),
        },
    };
    Ok(Resolved {
        trawl,
        k4,
        kind,
        index,
        s_grid: a.s_grid.clone(),
        r_grid: a.r_grid.clone().unwrap_or_else(|| a.s_grid.clone()),
    })
}

pub fn run(a: KernelArgs) -> CliResult<()> {
    let r = resolve(&a)?;
    let kernel = AvarKernel::new(r.trawl, r.k4)?;
    let mut rows = Vec::new();
    if r.kind == "sigma_a_sq" {
        for &t in &r.s_grid {
            rows.push((t, t, kernel.sigma_a_sq(t)?.value));
        }
    } else {
        for &s in &r.s_grid {
            for &q in &r.r_grid {
                let v = match r.index {
                    Some((l, lp)) => kernel.appendix_f(l, lp, s, q)?,
                    None => kernel.sigma_a_matrix(s, q)?,
                };
                rows.push((s, q, v.value));
            }
        }
    }
    let side = Sidecar::new("kernels", to_value(&r), None);
    write_with_sidecar(&a.out, grid_csv(&rows).as_bytes(), &side)
}
