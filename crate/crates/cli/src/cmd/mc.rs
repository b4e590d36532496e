use trawl::harness::TdepRule;
use trawl::{run_experiment, ExperimentConfig, Sidecar, Target};

use crate::args::McArgs;
use crate::output::{read_json, sidecar_config, to_value, write_with_sidecar};
use crate::{CliError, CliResult};

fn load(a: &McArgs) -> CliResult<ExperimentConfig> {
    let value = match (&a.from_sidecar, &a.config) {
        (Some(side), _) => sidecar_config(side, "mc")?,
        (None, Some(path)) => read_json(path)?,
        (None, None) => {
            return Err(CliError::Usage(
                "an experiment file or --from-sidecar is required".into(),
            ))
        }
    };
    let mut cfg: ExperimentConfig = serde_json::from_value(value).map_err(trawl::Error::from)?;
    if cfg.name.is_empty() {
        cfg.name = a
            .config
            .as_deref()
            .and_then(|p| p.file_stem())
            .map_or_else(|| "experiment".into(), |s| s.to_string_lossy().into_owned());
    }
    if let Some(t) = &a.target {
        cfg.target = t.parse::<Target>()?;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(r) = a.replications {
        cfg.replications = r;
    }
    if let Some(grid) = &a.n_grid {
        cfg.n_grid = grid.clone();
    }
    if let Some(v) = a.varpi {
        cfg.regime.varpi = v;
    }
    if let Some(theta) = a.theta {
        cfg.window.theta = theta;
    }
    if a.kappa.is_some() {
        cfg.window.kappa = a.kappa;
    }
    if let Some(t) = a.t {
        cfg.t = t;
    }
    if a.horizon.is_some() || a.p.is_some() {
        let base = cfg.tdep.unwrap_or(TdepRule {
            horizon: f64::NAN,
            p: trawl::inference::DEFAULT_POWER,
        });
        let rule = TdepRule {
            horizon: a.horizon.unwrap_or(base.horizon),
            p: a.p.unwrap_or(base.p),
        };
        if rule.horizon.is_nan() {
            return Err(CliError::Usage(
                "--p needs a T-dependence horizon (--T or a `tdep` block)".into(),
            ));
        }
        cfg.tdep = Some(rule);
    }
    if let Some(m) = a.method {
        cfg.method = m.into();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(a: McArgs, threads: Option<usize>) -> CliResult<()> {
    let cfg = load(&a)?;
    let result = run_experiment(&cfg, threads)?;
    let side = Sidecar::new("mc", to_value(&cfg), Some(cfg.master_seed));
    let json = serde_json::to_string_pretty(&result).map_err(trawl::Error::from)? + "\n";
    write_with_sidecar(&a.out_dir.join(format!("{}.json", cfg.name)), json.as_bytes(), &side)?;
    write_with_sidecar(
        &a.out_dir.join(format!("{}_raw.csv", cfg.name)),
        result.raw_csv().as_bytes(),
        &side,
    )?;
    for s in &result.summaries {
        println!(
            "{} n={} mean={:.6} var={:.6}{}{}",
            cfg.name,
            s.n,
            s.mean,
            s.variance,
            s.variance_ratio.map_or(String::new(), |r| format!(" ratio={r:.3}")),
            s.ks.map_or(String::new(), |k| format!(" ks={k:.4}")),
        );
    }
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}
