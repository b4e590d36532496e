use std::fmt::Write as _;

use serde_json::json;
use trawl::{choose_window, estimate_trawl, lambda_bar_n, lambda_n, psi_n, Sidecar, TestFunction, TrawlEstimate};

use super::load_path;
use crate::args::EstimateArgs;
use crate::output::{decimals_for, file_digest, fixed, write_with_sidecar};
use crate::{CliError, CliResult};

/// `square` or `power:<p>`.
pub fn parse_test_function(text: &str) -> CliResult<TestFunction> {
    let bad = || CliError::Usage(format!("--g `{text}`: expected `square` or `power:<p>`"));
    match text.split_once(':') {
        None if text == "square" => Ok(TestFunction::Square),
        Some(("power", p)) => Ok(TestFunction::power(p.parse().map_err(|_| bad())?)?),
        _ => Err(bad()),
    }
}

fn file_label(g: &TestFunction) -> String {
    match g {
        TestFunction::Power { p } => format!("power_{p}"),
        _ => "square".into(),
    }
}

fn a_hat_csv(est: &TrawlEstimate, digits: usize) -> String {
    let d = decimals_for(&est.a_hat, digits);
    let mut s = String::from("lag_time,a_hat\n");
    for (t, a) in est.lag_times().zip(&est.a_hat) {
        let _ = writeln!(s, "{t},{}", fixed(*a, d));
    }
    s
}

fn functionals_csv(
    est: &TrawlEstimate,
    g: &TestFunction,
    times: &[f64],
    window: usize,
    digits: usize,
) -> CliResult<String> {
    let mut cols = [Vec::new(), Vec::new(), Vec::new()];
    for &t in times {
        cols[0].push(psi_n(est, g, t)?);
        cols[1].push(lambda_n(est, g, t)?);
        // Λ̄ is undefined once t passes the window
        cols[2].push(lambda_bar_n(est, g, t, window).unwrap_or(f64::NAN));
    }
    let decimals: Vec<usize> = cols.iter().map(|c| decimals_for(c, digits)).collect();
    let mut s = String::from("t,psi_n,lambda_n,lambda_bar_n\n");
    for (i, t) in times.iter().enumerate() {
        let _ = writeln!(
            s,
            "{t},{},{},{}",
            fixed(cols[0][i], decimals[0]),
            fixed(cols[1][i], decimals[1]),
            fixed(cols[2][i], decimals[2])
        );
    }
    Ok(s)
}

pub fn run(a: EstimateArgs) -> CliResult<()> {
    let path = load_path(&a.input)?;
    let est = estimate_trawl(&path, a.method.into())?;
    let gs = if a.g.is_empty() {
        vec![TestFunction::Square]
    } else {
        a.g.iter()
            .map(|g| parse_test_function(g))
            .collect::<CliResult<Vec<_>>>()?
    };
    let times = a.t_grid.clone().unwrap_or_else(|| est.lag_times().collect());

    let config = json!({
        "input": a.input.input,
        "input_sha256": file_digest(&a.input.input)?,
        "delta": est.delta,
        "method": trawl::EstimatorMethod::from(a.method),
        "g": gs.iter().map(TestFunction::label).collect::<Vec<_>>(),
        "t_grid": a.t_grid,
        "theta": a.theta,
        "kappa": a.kappa,
        "varpi": a.varpi,
        "alpha": if a.alpha.is_finite() { json!(a.alpha) } else { json!("inf") },
        "digits": a.digits,
    });
    let side = Sidecar::new("estimate", config, None);
    write_with_sidecar(
        &a.out_dir.join("a_hat.csv"),
        a_hat_csv(&est, a.digits).as_bytes(),
        &side,
    )?;

    for g in &gs {
        let p = g.class().map_or(0.0, |c| c.p);
        let window = choose_window(est.n, a.varpi, a.theta, a.kappa, a.alpha, p)?;
        let csv = functionals_csv(&est, g, &times, window.window, a.digits)?;
        let name = format!("functionals_{}.csv", file_label(g));
        write_with_sidecar(&a.out_dir.join(name), csv.as_bytes(), &side)?;
    }
    Ok(())
}
