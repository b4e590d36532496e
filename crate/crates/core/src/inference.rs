//! The T-dependence ratio statistic
//! `τ_{n,p} = Λ_T^n(|x|^p) / Ψ_T^n(|x|^p)`.
//!
//! For a T-dependent trawl the numerator vanishes in the limit; otherwise
//! `√(nΔ) τ` diverges. No critical value is attached: thresholds come from
//! empirical quantiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{estimate_trawl, lambda_n, psi_n, EstimatorMethod, TestFunction, TrawlEstimate};
use crate::models::TrawlSpec;
use crate::simulator::SampledPath;

pub const DEFAULT_POWER: f64 = 4.0;

/// Exponents at or below this value fall outside the regime where the
/// statistic is robust to long memory.
pub const CLT_POWER_THRESHOLD: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub p: f64,
    pub tau: f64,
    /// `√(nΔ) τ`.
    pub scaled: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub n: usize,
    pub delta: f64,
    pub p_below_clt_threshold: bool,
}

/// Index `⌈T/Δ⌉` that splits head from tail.
fn split_index(horizon: f64, delta: f64) -> usize {
    (horizon / delta - 1e-9).ceil().max(0.0) as usize
}

/// Runs the test on a path.
pub fn tau_test(path: &SampledPath, horizon: f64, p: f64) -> Result<TestReport> {
    let est = estimate_trawl(path, EstimatorMethod::Fft)?;
    tau_from_estimate(&est, horizon, p)
}

/// Runs the test on an existing `â`.
pub fn tau_from_estimate(est: &TrawlEstimate, horizon: f64, p: f64) -> Result<TestReport> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::invalid("p", format!("power exponent must be > 0, got {p}")));
    }
    let last = (est.n - 1) as f64 * est.delta;
    if !(horizon > 0.0) || horizon > last * (1.0 + 1e-12) {
        return Err(Error::OutOfDomain {
            what: "T-dependence horizon (0, (n-1)Δ]",
            value: horizon,
        });
    }
    let g = TestFunction::power(p)?;
    let at = split_index(horizon, est.delta) as f64 * est.delta;
    let numerator = lambda_n(est, &g, at)?;
    let denominator = psi_n(est, &g, at)?;
    if !(denominator > 0.0) {
        return Err(Error::DegenerateStatistic);
    }
    let tau = numerator / denominator;
    Ok(TestReport {
        horizon,
        p,
        tau,
        scaled: (est.n as f64 * est.delta).sqrt() * tau,
        numerator,
        denominator,
        n: est.n,
        delta: est.delta,
        p_below_clt_threshold: p <= CLT_POWER_THRESHOLD,
    })
}

/// Ground truth: the trawl is T-dependent iff `a` vanishes on `[T, ∞)`.
pub fn tdep_characterization(trawl: &TrawlSpec, horizon: f64) -> bool {
    trawl.tail_integral(horizon) == 0.0
}
