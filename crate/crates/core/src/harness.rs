//! Monte Carlo experiments over the limit theorems.
//!
//! Each replication draws its own path from `derive_key(master, [n, rep])`
//! and results are gathered by index, so output is bitwise independent of
//! the worker count.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimators::{choose_window, estimate_trawl, lambda_bar_n, lambda_n, psi_n, EstimatorMethod, TestFunction};
use crate::inference::{tau_from_estimate, DEFAULT_POWER};
use crate::limit_theory::AvarKernel;
use crate::models::{LevySeedSpec, TrawlSpec};
use crate::quadrature::{integrate_split, Tolerance};
use crate::rng::derive_key;
use crate::simulator::{simulate, GridScheme, Horizon, SimulatorChoice, DEFAULT_TRUNCATION};

pub const MIN_KS_SAMPLES: usize = 20;

/// Largest `nΔ³` accepted for CLT targets.
pub const CLT_DISCRETIZATION_LIMIT: f64 = 0.1;

/// Accepted band for empirical over theoretical variance.
pub const VARIANCE_RATIO_BAND: (f64, f64) = (0.8, 1.25);

/// Asymptotic 1% Kolmogorov–Smirnov coefficient, `D_crit ≈ 1.63/√R`.
pub const KS_COEFFICIENT_1PCT: f64 = 1.63;

const CALIBRATION_NOTE: &str = "variance-ratio band and 1% KS level are harness choices calibrated by pilot runs of this tool; the theory only gives asymptotics";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    /// Consistency of `Ψ_t^n(g)`.
    T1,
    /// Consistency of `Λ_t^n(g)`.
    T2,
    /// Quadratic bias: `Λ_0^n(x²) → 2Λ_0(x²)`.
    T3,
    /// Windowed tail functional `Λ̄_t^n(g) → Λ_t(g)`.
    T4,
    /// `√(nΔ)(Ψ_t^n(g) - Ψ_t(g))`.
    T5,
    /// `√(nΔ)(Λ_t^n(g) - Λ_t(g))`, or the windowed version.
    T6,
    /// `√(nΔ) τ_{n,p}`.
    C1,
}

impl Target {
    pub fn is_clt(self) -> bool {
        matches!(self, Target::T5 | Target::T6)
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_ascii_uppercase()))
            .map_err(|_| Error::invalid("target", format!("unknown theorem tag `{s}` (expected T1..T6 or C1)")))
    }
}

/// `Δ = c · n^{-1/ϖ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Regime {
    pub varpi: f64,
    pub c: f64,
}

impl Default for Regime {
    fn default() -> Self {
        Regime { varpi: 2.0, c: 1.0 }
    }
}

impl Regime {
    pub fn delta(&self, n: usize) -> f64 {
        self.c * (n as f64).powf(-1.0 / self.varpi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowRule {
    #[serde(default = "one")]
    pub theta: f64,
    /// `None` takes the midpoint of the admissible interval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl Default for WindowRule {
    fn default() -> Self {
        WindowRule {
            theta: 1.0,
            kappa: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TdepRule {
    pub horizon: f64,
    #[serde(default = "default_power")]
    pub p: f64,
}

fn default_power() -> f64 {
    DEFAULT_POWER
}

fn default_truncation() -> f64 {
    DEFAULT_TRUNCATION
}

fn default_square() -> TestFunction {
    TestFunction::Square
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub target: Target,
    pub trawl: TrawlSpec,
    pub seed: LevySeedSpec,
    #[serde(default)]
    pub regime: Regime,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    #[serde(default = "default_square")]
    pub test_function: TestFunction,
    /// Time argument of the functional.
    #[serde(default)]
    pub t: f64,
    #[serde(default)]
    pub window: WindowRule,
    /// Use `Λ̄` rather than `Λ` for T6.
    #[serde(default)]
    pub windowed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tdep: Option<TdepRule>,
    #[serde(default)]
    pub simulator: SimulatorChoice,
    #[serde(default = "default_truncation")]
    pub truncation: f64,
    #[serde(default)]
    pub method: EstimatorMethod,
    pub master_seed: u64,
    /// Adds sample-standardized KS distances. Diagnostic only; pass/fail
    /// always standardizes with the limit variance.
    #[serde(default)]
    pub diagnostic_sample_variance: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let Regime { varpi, c } = self.regime;
        if !(varpi > 1.0 && varpi < 3.0) {
            return Err(Error::invalid("varpi", format!("must lie in (1, 3), got {varpi}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid("c", format!("must be > 0, got {c}")));
        }
        if self.n_grid.is_empty() {
            return Err(Error::invalid("n_grid", "must not be empty"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications", "must be ≥ 1"));
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::invalid("t", format!("must be ≥ 0, got {}", self.t)));
        }
        if !(self.truncation > 0.0 && self.truncation < 1.0) {
            return Err(Error::invalid("truncation", "must lie in (0, 1)"));
        }
        for &n in &self.n_grid {
            if n < 2 {
                return Err(Error::PathTooShort { len: n + 1, min: 3 });
            }
            let last = (n - 1) as f64 * self.regime.delta(n);
            let needed = match (self.target, self.tdep) {
                (Target::C1, Some(rule)) => rule.horizon,
                _ => self.t,
            };
            if needed > last {
                return Err(Error::invalid(
                    "t",
                    format!("time {needed} exceeds the observed lag range {last} at n = {n}"),
                ));
            }
        }
        if self.target == Target::C1 && self.tdep.is_none() {
            return Err(Error::invalid(
                "tdep",
                "target C1 needs a `tdep` block with the horizon",
            ));
        }
        if matches!(self.target, Target::T4) || (self.target == Target::T6 && self.windowed) {
            self.window_for(self.largest_n())?;
        }
        if self.target.is_clt() {
            let n = self.largest_n();
            let d = self.regime.delta(n);
            let v = n as f64 * d.powi(3);
            if v >= CLT_DISCRETIZATION_LIMIT {
                return Err(Error::invalid(
                    "regime",
                    format!("nΔ³ = {v:.3} at n = {n}; CLT targets need nΔ³ < {CLT_DISCRETIZATION_LIMIT}"),
                ));
            }
        }
        Ok(())
    }

    fn largest_n(&self) -> usize {
        self.n_grid.iter().copied().max().unwrap_or(0)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        hex_sha256(&serde_json::to_vec(&value).expect("value serializes"))
    }

    pub fn window_for(&self, n: usize) -> Result<crate::estimators::WindowChoice> {
        let p = self.test_function.class().map_or(0.0, |c| c.p);
        choose_window(
            n,
            self.regime.varpi,
            self.window.theta,
            self.window.kappa,
            self.trawl.tail_exponent(),
            p,
        )
    }

    fn scheme(&self, n: usize, rep: usize) -> Result<GridScheme> {
        let seed = derive_key(self.master_seed, &[n as u64, rep as u64]);
        Ok(
            GridScheme::new(n, self.regime.delta(n), seed)?.with_horizon(Horizon::Truncated {
                tolerance: self.truncation,
            }),
        )
    }
}

pub fn hex_sha256(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// `Ψ_t(g) = ∫_0^t g(a(s)) ds`.
pub fn true_psi(trawl: &TrawlSpec, g: &TestFunction, t: f64) -> Result<f64> {
    if let Some(p) = power_of(g) {
        return Ok(trawl.power_tail_integral(0.0, p)? - trawl.power_tail_integral(t, p)?);
    }
    Ok(integrate_split(|s| g.value(trawl.a(s)), 0.0, t, trawl.kinks(), Tolerance::default())?.value)
}

/// `Λ_t(g) = ∫_t^∞ g(a(s)) ds`.
pub fn true_lambda(trawl: &TrawlSpec, g: &TestFunction, t: f64) -> Result<f64> {
    if let Some(p) = power_of(g) {
        return trawl.power_tail_integral(t, p);
    }
    Ok(integrate_split(
        |s| g.value(trawl.a(s)),
        t,
        f64::INFINITY,
        trawl.kinks(),
        Tolerance::default(),
    )?
    .value)
}

/// Exponent when `g(a) = a^p` on `a ≥ 0` with a closed-form integral.
fn power_of(g: &TestFunction) -> Option<f64> {
    match g {
        TestFunction::Square => Some(2.0),
        TestFunction::Power { p } if *p >= 1.0 => Some(*p),
        _ => None,
    }
}

/// Sup distance between the empirical CDF of `samples` and `Φ`.
pub fn ks_distance(samples: &[f64]) -> Result<f64> {
    if samples.len() < MIN_KS_SAMPLES {
        return Err(Error::TooFewSamples {
            len: samples.len(),
            min: MIN_KS_SAMPLES,
        });
    }
    if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let r = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = normal_cdf(x);
        d = d.max((i + 1) as f64 / r - f).max(f - i as f64 / r);
    }
    Ok(d.min(1.0))
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// 1% critical value for `r` samples.
pub fn ks_critical_1pct(r: usize) -> f64 {
    KS_COEFFICIENT_1PCT / (r as f64).sqrt()
}

/// Least-squares slope of `log rmse` against `log(nΔ)` from
/// `(nΔ, rmse)` pairs.
pub fn convergence_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::TooFewSamples {
            len: points.len(),
            min: 3,
        });
    }
    for &(x, y) in points {
        if !(x > 0.0) || !(y > 0.0) {
            return Err(Error::invalid("rmse", format!("needs positive values, got ({x}, {y})")));
        }
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("n_grid", "needs at least two distinct nΔ values"));
    }
    Ok(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawStat {
    pub n: usize,
    pub rep: usize,
    pub stat: f64,
    /// Second statistic on the same path (T3: `Λ̄`; T4: `Λ`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub companion: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: usize,
    pub delta: f64,
    pub replications: usize,
    pub mean: f64,
    pub variance: f64,
    pub median: f64,
    pub q95: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_critical: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_sample_standardized: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub companion_mean: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub name: String,
    pub target: Target,
    pub config_hash: String,
    pub master_seed: u64,
    /// Limit of the statistic's mean (for T3 the biased limit `2Λ_0`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theoretical_variance: Option<f64>,
    pub summaries: Vec<NSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    pub warnings: Vec<String>,
    pub calibration: String,
    pub raw: Vec<RawStat>,
}

impl McResult {
    /// `n,rep,stat` CSV, with a `companion` column when present.
    pub fn raw_csv(&self) -> String {
        let with_companion = self.raw.iter().any(|r| r.companion.is_some());
        let mut s = String::from(if with_companion {
            "n,rep,stat,companion\n"
        } else {
            "n,rep,stat\n"
        });
        for r in &self.raw {
            let _ = write!(s, "{},{},{}", r.n, r.rep, r.stat);
            if with_companion {
                let _ = write!(s, ",{}", r.companion.map_or(String::new(), |c| c.to_string()));
            }
            s.push('\n');
        }
        s
    }

    pub fn stats_at(&self, n: usize) -> Vec<f64> {
        self.raw.iter().filter(|r| r.n == n).map(|r| r.stat).collect()
    }

    pub fn companions_at(&self, n: usize) -> Vec<f64> {
        self.raw
            .iter()
            .filter(|r| r.n == n)
            .filter_map(|r| r.companion)
            .collect()
    }

    pub fn summary(&self, n: usize) -> Option<&NSummary> {
        self.summaries.iter().find(|s| s.n == n)
    }
}

/// Quantities fixed across the grid.
struct Plan {
    truth: Option<f64>,
    centre: f64,
    theoretical_variance: Option<f64>,
}

fn plan(cfg: &ExperimentConfig) -> Result<Plan> {
    let g = &cfg.test_function;
    let (truth, centre) = match cfg.target {
        Target::T1 | Target::T5 => {
            let v = true_psi(&cfg.trawl, g, cfg.t)?;
            (Some(v), v)
        }
        Target::T2 | Target::T4 | Target::T6 => {
            let v = true_lambda(&cfg.trawl, g, cfg.t)?;
            (Some(v), v)
        }
        Target::T3 => {
            let v = 2.0 * true_lambda(&cfg.trawl, g, cfg.t)?;
            (Some(v), v)
        }
        Target::C1 => (None, 0.0),
    };
    let theoretical_variance = if cfg.target.is_clt() {
        let kernel = AvarKernel::new(cfg.trawl, cfg.seed.cumulants().fourth)?;
        let v = match cfg.target {
            Target::T5 => kernel.limit_cov_psi(g, cfg.t, cfg.t)?,
            _ => kernel.limit_cov_lambda(g, cfg.t, cfg.t, None)?,
        };
        Some(v.value)
    } else {
        None
    };
    Ok(Plan {
        truth,
        centre,
        theoretical_variance,
    })
}

fn replicate(cfg: &ExperimentConfig, plan: &Plan, n: usize, rep: usize, window: Option<usize>) -> Result<RawStat> {
    let scheme = cfg.scheme(n, rep)?;
    let path = simulate(&cfg.trawl, &cfg.seed, &scheme, cfg.simulator)?;
    let est = estimate_trawl(&path, cfg.method)?;
    let g = &cfg.test_function;
    let root = (n as f64 * scheme.delta).sqrt();
    let (stat, companion) = match cfg.target {
        Target::T1 => (psi_n(&est, g, cfg.t)?, None),
        Target::T2 => (lambda_n(&est, g, cfg.t)?, None),
        Target::T3 => {
            let bar = window.map(|w| lambda_bar_n(&est, g, cfg.t, w)).transpose()?;
            (lambda_n(&est, g, cfg.t)?, bar)
        }
        Target::T4 => (
            lambda_bar_n(&est, g, cfg.t, window.expect("window resolved for T4"))?,
            Some(lambda_n(&est, g, cfg.t)?),
        ),
        Target::T5 => (root * (psi_n(&est, g, cfg.t)? - plan.centre), None),
        Target::T6 => {
            let v = match window {
                Some(w) => lambda_bar_n(&est, g, cfg.t, w)?,
                None => lambda_n(&est, g, cfg.t)?,
            };
            (root * (v - plan.centre), None)
        }
        Target::C1 => {
            let rule = cfg.tdep.expect("validated");
            (tau_from_estimate(&est, rule.horizon, rule.p)?.scaled, None)
        }
    };
    Ok(RawStat {
        n,
        rep,
        stat,
        companion,
    })
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    // linear interpolation between order statistics
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(
    cfg: &ExperimentConfig,
    plan: &Plan,
    n: usize,
    window: Option<usize>,
    raw: &[RawStat],
    warnings: &mut Vec<String>,
) -> NSummary {
    let xs: Vec<f64> = raw.iter().map(|r| r.stat).collect();
    let r = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / r;
    let variance = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0)
    } else {
        0.0
    };
    let mut sorted = xs.clone();
    sorted.sort_by(f64::total_cmp);
    let rmse = match cfg.target {
        Target::T1 | Target::T2 | Target::T3 | Target::T4 => plan
            .truth
            .map(|t| (xs.iter().map(|x| (x - t).powi(2)).sum::<f64>() / r).sqrt()),
        _ => None,
    };
    let (variance_ratio, ks, ks_critical, ks_sample_standardized) = match plan.theoretical_variance {
        Some(v) if v > 0.0 => {
            let sd = v.sqrt();
            let z: Vec<f64> = xs.iter().map(|x| x / sd).collect();
            let ks = ks_distance(&z).ok();
            if ks.is_none() {
                warnings.push(format!("n = {n}: fewer than {MIN_KS_SAMPLES} replications, KS skipped"));
            }
            let diag = if cfg.diagnostic_sample_variance && variance > 0.0 {
                let s = variance.sqrt();
                ks_distance(&xs.iter().map(|x| (x - mean) / s).collect::<Vec<_>>()).ok()
            } else {
                None
            };
            (Some(variance / v), ks, ks.map(|_| ks_critical_1pct(xs.len())), diag)
        }
        Some(v) => {
            warnings.push(format!(
                "theoretical variance {v} is not positive; standardization skipped"
            ));
            (None, None, None, None)
        }
        None => (None, None, None, None),
    };
    let companions: Vec<f64> = raw.iter().filter_map(|r| r.companion).collect();
    NSummary {
        n,
        delta: cfg.regime.delta(n),
        replications: xs.len(),
        mean,
        variance,
        median: quantile(&sorted, 0.5),
        q95: quantile(&sorted, 0.95),
        window,
        rmse,
        variance_ratio,
        ks,
        ks_critical,
        ks_sample_standardized,
        companion_mean: (!companions.is_empty()).then(|| companions.iter().sum::<f64>() / companions.len() as f64),
    }
}

/// Runs an experiment on the global pool, or on a dedicated pool of
/// `threads` workers.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<McResult> {
    cfg.validate()?;
    match threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::invalid("threads", e.to_string()))?;
            pool.install(|| run_inner(cfg))
        }
        None => run_inner(cfg),
    }
}

fn run_inner(cfg: &ExperimentConfig) -> Result<McResult> {
    let plan = plan(cfg)?;
    let mut warnings = Vec::new();
    if !cfg.seed.unit_variance() {
        warnings.push(format!(
            "seed variance {} ≠ 1; functionals of â target the scaled trawl function",
            cfg.seed.cumulants().variance
        ));
    }
    if cfg.target == Target::T3 && cfg.test_function != TestFunction::Square {
        warnings.push("the quadratic-bias target is stated for g(x) = x²".into());
    }
    let uses_window = matches!(cfg.target, Target::T3 | Target::T4) || (cfg.target == Target::T6 && cfg.windowed);
    let mut windows = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let w = if uses_window {
            match cfg.window_for(n) {
                Ok(choice) => {
                    let start = (cfg.t / cfg.regime.delta(n) + 1e-9).floor() as usize;
                    if choice.window <= start {
                        if cfg.target == Target::T3 {
                            warnings.push(format!("n = {n}: window {} too short for the companion", choice.window));
                            None
                        } else {
                            return Err(Error::EmptyWindow {
                                window: choice.window,
                                start,
                                n,
                            });
                        }
                    } else {
                        Some(choice.window)
                    }
                }
                Err(e) if cfg.target == Target::T3 => {
                    warnings.push(format!("windowed companion skipped: {e}"));
                    None
                }
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        windows.push(w);
    }

    let jobs: Vec<(usize, usize, Option<usize>)> = cfg
        .n_grid
        .iter()
        .zip(&windows)
        .flat_map(|(&n, &w)| (0..cfg.replications).map(move |rep| (n, rep, w)))
        .collect();
    let raw: Vec<RawStat> = jobs
        .par_iter()
        .map(|&(n, rep, w)| {
            replicate(cfg, &plan, n, rep, w).map_err(|e| Error::Replication {
                n,
                rep,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut summaries = Vec::with_capacity(cfg.n_grid.len());
    for (i, (&n, &w)) in cfg.n_grid.iter().zip(&windows).enumerate() {
        let chunk = &raw[i * cfg.replications..(i + 1) * cfg.replications];
        summaries.push(summarize(cfg, &plan, n, w, chunk, &mut warnings));
    }
    let slope_points: Vec<(f64, f64)> = summaries
        .iter()
        .filter_map(|s| s.rmse.map(|e| (s.n as f64 * s.delta, e)))
        .collect();
    let slope = if slope_points.len() >= 3 {
        convergence_slope(&slope_points).ok()
    } else {
        None
    };

    Ok(McResult {
        name: cfg.name.clone(),
        target: cfg.target,
        config_hash: cfg.hash(),
        master_seed: cfg.master_seed,
        truth: plan.truth,
        theoretical_variance: plan.theoretical_variance,
        summaries,
        slope,
        warnings,
        calibration: CALIBRATION_NOTE.into(),
        raw,
    })
}

/// Provenance sidecar written next to every output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    /// Fully resolved inputs; enough to regenerate the output.
    pub config: serde_json::Value,
    /// SHA-256 of each output file, keyed by file name.
    pub outputs: std::collections::BTreeMap<String, String>,
}

impl Sidecar {
    pub fn new(command: &str, config: serde_json::Value, master_seed: Option<u64>) -> Self {
        let config_hash = hex_sha256(&serde_json::to_vec(&config).expect("value serializes"));
        Sidecar {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash,
            master_seed,
            config,
            outputs: Default::default(),
        }
    }

    pub fn record_output(&mut self, name: &str, bytes: &[u8]) {
        self.outputs.insert(name.into(), hex_sha256(bytes));
    }

    pub fn sidecar_path(output: &Path) -> std::path::PathBuf {
        let mut s = output.as_os_str().to_owned();
        s.push(".provenance.json");
        s.into()
    }

    pub fn write(&self, output: &Path) -> Result<()> {
        let path = Self::sidecar_path(output);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(target: Target) -> ExperimentConfig {
        ExperimentConfig {
            name: "unit".into(),
            target,
            trawl: TrawlSpec::exponential(1.0).unwrap(),
            seed: LevySeedSpec::poisson(1.0).unwrap(),
            regime: Regime::default(),
            n_grid: vec![256],
            replications: 4,
            test_function: TestFunction::Square,
            t: 0.0,
            window: WindowRule::default(),
            windowed: false,
            tdep: None,
            simulator: SimulatorChoice::Auto,
            truncation: DEFAULT_TRUNCATION,
            method: EstimatorMethod::Fft,
            master_seed: 7,
            diagnostic_sample_variance: false,
        }
    }

    #[test]
    fn ks_on_exact_quantiles() {
        let r = 200;
        // Φ⁻¹ by bisection on the CDF
        let inv = |p: f64| {
            let (mut lo, mut hi) = (-10.0, 10.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if normal_cdf(mid) < p {
                    lo = mid
                } else {
                    hi = mid
                }
            }
            0.5 * (lo + hi)
        };
        let xs: Vec<f64> = (1..=r).map(|i| inv((i as f64 - 0.5) / r as f64)).collect();
        assert!(ks_distance(&xs).unwrap() <= 0.5 / r as f64 + 1e-12);
        assert!(ks_distance(&[0.0; 25]).unwrap() >= 0.5);
        assert!(matches!(ks_distance(&[0.0; 5]), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn slope_examples() {
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 40.0f64].iter().map(|&x| (x, x.powf(-0.5))).collect();
        assert!((convergence_slope(&pts).unwrap() + 0.5).abs() < 1e-12);
        let flat = [(1.0, 0.3), (2.0, 0.3), (4.0, 0.3)];
        assert!(convergence_slope(&flat).unwrap().abs() < 1e-12);
        assert!(convergence_slope(&[(1.0, 0.3), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(convergence_slope(&[(1.0, 0.3), (2.0, 0.2)]).is_err());
    }

    #[test]
    fn target_tags_parse() {
        assert_eq!("t3".parse::<Target>().unwrap(), Target::T3);
        assert_eq!("C1".parse::<Target>().unwrap(), Target::C1);
        assert!("T9".parse::<Target>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(Target::T1);
        c.regime.varpi = 3.0;
        assert!(c.validate().is_err());
        let mut c = cfg(Target::T5);
        c.regime = Regime { varpi: 2.0, c: 1.0 };
        c.n_grid = vec![64];
        // nΔ³ = 64 · 64^{-3/2} = 0.125
        assert!(c.validate().is_err());
        let mut c = cfg(Target::C1);
        assert!(c.validate().is_err());
        c.tdep = Some(TdepRule { horizon: 1.0, p: 4.0 });
        assert!(c.validate().is_ok());
    }

    #[test]
    fn unknown_tag_in_json_is_rejected() {
        let text = r#"{"target":"T9","trawl":{"family":"exponential","rate":1},"seed":{"family":"poisson","rate":1},"n_grid":[64],"replications":1,"master_seed":1}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn single_replication_is_reproducible() {
        let mut c = cfg(Target::T3);
        c.replications = 1;
        let a = run_experiment(&c, Some(1)).unwrap();
        let b = run_experiment(&c, Some(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.raw.len(), 1);
        assert!(a.raw[0].companion.is_some());
    }

    #[test]
    fn truths_match_closed_forms() {
        let e = TrawlSpec::exponential(1.0).unwrap();
        let g = TestFunction::Square;
        assert!((true_psi(&e, &g, 1.0).unwrap() - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-14);
        assert!((true_lambda(&e, &g, 0.0).unwrap() - 0.5).abs() < 1e-14);
        let sin2 = TestFunction::custom(
            "sin²",
            |x| x.sin().powi(2),
            |x| (2.0 * x).sin(),
            |x| 2.0 * (2.0 * x).cos(),
            None,
        );
        let q = true_psi(&e, &sin2, 1.0).unwrap();
        assert!(q > 0.0 && q < 1.0);
    }

    #[test]
    fn csv_and_sidecar() {
        let c = cfg(Target::T1);
        let r = run_experiment(&c, None).unwrap();
        let csv = r.raw_csv();
        assert!(csv.starts_with("n,rep,stat\n256,0,"));
        assert_eq!(csv.lines().count(), 5);
        let mut side = Sidecar::new("mc", serde_json::to_value(&c).unwrap(), Some(c.master_seed));
        side.record_output("raw.csv", csv.as_bytes());
        let back: Sidecar = serde_json::from_str(&serde_json::to_string(&side).unwrap()).unwrap();
        let again: ExperimentConfig = serde_json::from_value(back.config).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash(), c.hash());
    }
}
