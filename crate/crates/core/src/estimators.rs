//! Nonparametric trawl-function estimator and the plug-in functionals.
//!
//! `â(lΔ) = -(1/(nΔ)) Σ_{k=l}^{n-1} (X_{(k-l)Δ} - X̄_n) δ_k X` with
//! `δ_k X = X_{(k+1)Δ} - X_{kΔ}` and `X̄_n` the mean of `X_0..X_{(n-1)Δ}`.

use std::cell::RefCell;
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::RealFftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::SampledPath;

/// Slack when mapping a time to a grid index, so that `t = lΔ` computed in
/// floating point still lands on `l`.
const INDEX_SLACK: f64 = 1e-9;

/// `g ∈ 𝔠^d_{p,q}`: `g ∈ C^d`, `g^{(j)}(0) = 0` for `j < d`, and
/// `g^{(d)}(x)` is `O(|x|^p)` at zero and `O(|x|^q)` at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessClass {
    pub d: u32,
    pub p: f64,
    pub q: f64,
}

impl SmoothnessClass {
    /// Order of `ġ` at the origin: `ġ(x) = O(|x|^{d-1+p})`.
    pub fn derivative_order(&self) -> f64 {
        f64::from(self.d) - 1.0 + self.p
    }
}

type RealMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied test function with its first two derivatives.
#[derive(Clone)]
pub struct CustomFunction {
    pub name: String,
    pub g: RealMap,
    pub dg: RealMap,
    pub d2g: RealMap,
    pub class: Option<SmoothnessClass>,
}

impl fmt::Debug for CustomFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFunction")
            .field("name", &self.name)
            .field("class", &self.class)
            .finish_non_exhaustive()
    }
}

/// The `g` in `Ψ_t(g) = ∫_0^t g(a(s)) ds` and `Λ_t(g) = ∫_t^∞ g(a(s)) ds`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `g(x) = |x|^p`.
    Power { p: f64 },
    /// `g(x) = x²`.
    Square,
    #[serde(skip)]
    Custom(CustomFunction),
}

impl PartialEq for TestFunction {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (TestFunction::Power { p }, TestFunction::Power { p: q }) => p == q,
            (TestFunction::Square, TestFunction::Square) => true,
            (TestFunction::Custom(a), TestFunction::Custom(b)) => a.name == b.name && Arc::ptr_eq(&a.g, &b.g),
            _ => false,
        }
    }
}

impl TestFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::invalid("p", format!("power must be > 0, got {p}")));
        }
        Ok(TestFunction::Power { p })
    }

    pub fn custom(
        name: impl Into<String>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dg: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        class: Option<SmoothnessClass>,
    ) -> Self {
        TestFunction::Custom(CustomFunction {
            name: name.into(),
            g: Arc::new(g),
            dg: Arc::new(dg),
            d2g: Arc::new(d2g),
            class,
        })
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self {
            TestFunction::Power { p } => x.abs().powf(*p),
            TestFunction::Square => x * x,
            TestFunction::Custom(c) => (c.g)(x),
        }
    }

    /// `ġ(x)`.
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            TestFunction::Power { p } => {
                if x == 0.0 {
                    if *p > 1.0 {
                        0.0
                    } else if *p == 1.0 {
                        1.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    p * x.signum() * x.abs().powf(p - 1.0)
                }
            }
            TestFunction::Square => 2.0 * x,
            TestFunction::Custom(c) => (c.dg)(x),
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        match self {
            TestFunction::Power { p } => {
                if x == 0.0 && *p < 2.0 {
                    if *p == 1.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    p * (p - 1.0) * x.abs().powf(p - 2.0)
                }
            }
            TestFunction::Square => 2.0,
            TestFunction::Custom(c) => (c.d2g)(x),
        }
    }

    /// Smoothness class, when known. `|x|^p` is in `𝔠^{⌊p⌋}_{p-⌊p⌋, p-⌊p⌋}`.
    pub fn class(&self) -> Option<SmoothnessClass> {
        match self {
            TestFunction::Power { p } => {
                let d = p.floor();
                Some(SmoothnessClass {
                    d: d as u32,
                    p: p - d,
                    q: p - d,
                })
            }
            TestFunction::Square => Some(SmoothnessClass { d: 2, p: 0.0, q: 0.0 }),
            TestFunction::Custom(c) => c.class,
        }
    }

    pub fn label(&self) -> String {
        match self {
            TestFunction::Power { p } => format!("|x|^{p}"),
            TestFunction::Square => "x^2".into(),
            TestFunction::Custom(c) => c.name.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMethod {
    Naive,
    #[default]
    Fft,
}

/// `â(lΔ)` for `l = 0..n-1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrawlEstimate {
    pub delta: f64,
    pub n: usize,
    pub a_hat: Vec<f64>,
    pub x_bar: f64,
}

impl TrawlEstimate {
    pub fn lag_times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |l| l as f64 * self.delta)
    }

    /// `lag_time,a_hat` CSV.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lag_time,a_hat\n");
        for (t, a) in self.lag_times().zip(&self.a_hat) {
            let _ = writeln!(s, "{t},{a}");
        }
        s
    }

    fn index_of(&self, t: f64) -> usize {
        (t / self.delta + INDEX_SLACK).floor() as usize
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let last = (self.n - 1) as f64 * self.delta;
        if !(t >= 0.0) || t > last * (1.0 + 1e-12) + INDEX_SLACK * self.delta {
            return Err(Error::OutOfDomain {
                what: "functional time argument",
                value: t,
            });
        }
        Ok(())
    }

    fn riemann(&self, g: &TestFunction, range: std::ops::Range<usize>) -> f64 {
        self.delta * self.a_hat[range].iter().map(|&a| g.value(a)).sum::<f64>()
    }
}

/// Computes `â` from a path with at least three observations.
pub fn estimate_trawl(path: &SampledPath, method: EstimatorMethod) -> Result<TrawlEstimate> {
    let values = &path.values;
    if values.len() < 3 {
        return Err(Error::PathTooShort {
            len: values.len(),
            min: 3,
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let n = values.len() - 1;
    let x_bar = values[..n].iter().sum::<f64>() / n as f64;
    let scale = -1.0 / (n as f64 * path.delta);
    let a_hat = match method {
        EstimatorMethod::Naive => naive(values, x_bar, scale),
        EstimatorMethod::Fft => fft(values, x_bar, scale),
    };
    Ok(TrawlEstimate {
        delta: path.delta,
        n,
        a_hat,
        x_bar,
    })
}

fn naive(x: &[f64], x_bar: f64, scale: f64) -> Vec<f64> {
    let n = x.len() - 1;
    let incr: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    (0..n)
        .map(|l| {
            let s: f64 = (l..n).map(|k| (x[k - l] - x_bar) * incr[k]).sum();
            scale * s
        })
        .collect()
}

thread_local! {
    static PLANNER: RefCell<RealFftPlanner<f64>> = RefCell::new(RealFftPlanner::new());
}

/// Cross-correlation `c_l = Σ_k X_{k-l} δ_k X` in the frequency domain; the
/// centering term telescopes to `X̄ (X_n - X_l)`.
fn fft(x: &[f64], x_bar: f64, scale: f64) -> Vec<f64> {
    let n = x.len() - 1;
    let size = (2 * n).next_power_of_two();
    let (forward, inverse) = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(size), p.plan_fft_inverse(size))
    });

    let mut lhs = vec![0.0; size];
    lhs[..n].copy_from_slice(&x[..n]);
    let mut rhs = vec![0.0; size];
    for (r, w) in rhs.iter_mut().zip(x.windows(2)) {
        *r = w[1] - w[0];
    }
    let mut lhs_hat = forward.make_output_vec();
    let mut rhs_hat = forward.make_output_vec();
    forward
        .process(&mut lhs, &mut lhs_hat)
        .expect("forward transform buffers sized by planner");
    forward
        .process(&mut rhs, &mut rhs_hat)
        .expect("forward transform buffers sized by planner");
    for (a, b) in lhs_hat.iter_mut().zip(&rhs_hat) {
        *a = a.conj() * b;
    }
    let last = lhs_hat.len() - 1;
    lhs_hat[0] = Complex::new(lhs_hat[0].re, 0.0);
    lhs_hat[last] = Complex::new(lhs_hat[last].re, 0.0);
    let mut corr = inverse.make_output_vec();
    inverse
        .process(&mut lhs_hat, &mut corr)
        .expect("inverse transform buffers sized by planner");

    let norm = 1.0 / size as f64;
    (0..n)
        .map(|l| scale * (corr[l] * norm - x_bar * (x[n] - x[l])))
        .collect()
}

/// `Ψ_t^n(g) = Δ Σ_{l=0}^{⌊t/Δ⌋-1} g(â(lΔ))`.
pub fn psi_n(est: &TrawlEstimate, g: &TestFunction, t: f64) -> Result<f64> {
    est.check_time(t)?;
    Ok(est.riemann(g, 0..est.index_of(t).min(est.n)))
}

/// `Λ_t^n(g) = Δ Σ_{l=⌊t/Δ⌋}^{n-1} g(â(lΔ))`.
pub fn lambda_n(est: &TrawlEstimate, g: &TestFunction, t: f64) -> Result<f64> {
    est.check_time(t)?;
    Ok(est.riemann(g, est.index_of(t).min(est.n)..est.n))
}

/// `Λ̄_t^n(g) = Δ Σ_{l=⌊t/Δ⌋}^{N-1} g(â(lΔ))`, the tail functional cut at
/// the window `N`.
pub fn lambda_bar_n(est: &TrawlEstimate, g: &TestFunction, t: f64, window: usize) -> Result<f64> {
    est.check_time(t)?;
    let start = est.index_of(t);
    if window > est.n || start >= window {
        return Err(Error::EmptyWindow {
            window,
            start,
            n: est.n,
        });
    }
    Ok(est.riemann(g, start..window))
}

/// Admissible range for the window exponent `κ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaInterval {
    pub lower: f64,
    pub upper: f64,
}

impl KappaInterval {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, kappa: f64) -> bool {
        kappa > self.lower && kappa < self.upper
    }
}

/// `1/ϖ + (ϖ-1)/(2ϖ((2+p)α - 1)) < κ < (1 + 1/ϖ)/2`, for `Δ ~ n^{-1/ϖ}`, trawl
/// tail exponent `α` (infinite for light tails) and `g ∈ 𝔠²_{p,q}`.
pub fn admissible_kappa(varpi: f64, alpha: f64, p: f64) -> Result<KappaInterval> {
    if !(varpi > 1.0 && varpi < 3.0) {
        return Err(Error::invalid("varpi", format!("must lie in (1, 3), got {varpi}")));
    }
    if !(alpha > 1.0) {
        return Err(Error::invalid("alpha", format!("must be > 1, got {alpha}")));
    }
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::invalid("p", format!("must be ≥ 0, got {p}")));
    }
    let memory = if alpha.is_infinite() {
        0.0
    } else {
        (varpi - 1.0) / (2.0 * varpi * ((2.0 + p) * alpha - 1.0))
    };
    let lower = 1.0 / varpi + memory;
    let upper = 0.5 * (1.0 + 1.0 / varpi);
    if lower >= upper {
        return Err(Error::EmptyKappaInterval { lower, upper });
    }
    Ok(KappaInterval { lower, upper })
}

/// `N = clamp(round(θ nᵏ), 1, n)`.
pub fn window_size(n: usize, theta: f64, kappa: f64) -> usize {
    let raw = (theta * (n as f64).powf(kappa)).round();
    (raw.max(1.0) as usize).min(n)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowChoice {
    pub window: usize,
    pub kappa: f64,
    pub interval: KappaInterval,
}

/// Picks `N ~ θ nᵏ`; `kappa = None` takes the midpoint of the admissible
/// interval.
pub fn choose_window(n: usize, varpi: f64, theta: f64, kappa: Option<f64>, alpha: f64, p: f64) -> Result<WindowChoice> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::invalid("theta", format!("must be > 0, got {theta}")));
    }
    let interval = admissible_kappa(varpi, alpha, p)?;
    let kappa = kappa.unwrap_or_else(|| interval.midpoint());
    if !interval.contains(kappa) {
        return Err(Error::KappaOutsideInterval {
            kappa,
            lower: interval.lower,
            upper: interval.upper,
        });
    }
    Ok(WindowChoice {
        window: window_size(n, theta, kappa),
        kappa,
        interval,
    })
}
