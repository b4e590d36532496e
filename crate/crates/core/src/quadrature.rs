//! Globally adaptive 21-point Gauss–Kronrod quadrature.
//!
//! Half-infinite ranges are mapped onto `[0, 1)` with `u = c + v/(1 - v)`.
//! Integrands with kinks should be split at the kinks with
//! [`integrate_split`] so every panel sees a smooth function.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Requested accuracy: converged once `error ≤ max(abs, rel·|value|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_subdivisions: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-9,
            rel: 1e-7,
            max_subdivisions: 500,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            ..Tolerance::default()
        }
    }

    pub fn halved(self) -> Self {
        Tolerance {
            abs: self.abs / 2.0,
            rel: self.rel / 2.0,
            ..self
        }
    }
}

/// A quadrature value with its error estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
}

impl Integral {
    pub const ZERO: Integral = Integral {
        value: 0.0,
        abs_error: 0.0,
    };

    pub fn exact(value: f64) -> Self {
        Integral { value, abs_error: 0.0 }
    }

    pub fn scale(self, c: f64) -> Self {
        Integral {
            value: c * self.value,
            abs_error: c.abs() * self.abs_error,
        }
    }
}

impl std::ops::Add for Integral {
    type Output = Integral;

    fn add(self, rhs: Integral) -> Integral {
        Integral {
            value: self.value + rhs.value,
            abs_error: self.abs_error + rhs.abs_error,
        }
    }
}

impl std::ops::Sub for Integral {
    type Output = Integral;

    fn sub(self, rhs: Integral) -> Integral {
        Integral {
            value: self.value - rhs.value,
            abs_error: self.abs_error + rhs.abs_error,
        }
    }
}

impl std::ops::Neg for Integral {
    type Output = Integral;

    fn neg(self) -> Integral {
        Integral {
            value: -self.value,
            abs_error: self.abs_error,
        }
    }
}

impl std::iter::Sum for Integral {
    fn sum<I: Iterator<Item = Integral>>(iter: I) -> Integral {
        iter.fold(Integral::ZERO, |a, b| a + b)
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_600_525_215,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// 10-point Gauss weights for XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut fv = [0.0; 20];
    for (j, &x) in XGK[..10].iter().enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv[2 * j] - mean).abs() + (fv[2 * j + 1] - mean).abs());
    }
    let value = kronrod * half;
    let asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * value.abs();
    Panel {
        lo,
        hi,
        value,
        error: error.max(floor),
    }
}

fn adapt<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: Tolerance) -> Result<Integral> {
    let first = gauss_kronrod(f, lo, hi);
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut splits = 0;
    while error > tol.abs.max(tol.rel * value.abs()) {
        if splits >= tol.max_subdivisions {
            return Err(Error::Quadrature {
                lower: lo,
                upper: hi,
                error,
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) {
            // Panel can no longer be bisected in floating point.
            return Err(Error::Quadrature {
                lower: lo,
                upper: hi,
                error,
            });
        }
        let left = gauss_kronrod(f, worst.lo, mid);
        let right = gauss_kronrod(f, mid, worst.hi);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        splits += 1;
        if splits % 64 == 0 {
            // Re-sum to shed accumulated cancellation in the running totals.
            value = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
        }
    }
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    if !value.is_finite() {
        return Err(Error::Quadrature {
            lower: lo,
            upper: hi,
            error: f64::INFINITY,
        });
    }
    Ok(Integral {
        value,
        abs_error: error,
    })
}

/// `∫_lo^hi f(u) du`; `hi` may be `+∞`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<Integral> {
    if !(hi > lo) {
        return Ok(Integral::ZERO);
    }
    if hi.is_infinite() {
        let g = |v: f64| {
            let w = 1.0 - v;
            f(lo + v / w) / (w * w)
        };
        adapt(&g, 0.0, 1.0, tol)
    } else {
        adapt(&f, lo, hi, tol)
    }
}

/// Like [`integrate`], but splits the range at every breakpoint inside it.
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, breaks: &[f64], tol: Tolerance) -> Result<Integral> {
    if !(hi > lo) {
        return Ok(Integral::ZERO);
    }
    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&b| b.is_finite() && b > lo && b < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = Integral::ZERO;
    let mut start = lo;
    for end in cuts.into_iter().chain(std::iter::once(hi)) {
        total = total + integrate(&f, start, end, tol)?;
        start = end;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((r.value - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn infinite_tail() {
        let r = integrate(|x| (-x).exp(), 1.0, f64::INFINITY, Tolerance::new(1e-13, 1e-12)).unwrap();
        assert!((r.value - (-1.0f64).exp()).abs() < 1e-12, "{r:?}");
        let p = integrate(|x| (1.0 + x).powi(-4), 0.0, f64::INFINITY, Tolerance::new(1e-13, 1e-12)).unwrap();
        assert!((p.value - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn kinks_are_handled_by_splitting() {
        let f = |x: f64| (x - 0.3).abs();
        let r = integrate_split(f, 0.0, 1.0, &[0.3, 7.0, -1.0], Tolerance::new(1e-14, 1e-14)).unwrap();
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-14);
    }

    #[test]
    fn empty_range_is_zero() {
        assert_eq!(
            integrate(|x| x, 1.0, 1.0, Tolerance::default()).unwrap(),
            Integral::ZERO
        );
        assert_eq!(
            integrate(|x| x, 2.0, 1.0, Tolerance::default()).unwrap(),
            Integral::ZERO
        );
    }

    #[test]
    fn non_integrable_singularity_fails() {
        let r = integrate(|x| 1.0 / x, 0.0, 1.0, Tolerance::default());
        assert!(r.is_err());
    }

    #[test]
    fn error_estimate_bounds_true_error() {
        let r = integrate(|x| (10.0 * x).sin() * (-x).exp(), 0.0, 5.0, Tolerance::new(1e-6, 0.0)).unwrap();
        let exact = {
            // ∫ e^{-x} sin(10x) = [-e^{-x}(sin 10x + 10 cos 10x)/101]
            let g = |x: f64| -(-x).exp() * ((10.0 * x).sin() + 10.0 * (10.0 * x).cos()) / 101.0;
            g(5.0) - g(0.0)
        };
        assert!((r.value - exact).abs() <= r.abs_error);
    }
}
