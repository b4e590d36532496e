//! Asymptotic-variance kernels of the trawl-function estimator.
//!
//! For `s, r ≥ 0`:
//!
//! ```text
//! σ₁(s, r) = 𝔎₄ a(s ∨ r)
//! σ₂(s, r) = ∫_0^∞ a(u) a(|u - (s - r)|) sgn(u - (s - r)) du
//! σ₃(s, r) = ∫_0^∞ a(u + r) a(|s - u|) sgn(s - u) du
//! Σ_a(s, r) = σ₁ + σ₂(s, r) + σ₂(r, s) + σ₃(s, r) + σ₃(r, s)
//! ```
//!
//! The limit covariance of `√(nΔ)(Ψⁿ(g) - Ψ(g))` is
//! `∫_0^t ∫_0^s ġ(a(u)) Σ_a(u, r) ġ(a(r)) dr du`, and the tail functional
//! uses the same kernel over `[t, ∞) × [s, ∞)`.
//!
//! `sgn(0) = 0` throughout. Every integral is split at the kinks of its
//! integrand before adaptive quadrature.

use std::cell::{Cell, RefCell};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::TestFunction;
use crate::models::TrawlSpec;
use crate::quadrature::{integrate_split, Integral, Tolerance};

/// Asymptotic-variance kernel for one trawl function and seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvarKernel {
    pub trawl: TrawlSpec,
    /// `𝔎₄ = ∫ x⁴ ν(dx)`.
    pub k4: f64,
    pub tolerance: Tolerance,
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// Runs a fallible integrand through the quadrature, surfacing the first
/// inner failure.
fn try_integrate<F>(f: F, lo: f64, hi: f64, breaks: &[f64], tol: Tolerance) -> Result<Integral>
where
    F: Fn(f64) -> Result<f64>,
{
    let failure = RefCell::new(None);
    let out = integrate_split(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        lo,
        hi,
        breaks,
        tol,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    out
}

impl AvarKernel {
    pub fn new(trawl: TrawlSpec, k4: f64) -> Result<Self> {
        if !(k4 >= 0.0) || !k4.is_finite() {
            return Err(Error::invalid("k4", format!("fourth cumulant must be ≥ 0, got {k4}")));
        }
        Ok(AvarKernel {
            trawl,
            k4,
            tolerance: Tolerance::default(),
        })
    }

    pub fn with_tolerance(mut self, tolerance: Tolerance) -> Self {
        self.tolerance = tolerance;
        self
    }

    #[inline]
    fn a(&self, s: f64) -> f64 {
        self.trawl.a(s.max(0.0))
    }

    /// Breakpoints for integrands built from `a(±u + c)`: the zero of each
    /// argument plus the points where it crosses a kink of `a`.
    fn breaks(&self, zeros: &[f64]) -> Vec<f64> {
        let mut out = zeros.to_vec();
        for &k in self.trawl.kinks() {
            for &z in zeros {
                out.push(z + k);
                out.push(z - k);
            }
        }
        out
    }

    fn integral<F: Fn(f64) -> f64>(&self, f: F, lo: f64, hi: f64, zeros: &[f64]) -> Result<Integral> {
        integrate_split(f, lo, hi, &self.breaks(zeros), self.tolerance)
    }

    fn check_args(s: f64, r: f64) -> Result<()> {
        for v in [s, r] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::OutOfDomain {
                    what: "variance kernel",
                    value: v,
                });
            }
        }
        Ok(())
    }

    pub fn sigma1(&self, s: f64, r: f64) -> f64 {
        self.k4 * self.a(s.max(r))
    }

    pub fn sigma2(&self, s: f64, r: f64) -> Result<Integral> {
        Self::check_args(s, r)?;
        let d = s - r;
        self.integral(
            |u| self.a(u) * self.a((u - d).abs()) * sgn(u - d),
            0.0,
            f64::INFINITY,
            &[0.0, d],
        )
    }

    pub fn sigma3(&self, s: f64, r: f64) -> Result<Integral> {
        Self::check_args(s, r)?;
        self.integral(
            |u| self.a(u + r) * self.a((s - u).abs()) * sgn(s - u),
            0.0,
            f64::INFINITY,
            &[-r, s],
        )
    }

    /// `Σ_a(s, r)`, exactly symmetric in its arguments.
    pub fn sigma_a_matrix(&self, s: f64, r: f64) -> Result<Integral> {
        let (lo, hi) = if s <= r { (s, r) } else { (r, s) };
        Ok(Integral::exact(self.sigma1(lo, hi))
            + self.sigma2(lo, hi)?
            + self.sigma2(hi, lo)?
            + self.sigma3(lo, hi)?
            + self.sigma3(hi, lo)?)
    }

    /// `σ²_a(t) = 𝔎₄a(t) + 2∫_0^∞ a² + 2∫_0^t a(t-s)a(t+s)ds - 2∫_t^∞ a(s-t)a(t+s)ds`.
    pub fn sigma_a_sq(&self, t: f64) -> Result<Integral> {
        Self::check_args(t, t)?;
        let square = self.integral(|s| self.a(s).powi(2), 0.0, f64::INFINITY, &[0.0])?;
        let inner = self.integral(|s| self.a(t - s) * self.a(t + s), 0.0, t, &[t, -t])?;
        let outer = self.integral(|s| self.a(s - t) * self.a(t + s), t, f64::INFINITY, &[t, -t])?;
        Ok(Integral::exact(self.k4 * self.a(t)) + square.scale(2.0) + inner.scale(2.0) - outer.scale(2.0))
    }

    /// Breakpoints of `r ↦ Σ_a(u, r)`.
    fn ridge(&self, u: f64) -> Vec<f64> {
        let mut b = vec![u];
        for &k in self.trawl.kinks() {
            b.extend([u + k, u - k, k - u, k]);
        }
        b
    }

    /// Shared body of the two covariance integrals over
    /// `[lo_u, hi_u) × [lo_r, hi_r)`.
    fn covariance(&self, g: &TestFunction, lo_u: f64, hi_u: f64, lo_r: f64, hi_r: f64) -> Result<Integral> {
        let inner_error = Cell::new(0.0f64);
        let outer_breaks = {
            let mut b = self.ridge(lo_r);
            if hi_r.is_finite() {
                b.extend(self.ridge(hi_r));
            }
            b
        };
        let outer = try_integrate(
            |u| {
                let weight = g.derivative(self.a(u));
                if weight == 0.0 {
                    return Ok(0.0);
                }
                let inner = try_integrate(
                    |r| {
                        let w = g.derivative(self.a(r));
                        if w == 0.0 {
                            return Ok(0.0);
                        }
                        Ok(self.sigma_a_matrix(u, r)?.value * w)
                    },
                    lo_r,
                    hi_r,
                    &self.ridge(u),
                    self.tolerance,
                )?;
                inner_error.set(inner_error.get().max(inner.abs_error * weight.abs()));
                Ok(weight * inner.value)
            },
            lo_u,
            hi_u,
            &outer_breaks,
            self.tolerance,
        )?;
        let span = if hi_u.is_finite() {
            hi_u - lo_u
        } else {
            self.trawl.leb()
        };
        Ok(Integral {
            value: outer.value,
            abs_error: outer.abs_error + inner_error.get() * span,
        })
    }

    /// `𝔼(Z_t Z_s) = ∫_0^t ∫_0^s ġ(a(u)) Σ_a(u, r) ġ(a(r)) dr du`.
    pub fn limit_cov_psi(&self, g: &TestFunction, t: f64, s: f64) -> Result<Integral> {
        Self::check_args(t, s)?;
        if t == 0.0 || s == 0.0 {
            return Ok(Integral::ZERO);
        }
        self.covariance(g, 0.0, t, 0.0, s)
    }

    /// `𝔼(Z_t Z_s) = ∫_t^U ∫_s^U ġ(a(u)) Σ_a(u, r) ġ(a(r)) dr du` with
    /// `U = upper` (infinite when `None`). Needs `g`'s smoothness class.
    pub fn limit_cov_lambda(&self, g: &TestFunction, t: f64, s: f64, upper: Option<f64>) -> Result<Integral> {
        Self::check_args(t, s)?;
        let class = g
            .class()
            .ok_or_else(|| Error::invalid("g", "smoothness class metadata is required for the tail covariance"))?;
        if class.derivative_order() < 1.0 {
            return Err(Error::Divergent(format!(
                "ġ(x) = O(|x|^{}) near zero is not integrable along the trawl tail",
                class.derivative_order()
            )));
        }
        let mut hi = upper.unwrap_or(f64::INFINITY);
        if let Some(end) = self.trawl.support_end() {
            if g.derivative(0.0) == 0.0 {
                hi = hi.min(end);
            }
        }
        if t >= hi || s >= hi {
            return Ok(Integral::ZERO);
        }
        self.covariance(g, t, hi, s, hi)
    }

    /// Limit kernel `F^{(ℓ,ℓ')}(s, r)` of the martingale-difference
    /// covariance decomposition, `ℓ, ℓ' ∈ 1..=4`. For `ℓ > ℓ'` this is
    /// `F^{(ℓ',ℓ)}(r, s)`.
    pub fn appendix_f(&self, l: u8, lp: u8, s: f64, r: f64) -> Result<Integral> {
        Self::check_args(s, r)?;
        if !(1..=4).contains(&l) || !(1..=4).contains(&lp) {
            return Err(Error::invalid("l", format!("kernel index ({l}, {lp}) outside 1..=4")));
        }
        if l > lp {
            return self.appendix_f(lp, l, r, s);
        }
        let tr = &self.trawl;
        let a0 = self.a(0.0);
        let (m, big) = if s <= r { (s, r) } else { (r, s) };
        let band = tr.tail_integral(big - m) - tr.tail_integral(big);
        let inf = f64::INFINITY;
        let a_pos = self.a(pos(s - r));
        let v = match (l, lp) {
            (1, 1) => Integral::exact(self.k4 * self.a(big) + a0 * band),
            (2, 2) => Integral::exact(a0 * tr.tail_integral(big)),
            (3, 3) => {
                self.integral(|u| self.a(u) * self.a(u - big), big, inf, &[0.0, big])? + Integral::exact(a0 * band)
            }
            (4, 4) => {
                Integral::exact(a0 * tr.tail_integral(big))
                    - self.integral(|u| self.a(u - big) * self.a(u), big, inf, &[0.0, big])?
            }
            (1, 2) => self.integral(|u| self.a(u) * self.a(s + r - u), r, s + r, &[0.0, s + r])?,
            (1, 3) => {
                let far = self.integral(
                    |u| (self.a(u - s) - self.a(u)) * (a_pos - self.a(u - r)),
                    big,
                    inf,
                    &[0.0, s, r],
                )?;
                let near = self.integral(|u| self.a(u) * (self.a(pos(s - r - u)) - a_pos), 0.0, s, &[0.0, s - r])?;
                -(far + near)
            }
            (1, 4) => -self.integral(|u| (self.a(u - s) - self.a(u)) * self.a(u + r), s, inf, &[0.0, s, -r])?,
            (2, 3) => -self.integral(|u| self.a(u) * self.a(u + r), s, inf, &[0.0, -r])?,
            (2, 4) => {
                let head = (a0 - a_pos) * tr.tail_integral(s);
                let tail = self.integral(|u| self.a(u) * (a_pos - self.a(u - r)), big, inf, &[0.0, r])?;
                -(Integral::exact(head) + tail)
            }
            (3, 4) => Integral::ZERO,
            _ => unreachable!("indices validated above"),
        };
        Ok(v)
    }

    /// `|Σ_ℓ F^{(ℓ,ℓ)} + Σ_{ℓ<ℓ'} (F^{(ℓ,ℓ')}(s,r) + F^{(ℓ,ℓ')}(r,s)) - Σ_a(s,r)|`.
    pub fn avar_decomposition_check(&self, s: f64, r: f64) -> Result<f64> {
        let mut total = 0.0;
        for l in 1..=4u8 {
            total += self.appendix_f(l, l, s, r)?.value;
            for lp in l + 1..=4 {
                total += self.appendix_f(l, lp, s, r)?.value + self.appendix_f(l, lp, r, s)?.value;
            }
        }
        Ok((total - self.sigma_a_matrix(s, r)?.value).abs())
    }
}

/// `s,r,value` CSV for kernel grids.
pub fn grid_csv(rows: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("s,r,value\n");
    for (s, r, v) in rows {
        let _ = writeln!(out, "{s},{r},{v}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_kernel(k4: f64) -> AvarKernel {
        AvarKernel::new(TrawlSpec::exponential(1.0).unwrap(), k4).unwrap()
    }

    fn tri_kernel(k4: f64) -> AvarKernel {
        AvarKernel::new(TrawlSpec::compact_triangle(1.0).unwrap(), k4).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn sigma1_examples() {
        assert_eq!(exp_kernel(0.0).sigma1(0.3, 0.2), 0.0);
        assert_eq!(exp_kernel(1.0).sigma1(0.0, 0.0), 1.0);
        close(exp_kernel(1.0).sigma1(1.0, 2.0), (-2.0f64).exp(), 1e-15);
    }

    #[test]
    fn sigma2_examples() {
        let k = exp_kernel(1.0);
        close(k.sigma2(0.7, 0.7).unwrap().value, 0.5, 1e-9);
        close(k.sigma2(1.5, 0.5).unwrap().value, (-1.0f64).exp() * (0.5 - 1.0), 1e-9);
        close(tri_kernel(1.0).sigma2(2.0, 0.0).unwrap().value, 0.0, 1e-12);
    }

    #[test]
    fn sigma3_examples() {
        let k = exp_kernel(1.0);
        close(k.sigma3(0.0, 0.0).unwrap().value, -0.5, 1e-9);
        close(k.sigma3(1.0, 0.0).unwrap().value, (-1.0f64).exp() / 2.0, 1e-9);
        close(tri_kernel(1.0).sigma3(0.0, 2.0).unwrap().value, 0.0, 1e-12);
    }

    #[test]
    fn sigma_a_examples() {
        close(exp_kernel(1.0).sigma_a_matrix(0.0, 0.0).unwrap().value, 1.0, 1e-9);
        close(exp_kernel(0.0).sigma_a_matrix(0.0, 0.0).unwrap().value, 0.0, 1e-9);
        let k = exp_kernel(1.0);
        assert_eq!(
            k.sigma_a_matrix(0.3, 0.7).unwrap().value,
            k.sigma_a_matrix(0.7, 0.3).unwrap().value
        );
    }

    #[test]
    fn sigma_a_sq_examples() {
        close(exp_kernel(1.0).sigma_a_sq(0.0).unwrap().value, 1.0, 1e-9);
        close(tri_kernel(1.0).sigma_a_sq(2.0).unwrap().value, 2.0 / 3.0, 1e-9);
    }

    #[test]
    fn kernel_f_examples() {
        let k = exp_kernel(1.0);
        assert_eq!(k.appendix_f(3, 4, 0.2, 0.9).unwrap().value, 0.0);
        let (s, r): (f64, f64) = (0.4, 1.3);
        close(
            k.appendix_f(2, 3, s, r).unwrap().value,
            -(-r).exp() * (-2.0 * s).exp() / 2.0,
            1e-9,
        );
        close(k.appendix_f(2, 2, 1.0, 0.3).unwrap().value, (-1.0f64).exp(), 1e-15);
        assert!(k.appendix_f(0, 2, 0.1, 0.1).is_err());
        // reversed indices swap the arguments
        assert_eq!(
            k.appendix_f(4, 1, 0.2, 0.5).unwrap().value,
            k.appendix_f(1, 4, 0.5, 0.2).unwrap().value
        );
    }

    #[test]
    fn decomposition_examples() {
        assert!(exp_kernel(1.0).avar_decomposition_check(0.3, 0.7).unwrap() < 1e-6);
        assert!(exp_kernel(1.0).avar_decomposition_check(0.0, 0.0).unwrap() < 1e-8);
        assert!(tri_kernel(1.0).avar_decomposition_check(0.2, 0.4).unwrap() < 1e-6);
    }

    #[test]
    fn covariance_edge_cases() {
        let k = exp_kernel(1.0);
        let g = TestFunction::Square;
        assert_eq!(k.limit_cov_psi(&g, 0.0, 1.0).unwrap().value, 0.0);
        assert_eq!(k.limit_cov_psi(&g, 1.0, 0.0).unwrap().value, 0.0);
        let quartic = TestFunction::power(4.0).unwrap();
        assert_eq!(
            tri_kernel(1.0)
                .limit_cov_lambda(&quartic, 1.0, 1.0, None)
                .unwrap()
                .value,
            0.0
        );
        let rough = TestFunction::power(1.5).unwrap();
        assert!(matches!(
            k.limit_cov_lambda(&rough, 0.0, 0.0, None),
            Err(Error::Divergent(_))
        ));
        let unknown = TestFunction::custom("sin", f64::sin, f64::cos, |x| -x.sin(), None);
        assert!(k.limit_cov_lambda(&unknown, 0.0, 0.0, None).is_err());
    }

    #[test]
    fn negative_arguments_are_rejected() {
        assert!(exp_kernel(1.0).sigma2(-0.1, 0.0).is_err());
        assert!(exp_kernel(1.0).sigma_a_sq(f64::NAN).is_err());
        assert!(AvarKernel::new(TrawlSpec::exponential(1.0).unwrap(), -1.0).is_err());
    }

    #[test]
    fn halving_tolerance_stays_within_error_estimate() {
        let k = AvarKernel::new(TrawlSpec::power_law(2.5, 0.7).unwrap(), 1.0).unwrap();
        let fine = k.with_tolerance(k.tolerance.halved());
        for (s, r) in [(0.0, 0.0), (0.3, 1.1), (2.0, 0.4)] {
            let a = k.sigma_a_matrix(s, r).unwrap();
            let b = fine.sigma_a_matrix(s, r).unwrap();
            assert!((a.value - b.value).abs() <= a.abs_error.max(1e-15), "({s},{r})");
        }
    }

    #[test]
    fn grid_csv_header() {
        assert_eq!(grid_csv(&[(0.0, 0.5, 1.0)]), "s,r,value\n0,0.5,1\n");
    }
}
