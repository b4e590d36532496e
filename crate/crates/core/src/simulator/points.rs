//! Point-process simulator for Poisson bases.
//!
//! A Poisson basis with rate `λ_P` is a Poisson random measure of unit
//! atoms. An atom at `(s, y)` lies in `A_{t_k}` iff `s ≤ t_k ≤ s + a⁻¹(y)`,
//! so it increments a contiguous run of grid points. Only atoms in
//! `∪_k A_{t_k}` matter: those left of the origin under `y ≤ a(-s)`, and those
//! in `(t_{i-1}, t_i]` under `y ≤ a(t_i - s)`.

use rand::Rng;

use super::grid::{GridScheme, Provenance, SampledPath, SimulatorId};
use crate::error::{Error, Result};
use crate::models::{poisson_count, LevySeedSpec, TrawlSpec};
use crate::rng::{derive_key, substream};

const POINT_STREAM_TAG: u64 = 0x901_475;

/// An atom at abscissa `s = t_cell - offset` whose membership extends
/// `reach = a⁻¹(y)` to the right.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrawlPoint {
    pub cell: usize,
    pub offset: f64,
    pub reach: f64,
}

impl TrawlPoint {
    /// Grid indices `k ∈ [lo, hi]` whose trawl set contains the atom.
    pub fn index_range(&self, delta: f64, n: usize) -> Option<(usize, usize)> {
        if self.reach < self.offset || self.cell > n {
            return None;
        }
        let span = ((self.reach - self.offset) / delta).floor();
        let hi = (self.cell as f64 + span).min(n as f64) as usize;
        Some((self.cell, hi))
    }
}

/// Grid indices `k ∈ [⌈s/Δ⌉, ⌊(s + reach)/Δ⌋] ∩ [0, n]`.
pub fn point_index_range(s: f64, reach: f64, delta: f64, n: usize) -> Option<(usize, usize)> {
    let lo = (s / delta).ceil().max(0.0);
    let hi = ((s + reach) / delta).floor().min(n as f64);
    if hi < lo || hi < 0.0 {
        None
    } else {
        Some((lo as usize, hi as usize))
    }
}

/// Counts, for every grid point, the atoms whose trawl membership covers it.
pub fn accumulate_points(points: &[TrawlPoint], delta: f64, n: usize) -> Vec<f64> {
    let mut diff = vec![0i64; n + 2];
    for p in points {
        if let Some((lo, hi)) = p.index_range(delta, n) {
            diff[lo] += 1;
            diff[hi + 1] -= 1;
        }
    }
    let mut running = 0i64;
    diff[..=n]
        .iter()
        .map(|d| {
            running += d;
            running as f64
        })
        .collect()
}

fn draw_points<R: Rng>(trawl: &TrawlSpec, rate: f64, delta: f64, n: usize, rng: &mut R) -> Vec<TrawlPoint> {
    let leb = trawl.leb();
    let cell_area = (leb - trawl.tail_integral(delta)).max(0.0);
    let left = poisson_count(rate * leb, rng) as usize;
    let inner = poisson_count(rate * n as f64 * cell_area, rng) as usize;
    let mut points = Vec::with_capacity(left + inner);
    for _ in 0..left {
        // abscissa -u with density a(u)/A(0) on [0, ∞)
        let v: f64 = 1.0 - rng.gen::<f64>();
        let u = trawl.inverse_tail_integral(v * leb);
        points.push(height_draw(trawl, 0, u, rng));
    }
    for _ in 0..inner {
        let cell = rng.gen_range(1..=n);
        // offset with density a(v)/B(0) on [0, Δ)
        let w: f64 = rng.gen();
        let v = trawl.inverse_tail_integral(leb - w * cell_area).min(delta);
        points.push(height_draw(trawl, cell, v, rng));
    }
    points
}

fn height_draw<R: Rng>(trawl: &TrawlSpec, cell: usize, offset: f64, rng: &mut R) -> TrawlPoint {
    let top = trawl.a(offset);
    let y = top * (1.0 - rng.gen::<f64>());
    let reach = if y > 0.0 { trawl.inverse_a_unchecked(y) } else { offset };
    TrawlPoint {
        cell,
        offset,
        reach: reach.max(offset),
    }
}

/// Draws `X_{t_0..t_n}` for a Poisson seed by placing the atoms directly.
pub fn simulate_points(trawl: &TrawlSpec, seed: &LevySeedSpec, scheme: &GridScheme) -> Result<SampledPath> {
    scheme.validate()?;
    let LevySeedSpec::Poisson { rate } = *seed else {
        return Err(Error::UnsupportedSeed { simulator: "point" });
    };
    let mut rng = substream(derive_key(scheme.master_seed, &[POINT_STREAM_TAG]), 0);
    let points = draw_points(trawl, rate, scheme.delta, scheme.n, &mut rng);
    let values = accumulate_points(&points, scheme.delta, scheme.n);
    Ok(SampledPath {
        delta: scheme.delta,
        values,
        provenance: Provenance {
            simulator: SimulatorId::Points,
            scheme: Some(*scheme),
            horizon_slices: None,
        },
        trawl: Some(*trawl),
        seed: Some(*seed),
    })
}
