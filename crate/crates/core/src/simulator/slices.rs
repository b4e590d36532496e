//! Slice-partition simulator.
//!
//! Row `i = 0` holds the part of the trawl set left of the origin; row
//! `i ≥ 1` holds abscissae in `(t_{i-1}, t_i]`. Column `j` is the band
//! `a(t_{j+1} - s) < y ≤ a(t_j - s)`. With `B(m) = A(mΔ) - A((m+1)Δ)`, the
//! slice `(0, j)` has area `B(j)` and `(i, j)` has area `B(j-i) - B(j-i+1)`.
//!
//! Truncated mode samples the first `J` columns of each row individually and
//! lumps the remaining mass of the row into one extra value that counts
//! toward `X_{t_k}` for `k ∈ [i, i+J]`. A grid point then misses at most
//! `A((J+1)Δ)` of its trawl set, so its mean is off by at most `κ₁·A(JΔ)` and
//! its variance by at most `κ₂·A(JΔ)`. Points with `k ≤ J` are exact.

use rayon::prelude::*;

use super::grid::{GridScheme, Horizon, Provenance, SampledPath, SimulatorId};
use crate::error::{Error, Result};
use crate::models::{LevySeedSpec, TrawlSpec};
use crate::rng::{derive_key, substream};

const ROWS_PER_CHUNK: usize = 128;
const SLICE_STREAM_TAG: u64 = 0x5_1ce5;

fn band(trawl: &TrawlSpec, delta: f64, m: usize) -> f64 {
    (trawl.tail_integral(m as f64 * delta) - trawl.tail_integral((m + 1) as f64 * delta)).max(0.0)
}

/// Area of slice `(i, j)`; zero when `j < i`.
pub fn slice_area(trawl: &TrawlSpec, delta: f64, i: usize, j: usize) -> f64 {
    if j < i {
        0.0
    } else if i == 0 {
        band(trawl, delta, j)
    } else {
        (band(trawl, delta, j - i) - band(trawl, delta, j - i + 1)).max(0.0)
    }
}

/// Area of row `i` lying in columns `j ≥ n`, i.e. the part of the trawl
/// sets that stays inside every `A_{t_k}` with `i ≤ k ≤ n`.
pub fn residual_area(trawl: &TrawlSpec, delta: f64, n: usize, i: usize) -> f64 {
    if i == 0 {
        trawl.tail_integral(n as f64 * delta)
    } else if i > n {
        0.0
    } else {
        band(trawl, delta, n - i)
    }
}

/// Number of individually sampled columns per row, capped at `n`.
pub fn resolve_horizon(trawl: &TrawlSpec, delta: f64, horizon: Horizon, n: usize) -> usize {
    match horizon {
        Horizon::Exact => n,
        Horizon::Truncated { tolerance } => {
            let target = tolerance * trawl.leb();
            let fits = |j: usize| trawl.tail_integral(j as f64 * delta) <= target;
            if fits(1) {
                return 1;
            }
            let mut hi = 2usize;
            while !fits(hi) {
                if hi >= n {
                    return n;
                }
                hi = hi.saturating_mul(2);
            }
            let mut lo = hi / 2;
            // invariant: !fits(lo), fits(hi)
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if fits(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi.min(n)
        }
    }
}

/// Precomputed slice areas for one grid.
struct SliceTable {
    /// `B(j)` for row 0, `j = 0..=n`.
    first_row: Vec<f64>,
    /// `B(m) - B(m+1)` for rows `i ≥ 1`, `m = j - i = 0..J`.
    interior: Vec<f64>,
    /// `B(m)`, `m = 0..=n`: lump for rows `i ≥ 1`.
    bands: Vec<f64>,
    tail: Vec<f64>,
}

impl SliceTable {
    fn new(trawl: &TrawlSpec, delta: f64, n: usize, horizon: usize) -> Self {
        let tail: Vec<f64> = (0..=n + 1).map(|m| trawl.tail_integral(m as f64 * delta)).collect();
        let bands: Vec<f64> = (0..=n).map(|m| (tail[m] - tail[m + 1]).max(0.0)).collect();
        let interior = (0..horizon.min(n))
            .map(|m| (bands[m] - bands[m + 1]).max(0.0))
            .collect();
        SliceTable {
            first_row: bands.clone(),
            interior,
            bands,
            tail,
        }
    }
}

/// Draws `X_{t_0..t_n}` from the slice partition.
pub fn simulate_slices(trawl: &TrawlSpec, seed: &LevySeedSpec, scheme: &GridScheme) -> Result<SampledPath> {
    scheme.validate()?;
    let n = scheme.n;
    if scheme.horizon == Horizon::Exact && n > scheme.exact_cap {
        return Err(Error::ResourceGuard {
            n,
            cap: scheme.exact_cap,
        });
    }
    let horizon = resolve_horizon(trawl, scheme.delta, scheme.horizon, n);
    let table = SliceTable::new(trawl, scheme.delta, n, horizon);
    let key = derive_key(scheme.master_seed, &[SLICE_STREAM_TAG]);

    let chunks: Vec<(usize, Vec<f64>)> = (0..=n)
        .step_by(ROWS_PER_CHUNK)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|start| {
            let end = (start + ROWS_PER_CHUNK).min(n + 1);
            let reach = ((end - 1) + horizon).min(n) + 1;
            let mut diff = vec![0.0; reach - start + 1];
            for row in start..end {
                sample_row(&table, seed, key, row, n, horizon, &mut diff, start);
            }
            (start, diff)
        })
        .collect();

    let mut diff = vec![0.0; n + 2];
    for (offset, local) in chunks {
        for (d, v) in diff[offset..].iter_mut().zip(local) {
            *d += v;
        }
    }
    let mut values = Vec::with_capacity(n + 1);
    let mut running = 0.0;
    for d in &diff[..=n] {
        running += d;
        values.push(running);
    }

    Ok(SampledPath {
        delta: scheme.delta,
        values,
        provenance: Provenance {
            simulator: SimulatorId::Slices,
            scheme: Some(*scheme),
            horizon_slices: Some(horizon),
        },
        trawl: Some(*trawl),
        seed: Some(*seed),
    })
}

/// Pieces of row `row` as `(last, area)`: each piece lies in `A_{t_k}` for
/// `k ∈ [row, last]`. The final piece is the lump.
fn row_pieces(table: &SliceTable, row: usize, n: usize, horizon: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
    // First column that is lumped rather than sampled on its own.
    let lumped = (row + horizon).min(n);
    let sampled = (row..lumped).map(move |col| {
        let area = if row == 0 {
            table.first_row[col]
        } else {
            table.interior[col - row]
        };
        (col, area)
    });
    let lump_area = if row == 0 {
        table.tail[lumped]
    } else {
        table.bands[lumped - row]
    };
    sampled.chain(std::iter::once((lumped, lump_area)))
}

#[allow(clippy::too_many_arguments)]
fn sample_row(
    table: &SliceTable,
    seed: &LevySeedSpec,
    key: u64,
    row: usize,
    n: usize,
    horizon: usize,
    diff: &mut [f64],
    offset: usize,
) {
    let mut rng = substream(key, row as u64);
    let mut row_total = 0.0;
    for (last, area) in row_pieces(table, row, n, horizon) {
        let v = super::draw(seed, area, &mut rng);
        row_total += v;
        diff[last + 1 - offset] -= v;
    }
    diff[row - offset] += row_total;
}

/// Total slice area credited to each `X_{t_k}` under the sampling policy of
/// `scheme`. Equals `Leb(A)` in exact mode.
pub fn covered_areas(trawl: &TrawlSpec, scheme: &GridScheme) -> Result<Vec<f64>> {
    scheme.validate()?;
    let n = scheme.n;
    let horizon = resolve_horizon(trawl, scheme.delta, scheme.horizon, n);
    let table = SliceTable::new(trawl, scheme.delta, n, horizon);
    let mut covered = vec![0.0; n + 1];
    for row in 0..=n {
        for (last, area) in row_pieces(&table, row, n, horizon) {
            for c in &mut covered[row..=last] {
                *c += area;
            }
        }
    }
    Ok(covered)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp1() -> TrawlSpec {
        TrawlSpec::exponential(1.0).unwrap()
    }

    #[test]
    fn slice_area_examples() {
        let e = exp1();
        let b0 = 1.0 - (-0.5f64).exp();
        assert!((slice_area(&e, 0.5, 0, 0) - b0).abs() < 1e-15);
        let b1 = (-0.5f64).exp() - (-1.0f64).exp();
        assert!((slice_area(&e, 0.5, 1, 1) - (b0 - b1)).abs() < 1e-15);
        assert!((slice_area(&e, 0.5, 1, 1) - 0.154_818_1).abs() < 1e-7);
        let tri = TrawlSpec::compact_triangle(1.0).unwrap();
        assert_eq!(slice_area(&tri, 0.5, 1, 6), 0.0);
    }

    #[test]
    fn residual_area_examples() {
        let e = exp1();
        assert!((residual_area(&e, 0.5, 4, 0) - (-2.0f64).exp()).abs() < 1e-15);
        assert!((residual_area(&e, 0.5, 4, 4) - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
        let tri = TrawlSpec::compact_triangle(1.0).unwrap();
        assert_eq!(residual_area(&tri, 1.0, 3, 0), 0.0);
    }

    #[test]
    fn horizon_is_smallest_admissible() {
        let e = exp1();
        let j = resolve_horizon(&e, 0.1, Horizon::Truncated { tolerance: 1e-8 }, 10_000);
        assert!(e.tail_integral(j as f64 * 0.1) <= 1e-8);
        assert!(e.tail_integral((j - 1) as f64 * 0.1) > 1e-8);
        assert_eq!(resolve_horizon(&e, 0.1, Horizon::Exact, 77), 77);
        // Horizon longer than the path collapses to exact.
        assert_eq!(resolve_horizon(&e, 0.1, Horizon::Truncated { tolerance: 1e-8 }, 50), 50);
        let tri = TrawlSpec::compact_triangle(1.0).unwrap();
        assert_eq!(
            resolve_horizon(&tri, 0.25, Horizon::Truncated { tolerance: 1e-8 }, 100),
            4
        );
    }

    #[test]
    fn exact_mode_respects_cap() {
        let scheme = GridScheme::new(5000, 0.01, 1).unwrap().exact();
        let r = simulate_slices(&exp1(), &LevySeedSpec::poisson(1.0).unwrap(), &scheme);
        assert!(matches!(r, Err(Error::ResourceGuard { n: 5000, .. })));
    }

    #[test]
    fn same_seed_same_path() {
        let seed = LevySeedSpec::gamma(2.0, 0.7).unwrap();
        let scheme = GridScheme::new(700, 0.05, 99).unwrap();
        let a = simulate_slices(&exp1(), &seed, &scheme).unwrap();
        let b = simulate_slices(&exp1(), &seed, &scheme).unwrap();
        assert_eq!(a.values, b.values);
        let c = simulate_slices(&exp1(), &seed, &scheme.with_seed(100)).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn poisson_paths_are_integer_valued() {
        let scheme = GridScheme::new(300, 0.1, 3).unwrap().exact();
        let p = simulate_slices(&exp1(), &LevySeedSpec::poisson(2.0).unwrap(), &scheme).unwrap();
        assert_eq!(p.values.len(), 301);
        assert!(p.values.iter().all(|v| *v >= 0.0 && v.fract() == 0.0));
    }
}
