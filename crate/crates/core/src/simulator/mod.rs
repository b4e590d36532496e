//! Exact grid simulation of trawl processes.
//!
//! Two independent routes produce `(X_{iΔ})_{i=0..n}`:
//!
//! * [`simulate_slices`] partitions the union of trawl sets into slices
//!   indexed by `(row i, column j)`, where slice `(i, j)` lies in `A_{t_k}`
//!   exactly when `i ≤ k ≤ j`, and draws one independent seed value per
//!   slice. Works for every seed family.
//! * [`simulate_points`] draws the atoms of a Poisson basis over the
//!   relevant region and credits each atom to the contiguous range of grid
//!   points whose trawl set contains it.

mod grid;
mod io;
mod points;
mod slices;

pub use grid::{GridScheme, Horizon, Provenance, SampledPath, SimulatorId, DEFAULT_EXACT_CAP, DEFAULT_TRUNCATION};
pub use io::{ingest_csv, parse_series, path_csv, write_csv};
pub use points::{accumulate_points, point_index_range, simulate_points, TrawlPoint};
pub use slices::{covered_areas, residual_area, resolve_horizon, simulate_slices, slice_area};

use rand::Rng;

use crate::error::Result;
use crate::models::{LevySeedSpec, TrawlSpec};

/// Which simulator a workflow should use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulatorChoice {
    /// Points for Poisson seeds, slices otherwise.
    #[default]
    Auto,
    Slices,
    Points,
}

/// Dispatches to the simulator named by `choice`.
pub fn simulate(
    trawl: &TrawlSpec,
    seed: &LevySeedSpec,
    scheme: &GridScheme,
    choice: SimulatorChoice,
) -> Result<SampledPath> {
    match choice {
        SimulatorChoice::Slices => simulate_slices(trawl, seed, scheme),
        SimulatorChoice::Points => simulate_points(trawl, seed, scheme),
        SimulatorChoice::Auto => match seed {
            LevySeedSpec::Poisson { .. } => simulate_points(trawl, seed, scheme),
            _ => simulate_slices(trawl, seed, scheme),
        },
    }
}

/// One draw of the seed law over `area`; re-exported for the simulators.
#[inline]
pub(crate) fn draw<R: Rng + ?Sized>(seed: &LevySeedSpec, area: f64, rng: &mut R) -> f64 {
    seed.sample_unchecked(area, rng)
}
