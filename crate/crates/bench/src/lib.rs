//! Shared inputs for the criterion benchmarks.

use trawl::{simulate, GridScheme, LevySeedSpec, SampledPath, SimulatorChoice, TrawlSpec};

/// Path lengths swept by the estimator and simulator benches.
pub const SIZES: [usize; 3] = [1 << 10, 1 << 12, 1 << 14];

pub fn exponential() -> TrawlSpec {
    TrawlSpec::exponential(1.0).expect("valid rate")
}

pub fn poisson() -> LevySeedSpec {
    LevySeedSpec::poisson(1.0).expect("valid rate")
}

/// Grid with `Δ = n^{-1/2}`.
pub fn scheme(n: usize) -> GridScheme {
    GridScheme::new(n, (n as f64).powf(-0.5), 7).expect("valid grid")
}

/// Exponential trawl with a Poisson seed on [`scheme`].
pub fn sample_path(n: usize) -> SampledPath {
    simulate(&exponential(), &poisson(), &scheme(n), SimulatorChoice::Auto).expect("simulation succeeds")
}
