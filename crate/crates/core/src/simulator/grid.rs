use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{LevySeedSpec, TrawlSpec};

/// Default relative tail mass `A(JΔ)/A(0)` left out by truncated slicing.
pub const DEFAULT_TRUNCATION: f64 = 1e-8;

/// Default largest `n` for exact (untruncated) slice simulation.
pub const DEFAULT_EXACT_CAP: usize = 4096;

/// How many forward slices each row carries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Horizon {
    /// Every slice of every row, `O(n²)` draws.
    Exact,
    /// The smallest `J ≥ 1` with `A(JΔ)/A(0) ≤ tolerance`.
    Truncated { tolerance: f64 },
}

/// Equidistant sampling grid `t_i = iΔ`, `i = 0..=n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridScheme {
    pub n: usize,
    pub delta: f64,
    pub horizon: Horizon,
    pub master_seed: u64,
    #[serde(default = "default_cap")]
    pub exact_cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_EXACT_CAP
}

impl GridScheme {
    /// Truncated-horizon scheme at [`DEFAULT_TRUNCATION`].
    pub fn new(n: usize, delta: f64, master_seed: u64) -> Result<Self> {
        let scheme = GridScheme {
            n,
            delta,
            horizon: Horizon::Truncated {
                tolerance: DEFAULT_TRUNCATION,
            },
            master_seed,
            exact_cap: DEFAULT_EXACT_CAP,
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn exact(mut self) -> Self {
        self.horizon = Horizon::Exact;
        self
    }

    pub fn with_horizon(mut self, horizon: Horizon) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_exact_cap(mut self, cap: usize) -> Self {
        self.exact_cap = cap;
        self
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::PathTooShort {
                len: self.n + 1,
                min: 3,
            });
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::invalid(
                "delta",
                format!("must be finite and > 0, got {}", self.delta),
            ));
        }
        if let Horizon::Truncated { tolerance } = self.horizon {
            if !(tolerance > 0.0 && tolerance < 1.0) {
                return Err(Error::invalid(
                    "tolerance",
                    format!("must lie in (0, 1), got {tolerance}"),
                ));
            }
        }
        Ok(())
    }

    /// `nΔ`, the length of the observation window.
    pub fn span(&self) -> f64 {
        self.n as f64 * self.delta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulatorId {
    Slices,
    Points,
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub simulator: SimulatorId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<GridScheme>,
    /// Forward-slice count actually used by the slice simulator.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon_slices: Option<usize>,
}

impl Provenance {
    pub fn external() -> Self {
        Provenance {
            simulator: SimulatorId::External,
            scheme: None,
            horizon_slices: None,
        }
    }
}

/// Observations `X_0, X_Δ, …, X_{nΔ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledPath {
    pub delta: f64,
    pub values: Vec<f64>,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trawl: Option<TrawlSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<LevySeedSpec>,
}

impl SampledPath {
    /// Wraps externally supplied observations.
    pub fn from_values(delta: f64, values: Vec<f64>) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::invalid("delta", format!("must be finite and > 0, got {delta}")));
        }
        if values.len() < 3 {
            return Err(Error::PathTooShort {
                len: values.len(),
                min: 3,
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(SampledPath {
            delta,
            values,
            provenance: Provenance::external(),
            trawl: None,
            seed: None,
        })
    }

    /// `n`, one less than the number of observations.
    pub fn n(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| i as f64 * self.delta)
    }
}
