//! Simulation and nonparametric inference for trawl processes
//! `X_t = L(A_t)`, with the asymptotic-variance theory of the trawl-function
//! estimator evaluated by quadrature.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod harness;
pub mod inference;
pub mod limit_theory;
pub mod models;
pub mod quadrature;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};
pub use estimators::{
    admissible_kappa, choose_window, estimate_trawl, lambda_bar_n, lambda_n, psi_n, EstimatorMethod, KappaInterval,
    SmoothnessClass, TestFunction, TrawlEstimate, WindowChoice,
};
pub use harness::{run_experiment, ExperimentConfig, McResult, Sidecar, Target};
pub use inference::{tau_test, tdep_characterization, TestReport};
pub use limit_theory::AvarKernel;
pub use models::{Cumulants, LevySeedSpec, TrawlSpec};
pub use quadrature::{Integral, Tolerance};
pub use simulator::{simulate, GridScheme, Horizon, SampledPath, SimulatorChoice};
