use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Simulation and nonparametric inference for trawl processes.
///
/// Spec files are JSON. Flags override values read from a spec file, which
/// override built-in defaults.
#[derive(Debug, Parser)]
#[command(name = "trawl", version)]
pub struct Cli {
    /// Cap on worker threads for simulation and Monte Carlo.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a path and write it as `t,x` CSV.
    Simulate(SimulateArgs),
    /// Estimate â and the functionals Ψⁿ, Λⁿ, Λ̄ⁿ from a path file.
    Estimate(EstimateArgs),
    /// Run the T-dependence ratio test on a path file.
    Tdep(TdepArgs),
    /// Run a Monte Carlo experiment file.
    Mc(McArgs),
    /// Export Σ_a, σ²_a or limit-kernel grids as `s,r,value` CSV.
    Kernels(KernelArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Method {
    Naive,
    Fft,
}

impl From<Method> for trawl::EstimatorMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Naive => trawl::EstimatorMethod::Naive,
            Method::Fft => trawl::EstimatorMethod::Fft,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SimulatorArg {
    Auto,
    Slices,
    Points,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON spec with `trawl`, `seed`, `n`, `delta`, `master_seed`, and
    /// optionally `horizon` and `simulator`.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Re-run the command recorded in a provenance sidecar.
    #[arg(long, conflicts_with = "spec")]
    pub from_sidecar: Option<PathBuf>,
    /// Trawl function as inline JSON, e.g. '{"family":"exponential","rate":1}'.
    #[arg(long)]
    pub trawl: Option<String>,
    /// Lévy seed as inline JSON, e.g. '{"family":"poisson","rate":1}'.
    #[arg(long)]
    pub basis: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sample every slice (no truncated horizon).
    #[arg(long)]
    pub exact: bool,
    /// Relative area left out by the truncated horizon.
    #[arg(long)]
    pub truncation: Option<f64>,
    #[arg(long, value_enum)]
    pub simulator: Option<SimulatorArg>,
    /// Output CSV; a `.provenance.json` sidecar is written next to it.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Path file: `t,x` or a single column of values.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Grid step; required for single-column input, overrides the inferred
    /// step otherwise.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "fft")]
    pub method: Method,
    /// Directory for `a_hat.csv` and `functionals_<g>.csv`.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Test functions: `square` or `power:<p>`. Repeatable.
    #[arg(long = "g")]
    pub g: Vec<String>,
    /// Comma-separated times for the functionals; defaults to every lag.
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    /// Window constant θ in N = θ nᵏ.
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    /// Window exponent κ; defaults to the midpoint of the admissible range.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Sampling regime exponent ϖ (nΔ^ϖ bounded).
    #[arg(long, default_value_t = 2.0)]
    pub varpi: f64,
    /// Tail exponent α of the trawl function; `inf` for light tails.
    #[arg(long, default_value_t = f64::INFINITY)]
    pub alpha: f64,
    /// Significant digits in the CSV output.
    #[arg(long, default_value_t = 12)]
    pub digits: usize,
}

#[derive(Debug, Args)]
pub struct TdepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Hypothesized dependence horizon T.
    #[arg(long = "horizon", visible_alias = "T")]
    pub horizon: f64,
    /// Power exponent p.
    #[arg(long, default_value_t = trawl::inference::DEFAULT_POWER)]
    pub p: f64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Experiment file.
    #[arg(required_unless_present = "from_sidecar")]
    pub config: Option<PathBuf>,
    /// Re-run the experiment recorded in a provenance sidecar.
    #[arg(long, conflicts_with = "config")]
    pub from_sidecar: Option<PathBuf>,
    /// Directory for `<name>.json` and `<name>_raw.csv`.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Theorem tag: T1..T6 or C1.
    #[arg(long)]
    pub target: Option<String>,
    /// Replications per n.
    #[arg(long)]
    pub replications: Option<usize>,
    /// Comma-separated path lengths.
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    /// Regime exponent ϖ in Δ = c·n^(−1/ϖ).
    #[arg(long)]
    pub varpi: Option<f64>,
    /// Window constant θ.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Window exponent κ.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Functional time argument t.
    #[arg(long)]
    pub t: Option<f64>,
    /// T-dependence horizon (C1).
    #[arg(long = "horizon", visible_alias = "T")]
    pub horizon: Option<f64>,
    /// T-dependence power (C1).
    #[arg(long)]
    pub p: Option<f64>,
    /// Estimator for â.
    #[arg(long, value_enum)]
    pub method: Option<Method>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KernelKind {
    /// Σ_a(s, r).
    SigmaA,
    /// σ²_a(s) on the diagonal; `r` repeats `s`.
    SigmaASq,
    /// Limit kernel F^{(l,l')}(s, r).
    F,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// JSON spec with `trawl` and either `seed` or `k4`.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub trawl: Option<String>,
    /// Fourth cumulant 𝔎₄; overrides the value implied by the seed.
    #[arg(long)]
    pub k4: Option<f64>,
    #[arg(long, value_enum, default_value = "sigma-a")]
    pub kind: KernelKind,
    /// Comma-separated grid for s.
    #[arg(long, value_delimiter = ',', required = true)]
    pub s_grid: Vec<f64>,
    /// Comma-separated grid for r; defaults to the s grid.
    #[arg(long, value_delimiter = ',')]
    pub r_grid: Option<Vec<f64>>,
    /// Kernel indices `l,l'` for `--kind f`.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub index: Option<Vec<u8>>,
    #[arg(long, short)]
    pub out: PathBuf,
}
