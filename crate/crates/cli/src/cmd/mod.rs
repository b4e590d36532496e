pub mod estimate;
pub mod kernels;
pub mod mc;
pub mod simulate;
pub mod tdep;

use trawl::simulator::ingest_csv;
use trawl::SampledPath;

use crate::args::InputArgs;
use crate::CliResult;

pub(crate) fn load_path(input: &InputArgs) -> CliResult<SampledPath> {
    Ok(ingest_csv(&input.input, input.delta)?)
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub(crate) fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| crate::CliError::Usage(format!("--threads: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}
