//! Configuration, sweeps and reproduction suites behind the `mechproof` CLI.

pub mod config;
pub mod io;
pub mod repro;
pub mod sweep;

pub use config::{Axes, Point, RunConfig, Scalar, SearchSection};
pub use io::{parse_mechanism, SolveOutput};
pub use repro::{run_suite, Suite, SuiteOutput};
pub use sweep::{run_sweep, to_csv, write_csv, PointOutcome, SweepRow};

use crate::adversary::{self, DeviationReport};
use crate::model::Mechanism;
use crate::optimizer::{self, SolveReport};
use crate::Result;

/// Environment variable that sets the worker-pool size.
pub const THREADS_ENV: &str = "MECHPROOF_THREADS";

/// Sizes the global thread pool. Does nothing if the pool already exists.
pub fn init_thread_pool(threads: Option<usize>) {
    if let Some(n) = threads.filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Optimizes the single model point of `config`, escalating `n_max` if the
/// config asks for it.
pub fn solve_config(config: &RunConfig) -> Result<SolveReport> {
    let instance = config.instance()?;
    let search = config.search.to_search_config()?;
    if config.search.auto_escalate {
        optimizer::optimize_escalating(&instance, &search)
    } else {
        optimizer::optimize(&instance, &search)
    }
}

/// Deviation search for `mech` at the single model point of `config`.
pub fn verify_config(config: &RunConfig, mech: &Mechanism) -> Result<DeviationReport> {
    let instance = config.instance()?;
    mech.check_profile(&instance.profile)?;
    let options = config.search.to_search_config()?.engine_options();
    adversary::verify(&instance.profile, &instance.cost, mech, &options)
}
