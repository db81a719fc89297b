//! File formats, run configuration, reports and the `ontd` command line for
//! the `ontd-core` decomposition.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod model_io;
pub mod report;

pub use ontd_core as core;

use ontd_core::pipeline::{assemble, solve_mode};
use ontd_core::{DecomposeConfig, DecomposeReport, DenseTensor};

/// [`ontd_core::decompose`], optionally solving the modes on scoped threads.
/// Every mode draws from its own random stream, so both paths give the same
/// report.
pub fn decompose_modes(a: &DenseTensor, cfg: &DecomposeConfig, parallel: bool) -> ontd_core::Result<DecomposeReport> {
    if !parallel {
        return ontd_core::decompose(a, cfg);
    }
    cfg.validate(a.dims())?;
    if !a.is_nonnegative() {
        return Err(ontd_core::Error::InvalidArgument("input tensor has negative entries".into()));
    }
    let modes = std::thread::scope(|s| {
        let handles: Vec<_> = (0..a.order())
            .map(|n| (!cfg.is_identity(n)).then(|| s.spawn(move || solve_mode(a, n, cfg))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.map(|h| h.join().expect("mode solver panicked")).transpose())
            .collect::<ontd_core::Result<Vec<_>>>()
    })?;
    assemble(a, cfg, modes)
}
