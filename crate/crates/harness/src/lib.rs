//! Desk-scale experiments on top of `risloc`: PEB maps, EFI sweeps, the
//! spatial-versus-power gain study, focusing evaluation and a battery of
//! structural checks, plus the CSV/JSON writers behind the `risloc` CLI.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod scenarios;
pub mod seeds;
pub mod snr;

pub use config::{Experiment, ExperimentConfig, Scale};
pub use error::{HarnessError, Result};
pub use experiments::run;
pub use snr::normalize_snr;
