//! Multi-seed experiments, dropout-rate sweeps and regularizer comparisons,
//! driven by TOML configs and written out as CSV/JSON artifacts.

pub mod config;
pub mod ensemble;
mod io;
mod run;
pub mod svg;

pub use config::*;
pub use ensemble::{final_mean, final_rise, smooth, EnsembleSummary, ENSEMBLE_CSV_HEADER};
pub use run::*;
