//! Ensemble post-processing for solar irradiance forecasts.
//!
//! The crate turns raw ensemble forecasts of global horizontal irradiance
//! into calibrated predictive distributions. The predictive family is a
//! logistic distribution left-censored at zero, so night-time and overcast
//! zeros receive genuine point mass. Distribution parameters are linked to
//! ensemble statistics and estimated by minimum CRPS over sliding or
//! expanding training windows, optionally with seasonally varying (harmonic)
//! link coefficients or after normalizing by clear-sky irradiance. A
//! verification suite scores the results against the raw ensemble and a
//! persistence climatology.
//!
//! Layering, bottom up:
//!
//! * [`dist`] - the censored logistic distribution and its closed-form CRPS;
//! * [`data`] - forecast archive model, CSV/JSON ingest, ensemble statistics;
//! * [`seasonal`] - low-order harmonic regression on the annual cycle;
//! * [`optim`] - derivative-free (Nelder-Mead) minimization with restarts;
//! * [`emos`] - parameter links and minimum-CRPS estimation;
//! * [`training`] - rolling / monthly-expanding, local / regional windows;
//! * [`csi`] - clear-sky-index transform and quantile forecasts;
//! * [`verify`] - scores, calibration diagnostics, bootstrap intervals;
//! * [`seed`] - deterministic per-consumer seed derivation.

pub mod config;
pub mod csi;
pub mod data;
pub mod dist;
pub mod emos;
pub mod error;
pub mod optim;
pub mod pipeline;
pub mod seasonal;
pub mod simulate;
pub mod seed;
pub mod training;
pub mod verify;

pub use data::{Archive, EnsembleStats, ForecastCase, Group, GroupSpec, Schema};
pub use dist::CensoredLogistic;
pub use emos::{EmosCoefficients, FitDiagnostics, LinkKind, LinkVariant, TrainingPoint};
pub use error::{Error, Result};

// Every fenced Rust block in the README and the guide compiles and runs as
// a doc-test of this crate, so neither can drift from the API it documents.
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/censored-logistic.md")]
    mod censored_logistic {}
    #[doc = include_str!("../../../book/src/emos-links.md")]
    mod emos_links {}
    #[doc = include_str!("../../../book/src/training-windows.md")]
    mod training_windows {}
    #[doc = include_str!("../../../book/src/clear-sky-index.md")]
    mod clear_sky_index {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
