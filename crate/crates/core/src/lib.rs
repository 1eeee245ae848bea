//! Quenched first-exit laboratory for a Brownian motion `B` confined to the
//! moving corridor `[a + βW_s, b + βW_s]`, where `W` is an independent
//! Brownian environment.
//!
//! The crate is organised bottom-up:
//!
//! * [`env`] samples and refines environment paths and their δ-ladders.
//! * [`kernels`] holds the closed-form absorbing-band kernels.
//! * [`quenched`] evaluates quenched survival curves for one environment,
//!   deterministically (transfer operator) or by particle splitting.
//! * [`rates`] turns ensembles of curves into decay-constant estimates and
//!   checks the structural properties of `γ(β)`.
//! * [`experiments`] runs the small-deviation, functional-corridor,
//!   annealed and tail scenarios.
//!
//! Ensemble work is spread over a rayon pool when the `parallel` feature is
//! enabled (the default) and runs sequentially otherwise; results are
//! identical either way.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod env;
pub mod error;
pub mod experiments;
pub mod kernels;
pub mod par;
pub mod quad;
pub mod quenched;
pub mod rates;
pub mod seeds;
pub mod stats;

pub use env::{delta_ladder, refine_environment, sample_environment, DeltaLadder, EnvironmentPath};
pub use error::{Error, Result};
pub use kernels::{BandSpec, SeriesConfig};
pub use quenched::{Corridor, SplittingConfig, SurvivalCurve, TransferSettings, Variant};
pub use rates::{GammaCurve, RateEstimate};
