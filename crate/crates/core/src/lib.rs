//! Replication p-values for assessing reproducibility across experiments.
//!
//! Two engines share one reference model (a finite mixture of hierarchical
//! normal models indexed by grid points `(ω², φ², γ)`):
//!
//! * [`prior`]: closed-form mixture-normal predictive for an original and
//!   replication pair, with predictive intervals.
//! * [`posterior`]: posterior-predictive Monte Carlo for `m ≥ 2` exchangeable
//!   experiments and a chosen test quantity.
//!
//! [`grid`] and [`dc`] build the default data-adaptive grid, [`classic`] holds
//! frequentist comparators, [`sim`] the simulation lab and [`io`] the file formats.

pub mod classic;
pub mod dc;
pub mod error;
pub mod grid;
pub mod io;
pub mod model;
pub mod posterior;
pub mod prior;
pub mod regress;
pub mod sim;
pub mod special;

pub use error::{Error, ErrorKind, Result};
pub use model::{
    make_reference_model, HyperComponent, PredictiveInterval, PrpResult, ReferenceModel,
    ReplicationPair, Sidedness, StudySummary,
};
