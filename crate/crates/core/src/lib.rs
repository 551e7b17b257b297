//! Bayesian model-assisted two-stage Phase I/II trial designs.
//!
//! Five Phase I dose-finding policies (BOIN, TITE-BOIN, BF-BOIN, BOIN12,
//! TITE-BOIN12) are combined with three Phase II go/no-go monitoring policies
//! (TS, BOP2, TOP). The [`sim`] module drives both stages against a
//! [`domain::Scenario`] with virtual patients, and [`metrics`] folds
//! replications into operating characteristics.

pub mod bayes;
pub mod config;
pub mod domain;
pub mod error;
pub mod metrics;
pub mod phase1;
pub mod phase2;
pub mod scenario;
pub mod sim;

pub use config::TrialConfig;
pub use domain::{Dose, OutcomeCell, Scenario, UtilityWeights};
pub use error::{Error, Result};
