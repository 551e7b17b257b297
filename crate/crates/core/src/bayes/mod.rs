//! Posterior tail probabilities and isotonic regression.

mod beta;
mod dirichlet;
mod pava;

pub use beta::{beta_tail, ln_beta, ln_gamma, regularized_incomplete_beta, BetaPosterior};
pub(crate) use dirichlet::prior_mass;
pub use dirichlet::{dirichlet_margin_tail, CellSet, DirichletPosterior};
pub use pava::pava_isotonic;
