//! Monte Carlo simulation of two-stage trials.

mod batch;
mod rng;
mod trial;

pub use batch::{run_batch, run_trial, trial_seeds, BatchOutput, Combo};
pub use rng::{derive_seed, label_hash, simulate_patient, splitmix64, stream_rng, Accrual, PatientOutcome, Stream};
pub use trial::{EventKind, ReplicationResult, Simulator, TerminatedStage, TrialEvent, TrialSeeds};
