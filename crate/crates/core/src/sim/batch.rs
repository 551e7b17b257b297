use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::TrialConfig;
use crate::domain::Scenario;
use crate::error::{Error, Result};
use crate::phase1::Phase1Design;
use crate::phase2::Phase2Design;

use super::rng::{derive_seed, label_hash};
use super::trial::{ReplicationResult, Simulator, TrialSeeds};

const PHASE2_TAG: u64 = 0x5048_4153_4532;

/// A Phase I design, optionally followed by a Phase II design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Combo {
    pub p1: Phase1Design,
    pub p2: Option<Phase2Design>,
}

impl Combo {
    /// All fifteen two-stage combinations, Phase I major.
    pub fn all() -> Vec<Combo> {
        Phase1Design::ALL
            .into_iter()
            .flat_map(|p1| Phase2Design::ALL.into_iter().map(move |p2| Combo { p1, p2: Some(p2) }))
            .collect()
    }

    /// Parses `all` or a comma-separated list of `<p1>+<p2>` (or bare `<p1>`) tokens.
    pub fn parse_list(s: &str) -> Result<Vec<Combo>> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Self::all());
        }
        let list: Vec<Combo> = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        if list.is_empty() {
            return Err(Error::InvalidParameter("no design combinations given".into()));
        }
        Ok(list)
    }
}

impl fmt::Display for Combo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.p2 {
            Some(p2) => write!(f, "{}+{}", self.p1.token(), p2.token()),
            None => f.write_str(self.p1.token()),
        }
    }
}

impl FromStr for Combo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('+') {
            Some((a, b)) => Ok(Combo {
                p1: a.trim().parse()?,
                p2: Some(b.trim().parse()?),
            }),
            None => Ok(Combo {
                p1: s.trim().parse()?,
                p2: None,
            }),
        }
    }
}

/// Seeds of replication `rep`. Phase II streams depend on the Phase I design
/// only, so Phase II designs sharing a Phase I design see the same patients.
pub fn trial_seeds(seed: u64, rep: usize, scenario: &str, p1: Phase1Design) -> TrialSeeds {
    let base = [rep as u64, label_hash(scenario), label_hash(p1.token())];
    TrialSeeds {
        phase1: derive_seed(seed, &base),
        phase2: derive_seed(seed, &[base[0], base[1], base[2], PHASE2_TAG]),
    }
}

/// Replications of one scenario under one combination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchOutput {
    pub scenario: String,
    pub combo: Combo,
    pub results: Vec<ReplicationResult>,
}

/// Runs one trial with seeds derived from `seed`, replication 0.
pub fn run_trial(scenario: &Scenario, combo: Combo, cfg: &TrialConfig, seed: u64) -> Result<ReplicationResult> {
    Simulator::new(cfg)?.run(
        scenario,
        combo.p1,
        combo.p2,
        trial_seeds(seed, 0, &scenario.name, combo.p1),
    )
}

/// Runs `reps` replications of every scenario × combination. Output order is
/// scenario-major, then combination, then replication, whatever the thread count.
pub fn run_batch(
    scenarios: &[Scenario],
    combos: &[Combo],
    cfg: &TrialConfig,
    reps: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<BatchOutput>> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let sim = Simulator::new(cfg)?;
    let jobs: Vec<(usize, usize, usize)> = (0..scenarios.len())
        .flat_map(|s| (0..combos.len()).flat_map(move |c| (0..reps).map(move |r| (s, c, r))))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|&(s, c, r)| {
                let sc = &scenarios[s];
                let combo = combos[c];
                sim.run(sc, combo.p1, combo.p2, trial_seeds(seed, r, &sc.name, combo.p1))
            })
            .collect::<Result<Vec<_>>>()
    };
    let flat = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }?;
    let mut it = flat.into_iter();
    let mut out = Vec::with_capacity(scenarios.len() * combos.len());
    for sc in scenarios {
        for &combo in combos {
            out.push(BatchOutput {
                scenario: sc.name.clone(),
                combo,
                results: it.by_ref().take(reps).collect(),
            });
        }
    }
    Ok(out)
}
