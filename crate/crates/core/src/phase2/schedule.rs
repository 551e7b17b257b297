use serde::{Deserialize, Serialize};

use crate::config::TrialConfig;
use crate::error::{Error, Result};

use super::Margin;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    pub lambda: f64,
    pub gamma: f64,
}

impl PowerParams {
    /// `C(m) = 1 - λ (m / M)^γ`.
    pub fn cutoff(&self, m: usize, max: usize) -> f64 {
        let frac = m as f64 / max as f64;
        (1.0 - self.lambda * frac.powf(self.gamma)).clamp(0.0, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CutoffKind {
    Fixed { tox: f64, eff: f64 },
    Power { tox: PowerParams, eff: PowerParams },
}

/// Posterior-probability cutoffs `C^T(m)`, `C^E(m)` over the look sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSchedule {
    pub kind: CutoffKind,
    pub interim_sizes: Vec<usize>,
    pub max_size: usize,
}

impl CutoffSchedule {
    pub fn new(kind: CutoffKind, interim_sizes: Vec<usize>, max_size: usize) -> Result<Self> {
        if let CutoffKind::Fixed { tox, eff } = kind {
            for c in [tox, eff] {
                if !(0.0..=1.0).contains(&c) {
                    return Err(Error::InvalidParameter(format!("fixed cutoff {c} outside [0, 1]")));
                }
            }
        }
        if interim_sizes.iter().any(|&m| m == 0 || m >= max_size) || interim_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "interim sizes {interim_sizes:?} must increase within (0, {max_size})"
            )));
        }
        Ok(Self {
            kind,
            interim_sizes,
            max_size,
        })
    }

    pub fn cutoff_at(&self, m: usize, margin: Margin) -> Result<f64> {
        if m == 0 || m > self.max_size {
            return Err(Error::OutOfRange {
                what: "look size",
                value: m as f64,
            });
        }
        Ok(match (self.kind, margin) {
            (CutoffKind::Fixed { tox, .. }, Margin::Tox) => tox,
            (CutoffKind::Fixed { eff, .. }, Margin::Eff) => eff,
            (CutoffKind::Power { tox, .. }, Margin::Tox) => tox.cutoff(m, self.max_size),
            (CutoffKind::Power { eff, .. }, Margin::Eff) => eff.cutoff(m, self.max_size),
        })
    }
}

/// Look sizes and which margins are tested at each look; the last look is the final analysis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LookPlan {
    pub sizes: Vec<usize>,
    pub tox: Vec<bool>,
    pub eff: Vec<bool>,
}

impl LookPlan {
    /// Toxicity at every look, efficacy at `efficacy_looks` and the final look.
    pub fn new(interim_sizes: &[usize], max_size: usize, efficacy_looks: &[usize]) -> Self {
        let r = interim_sizes.len();
        let mut sizes = interim_sizes.to_vec();
        sizes.push(max_size);
        let eff = (0..=r).map(|i| i == r || efficacy_looks.contains(&(i + 1))).collect();
        Self {
            sizes,
            tox: vec![true; r + 1],
            eff,
        }
    }

    pub fn from_config(cfg: &TrialConfig) -> Self {
        Self::new(&cfg.interim_sizes, cfg.arm_max, &cfg.efficacy_looks)
    }

    pub fn n_looks(&self) -> usize {
        self.sizes.len()
    }

    pub fn final_look(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn max_size(&self) -> usize {
        *self.sizes.last().expect("plan has a final look")
    }

    pub fn interim_sizes(&self) -> &[usize] {
        &self.sizes[..self.sizes.len() - 1]
    }
}
