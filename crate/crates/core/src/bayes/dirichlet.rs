use crate::domain::OutcomeCell;
use crate::error::{Error, Result};

use super::beta::{beta_tail, BetaPosterior};

/// A subset of the four outcome cells, as a bit mask (bit `i` = cell `O_{i+1}`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CellSet(u8);

impl CellSet {
    /// `{O3, O4}`: the toxicity margin.
    pub const TOX: CellSet = CellSet(0b1100);
    /// `{O1, O3}`: the efficacy margin.
    pub const EFF: CellSet = CellSet(0b0101);

    pub fn new(mask: u8) -> Result<Self> {
        if mask == 0 || mask >= 0b1111 {
            return Err(Error::InvalidSubset(mask));
        }
        Ok(CellSet(mask))
    }

    pub fn from_cells(cells: &[OutcomeCell]) -> Result<Self> {
        Self::new(cells.iter().fold(0, |m, c| m | (1 << c.index())))
    }

    pub fn contains(self, c: OutcomeCell) -> bool {
        self.0 & (1 << c.index()) != 0
    }

    pub fn complement(self) -> CellSet {
        CellSet(!self.0 & 0b1111)
    }

    pub fn mask(self) -> u8 {
        self.0
    }
}

/// `Dir(a_1 + n_1, …, a_4 + n_4)`; prior and counts are kept apart so margins
/// aggregate as `Σ a_i + Σ n_i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirichletPosterior {
    pub prior: [f64; 4],
    pub counts: [f64; 4],
}

impl DirichletPosterior {
    /// The prior must be positive with total mass 1.
    pub fn new(prior: [f64; 4], counts: [f64; 4]) -> Result<Self> {
        if prior.iter().any(|&a| !(a > 0.0)) || (prior.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "Dirichlet prior {prior:?} must be positive and sum to 1"
            )));
        }
        if counts.iter().any(|&n| !(n >= 0.0)) {
            return Err(Error::InvalidParameter(format!("negative cell counts {counts:?}")));
        }
        Ok(Self { prior, counts })
    }

    pub fn params(&self) -> [f64; 4] {
        std::array::from_fn(|i| self.prior[i] + self.counts[i])
    }

    /// Beta distribution of `Σ_{i ∈ set} π_i`.
    pub fn margin(&self, set: CellSet) -> Result<BetaPosterior> {
        let (mut a_in, mut a_out, mut n_in, mut n_out) = (0.0, 0.0, 0.0, 0.0);
        for c in OutcomeCell::ALL {
            let i = c.index();
            if set.contains(c) {
                a_in += self.prior[i];
                n_in += self.counts[i];
            } else {
                a_out += self.prior[i];
                n_out += self.counts[i];
            }
        }
        BetaPosterior::new(a_in + n_in, a_out + n_out)
    }
}

/// `Pr(Σ_{i ∈ set} π_i > threshold)` under a Dirichlet posterior, via the
/// aggregation property.
pub fn dirichlet_margin_tail(post: &DirichletPosterior, set: CellSet, threshold: f64) -> Result<f64> {
    beta_tail(&post.margin(set)?, threshold)
}

/// Aggregated prior mass of a cell set.
pub(crate) fn prior_mass(prior: &[f64; 4], set: CellSet) -> (f64, f64) {
    let mut a_in = 0.0;
    let mut a_out = 0.0;
    for c in OutcomeCell::ALL {
        if set.contains(c) {
            a_in += prior[c.index()];
        } else {
            a_out += prior[c.index()];
        }
    }
    (a_in, a_out)
}
