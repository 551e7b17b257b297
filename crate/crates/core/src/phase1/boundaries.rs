use serde::Serialize;

use crate::bayes::BetaPosterior;
use crate::error::{Error, Result};

/// BOIN escalation and de-escalation boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoinBoundaries {
    pub lambda_e: f64,
    pub lambda_d: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoinDecision {
    Escalate,
    Stay,
    Deescalate,
}

impl BoinBoundaries {
    /// Boundaries for target `phi` bracketed by `phi1 < phi < phi2`.
    pub fn new(phi: f64, phi1: f64, phi2: f64) -> Result<Self> {
        if !(0.0 < phi1 && phi1 < phi && phi < phi2 && phi2 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "BOIN needs 0 < phi1 < phi < phi2 < 1, got ({phi1}, {phi}, {phi2})"
            )));
        }
        let lambda_e = ((1.0 - phi1) / (1.0 - phi)).ln() / ((phi * (1.0 - phi1)) / (phi1 * (1.0 - phi))).ln();
        let lambda_d = ((1.0 - phi) / (1.0 - phi2)).ln() / ((phi2 * (1.0 - phi)) / (phi * (1.0 - phi2))).ln();
        Ok(Self { lambda_e, lambda_d })
    }

    pub fn decide(&self, p_hat: f64) -> BoinDecision {
        boin_decision(self, p_hat)
    }
}

pub fn boin_decision(b: &BoinBoundaries, p_hat: f64) -> BoinDecision {
    if p_hat >= b.lambda_d {
        BoinDecision::Deescalate
    } else if p_hat <= b.lambda_e {
        BoinDecision::Escalate
    } else {
        BoinDecision::Stay
    }
}

/// One row of the BOIN decision table for `n` treated patients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BoundaryRow {
    pub n: usize,
    /// Escalate when the DLT count is at most this.
    pub escalate_max: usize,
    /// De-escalate when the DLT count is at least this.
    pub deescalate_min: Option<usize>,
    /// Eliminate when the DLT count is at least this.
    pub eliminate_min: Option<usize>,
}

/// Decision table for `n = 1..=n_max`. Elimination uses `Pr(p > threshold) > eta`
/// under a Beta(1, 1) prior and applies from `min_n` patients.
pub fn boundary_table(
    b: &BoinBoundaries,
    n_max: usize,
    threshold: f64,
    eta: f64,
    min_n: usize,
) -> Result<Vec<BoundaryRow>> {
    (1..=n_max)
        .map(|n| {
            let rate = |k: usize| k as f64 / n as f64;
            let escalate_max = (0..=n).take_while(|&k| rate(k) <= b.lambda_e).last().unwrap_or(0);
            let deescalate_min = (0..=n).find(|&k| rate(k) >= b.lambda_d);
            let eliminate_min = if n >= min_n {
                let mut found = None;
                for k in 0..=n {
                    let post = BetaPosterior::from_counts(1.0, 1.0, k as f64, (n - k) as f64)?;
                    if post.tail(threshold)? > eta {
                        found = Some(k);
                        break;
                    }
                }
                found
            } else {
                None
            };
            Ok(BoundaryRow {
                n,
                escalate_max,
                deescalate_min,
                eliminate_min,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_boundaries() {
        let b = BoinBoundaries::new(0.3, 0.18, 0.42).unwrap();
        assert_eq!((b.lambda_e * 1000.0).round(), 236.0);
        assert_eq!((b.lambda_d * 1000.0).round(), 359.0);
    }

    #[test]
    fn ordering_enforced() {
        assert!(BoinBoundaries::new(0.3, 0.3, 0.42).is_err());
        assert!(BoinBoundaries::new(0.3, 0.18, 1.0).is_err());
    }

    #[test]
    fn decisions_at_edges() {
        let b = BoinBoundaries::new(0.3, 0.18, 0.42).unwrap();
        assert_eq!(b.decide(0.0), BoinDecision::Escalate);
        assert_eq!(b.decide(1.0 / 3.0), BoinDecision::Stay);
        assert_eq!(b.decide(b.lambda_d), BoinDecision::Deescalate);
        assert_eq!(b.decide(b.lambda_e), BoinDecision::Escalate);
    }

    #[test]
    fn table_for_three_patients() {
        let b = BoinBoundaries::new(0.3, 0.18, 0.42).unwrap();
        let t = boundary_table(&b, 6, b.lambda_d, 0.95, 3).unwrap();
        assert_eq!(t[0].eliminate_min, None);
        assert_eq!(t[2].escalate_max, 0);
        assert_eq!(t[2].deescalate_min, Some(2));
        assert_eq!(t[2].eliminate_min, Some(3));
    }
}
