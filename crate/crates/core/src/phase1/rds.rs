use crate::bayes::BetaPosterior;
use crate::domain::{Dose, OutcomeCell, UtilityWeights};
use crate::error::Result;

/// Utility of a borderline-admissible dose (`p = p_T`, `q = q_E`) with
/// independent outcomes.
pub fn utility_benchmark(w: &UtilityWeights, tox_limit: f64, eff_min: f64) -> f64 {
    let (p, q) = (tox_limit, eff_min);
    w.score(OutcomeCell::O1) * q * (1.0 - p)
        + w.score(OutcomeCell::O2) * (1.0 - q) * (1.0 - p)
        + w.score(OutcomeCell::O3) * q * p
        + w.score(OutcomeCell::O4) * (1.0 - q) * p
}

/// Utility data of one dose: quasi-successes `x = Σ n_i u_i / 100` out of `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UtilityData {
    pub x: f64,
    pub n: f64,
}

impl UtilityData {
    pub fn from_cells(cells: &[f64; 4], w: &UtilityWeights) -> Self {
        let x = OutcomeCell::ALL
            .iter()
            .map(|&c| cells[c.index()] * w.score(c))
            .sum::<f64>()
            / 100.0;
        Self {
            x,
            n: cells.iter().sum(),
        }
    }
}

/// Desirability score `Pr(U > u_b / 100)` for `U ~ Beta(1 + x, 1 + n - x)`.
pub fn rds(data: UtilityData, benchmark: f64) -> Result<f64> {
    BetaPosterior::from_counts(1.0, 1.0, data.x, (data.n - data.x).max(0.0))?.tail(benchmark / 100.0)
}

/// Highest-ranked dose among `candidates`. Untried doses (`n = 0`) outrank
/// all tried ones; ties go to the smaller `n`, then to the lower dose.
pub fn rds_rank(candidates: &[(Dose, UtilityData)], benchmark: f64) -> Result<Option<Dose>> {
    let mut best: Option<(Dose, f64, f64)> = None;
    for &(d, data) in candidates {
        let score = if data.n <= 0.0 {
            f64::INFINITY
        } else {
            rds(data, benchmark)?
        };
        let better = match best {
            None => true,
            Some((bd, bs, bn)) => score > bs || (score == bs && (data.n < bn || (data.n == bn && d < bd))),
        };
        if better {
            best = Some((d, score, data.n));
        }
    }
    Ok(best.map(|(d, _, _)| d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w() -> UtilityWeights {
        UtilityWeights::default()
    }

    #[test]
    fn default_benchmark() {
        assert!((utility_benchmark(&w(), 0.35, 0.25) - 41.0).abs() < 1e-12);
    }

    #[test]
    fn ranking_rules() {
        let ub = 41.0;
        let a = UtilityData::from_cells(&[1.0, 2.0, 0.0, 0.0], &w());
        assert_eq!(rds_rank(&[(Dose(2), a)], ub).unwrap(), Some(Dose(2)));
        assert_eq!(rds_rank(&[(Dose(3), a), (Dose(2), a)], ub).unwrap(), Some(Dose(2)));
        let x = UtilityData::from_cells(&[2.0, 1.0, 0.0, 0.0], &w());
        let y = UtilityData::from_cells(&[0.0, 3.0, 0.0, 0.0], &w());
        assert_eq!(rds_rank(&[(Dose(1), y), (Dose(2), x)], ub).unwrap(), Some(Dose(2)));
        let untried = UtilityData { x: 0.0, n: 0.0 };
        assert_eq!(
            rds_rank(&[(Dose(1), x), (Dose(2), untried)], ub).unwrap(),
            Some(Dose(2))
        );
        assert_eq!(rds_rank(&[], ub).unwrap(), None);
    }
}
