use crate::bayes::BetaPosterior;
use crate::domain::{FollowUp, PatientRecord};
use crate::error::{Error, Result};

/// `Pr(p > threshold) > eta` under Beta(1 + n_tox, 1 + n_non_tox), evaluated from `min_n` patients.
pub fn safety_eliminate(n_tox: f64, n_non_tox: f64, n: usize, eta: f64, threshold: f64, min_n: usize) -> Result<bool> {
    if n < min_n {
        return Ok(false);
    }
    Ok(BetaPosterior::from_counts(1.0, 1.0, n_tox, n_non_tox)?.tail(threshold)? > eta)
}

/// `Pr(q < q_min) > zeta` under Beta(1 + n_eff, 1 + n_non_eff), evaluated from `min_n` patients.
pub fn futility_eliminate(n_eff: f64, n_non_eff: f64, n: usize, q_min: f64, zeta: f64, min_n: usize) -> Result<bool> {
    if n < min_n {
        return Ok(false);
    }
    Ok(BetaPosterior::from_counts(1.0, 1.0, n_eff, n_non_eff)?.cdf(q_min)? > zeta)
}

/// Observed events and effective non-events `(n_T, m̃)` from follow-up states:
/// completed non-events count 1 and pending ones count their elapsed fraction.
pub fn effective_counts<I: IntoIterator<Item = FollowUp>>(statuses: I) -> (f64, f64) {
    let (mut events, mut effective) = (0.0, 0.0);
    for s in statuses {
        match s {
            FollowUp::Event => events += 1.0,
            FollowUp::Completed => effective += 1.0,
            FollowUp::Pending(f) => effective += f,
        }
    }
    (events, effective)
}

/// TITE toxicity estimate `n_T / (n_T + m̃)` of `patients` at time `at`.
pub fn tite_effective_rate(patients: &[PatientRecord], at: f64, tox_window: f64) -> Result<f64> {
    let (n_t, m) = effective_counts(patients.iter().map(|p| p.tox_status(at, tox_window)));
    if n_t + m <= 0.0 {
        return Err(Error::NoInformation);
    }
    Ok(n_t / (n_t + m))
}

/// `true` when accrual must be suspended: more than `limit` of the patients are pending.
pub fn accrual_gate(pending: usize, total: usize, limit: f64) -> bool {
    total > 0 && pending as f64 / total as f64 > limit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Dose, PatientSource};

    fn patient(arrival: f64, tox_time: Option<f64>) -> PatientRecord {
        PatientRecord {
            id: 0,
            dose: Dose(1),
            arrival,
            group: 0,
            source: PatientSource::Escalation,
            tox_event: tox_time.is_some(),
            tox_time,
            eff_event: false,
            eff_time: None,
        }
    }

    #[test]
    fn safety_examples() {
        assert!(!safety_eliminate(0.0, 3.0, 3, 0.95, 0.359, 3).unwrap());
        assert!(!safety_eliminate(3.0, 0.0, 2, 0.95, 0.359, 3).unwrap());
    }

    #[test]
    fn futility_examples() {
        assert!(futility_eliminate(0.0, 9.0, 9, 0.25, 0.9, 6).unwrap());
        assert!(!futility_eliminate(5.0, 4.0, 9, 0.25, 0.9, 6).unwrap());
        assert!(!futility_eliminate(0.0, 3.0, 3, 0.25, 0.9, 6).unwrap());
    }

    #[test]
    fn tite_rate_examples() {
        let pts = [patient(0.0, Some(5.0)), patient(0.0, None), patient(0.0, None)];
        assert_eq!(tite_effective_rate(&pts, 15.0, 30.0).unwrap(), 0.5);
        let done = [patient(0.0, Some(5.0)), patient(0.0, None), patient(0.0, None)];
        assert_eq!(tite_effective_rate(&done, 100.0, 30.0).unwrap(), 1.0 / 3.0);
        let fresh = [patient(10.0, None), patient(10.0, None)];
        assert!(matches!(
            tite_effective_rate(&fresh, 10.0, 30.0),
            Err(Error::NoInformation)
        ));
    }

    #[test]
    fn gate_examples() {
        assert!(accrual_gate(2, 3, 0.5));
        assert!(!accrual_gate(1, 3, 0.5));
        assert!(!accrual_gate(0, 0, 0.5));
    }
}
