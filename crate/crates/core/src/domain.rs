//! Core domain types: outcome cells, utilities, dose profiles, scenarios,
//! per-patient records and per-dose count tables.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::TrialConfig;
use crate::error::{check_probability, Error, Result};

/// A 1-based dose level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dose(pub usize);

impl Dose {
    /// Zero-based index into per-dose arrays.
    #[inline]
    pub fn idx(self) -> usize {
        self.0 - 1
    }

    #[inline]
    pub fn from_idx(idx: usize) -> Self {
        Dose(idx + 1)
    }
}

impl fmt::Display for Dose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Joint toxicity/efficacy outcome of one patient.
///
/// | cell | DLT | response |
/// |------|-----|----------|
/// | O1   | no  | yes      |
/// | O2   | no  | no       |
/// | O3   | yes | yes      |
/// | O4   | yes | no       |
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeCell {
    O1,
    O2,
    O3,
    O4,
}

impl OutcomeCell {
    pub const ALL: [OutcomeCell; 4] = [Self::O1, Self::O2, Self::O3, Self::O4];

    pub fn from_events(tox: bool, eff: bool) -> Self {
        match (tox, eff) {
            (false, true) => Self::O1,
            (false, false) => Self::O2,
            (true, true) => Self::O3,
            (true, false) => Self::O4,
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_tox(self) -> bool {
        matches!(self, Self::O3 | Self::O4)
    }

    pub fn is_eff(self) -> bool {
        matches!(self, Self::O1 | Self::O3)
    }
}

/// Utility scores `u1..u4` attached to the outcome cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityWeights {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub u4: f64,
}

impl Default for UtilityWeights {
    fn default() -> Self {
        Self {
            u1: 100.0,
            u2: 40.0,
            u3: 60.0,
            u4: 0.0,
        }
    }
}

impl UtilityWeights {
    /// Weights with the fixed anchors `u1 = 100`, `u4 = 0`.
    pub fn new(u2: f64, u3: f64) -> Result<Self> {
        let w = Self {
            u1: 100.0,
            u2,
            u3,
            u4: 0.0,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.u1 != 100.0 || self.u4 != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "utility anchors must be u1 = 100, u4 = 0 (got {}, {})",
                self.u1, self.u4
            )));
        }
        for (name, u) in [("u2", self.u2), ("u3", self.u3)] {
            if !(0.0..=100.0).contains(&u) {
                return Err(Error::InvalidParameter(format!("{name} = {u} outside [0, 100]")));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn score(&self, cell: OutcomeCell) -> f64 {
        match cell {
            OutcomeCell::O1 => self.u1,
            OutcomeCell::O2 => self.u2,
            OutcomeCell::O3 => self.u3,
            OutcomeCell::O4 => self.u4,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.u1, self.u2, self.u3, self.u4]
    }
}

/// Cell probabilities `(π1, π2, π3, π4)` when toxicity and efficacy are independent.
pub fn independent_cells(p: f64, q: f64) -> [f64; 4] {
    [(1.0 - p) * q, (1.0 - p) * (1.0 - q), p * q, p * (1.0 - q)]
}

/// Expected utility `Σ π_i u_i` of a dose with marginal toxicity `p` and efficacy `q`.
///
/// Without an explicit joint distribution the cells are taken as independent.
/// When `u2 + u3 = 100` the result is `u2 (1 - p) + u3 q` for every joint
/// distribution with those margins.
pub fn expected_utility(p: f64, q: f64, w: &UtilityWeights, joint: Option<[f64; 4]>) -> Result<f64> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    let cells = match joint {
        None => independent_cells(p, q),
        Some(pi) => {
            for &c in &pi {
                check_probability("cell", c)?;
            }
            let total: f64 = pi.iter().sum();
            let tox = pi[2] + pi[3];
            let eff = pi[0] + pi[2];
            if (total - 1.0).abs() > 1e-9 || (tox - p).abs() > 1e-9 || (eff - q).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "joint cells {pi:?} do not sum to 1 with margins ({p}, {q})"
                )));
            }
            pi
        }
    };
    Ok(cells.iter().zip(w.as_array()).map(|(pi, u)| pi * u).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoseProfile {
    pub tox_prob: f64,
    pub eff_prob: f64,
    pub utility: f64,
}

/// A dose-response scenario: true marginal probabilities per dose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub doses: Vec<DoseProfile>,
    pub true_obd: Option<Dose>,
    pub true_mtd: Option<Dose>,
}

impl Scenario {
    pub fn n_doses(&self) -> usize {
        self.doses.len()
    }

    pub fn tox(&self, d: Dose) -> f64 {
        self.doses[d.idx()].tox_prob
    }

    pub fn eff(&self, d: Dose) -> f64 {
        self.doses[d.idx()].eff_prob
    }

    pub fn is_toxic(&self, d: Dose, tox_limit: f64) -> bool {
        self.tox(d) > tox_limit
    }
}

/// Truth-derived labels of a scenario.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub obd: Option<Dose>,
    pub mtd: Option<Dose>,
    pub toxic: Vec<Dose>,
    pub admissible: Vec<Dose>,
}

/// Labels the true OBD, MTD, toxic and admissible doses of a scenario.
pub fn classify_scenario(s: &Scenario, cfg: &TrialConfig) -> Classification {
    classify_doses(&s.doses, cfg.tox_limit, cfg.eff_min)
}

pub(crate) fn classify_doses(doses: &[DoseProfile], tox_limit: f64, eff_min: f64) -> Classification {
    let mut toxic = Vec::new();
    let mut admissible = Vec::new();
    let mut mtd = None;
    let mut obd: Option<(Dose, f64)> = None;
    for (i, dp) in doses.iter().enumerate() {
        let d = Dose::from_idx(i);
        if dp.tox_prob > tox_limit {
            toxic.push(d);
            continue;
        }
        // toxicity is increasing, so the last acceptable dose is the argmax
        if mtd.is_none_or(|m: Dose| doses[m.idx()].tox_prob <= dp.tox_prob) {
            mtd = Some(d);
        }
        if dp.eff_prob >= eff_min {
            admissible.push(d);
            if obd.is_none_or(|(_, u)| dp.utility > u) {
                obd = Some((d, dp.utility));
            }
        }
    }
    Classification {
        obd: obd.map(|(d, _)| d),
        mtd,
        toxic,
        admissible,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatientSource {
    Escalation,
    Backfill,
    Phase2,
}

/// Resolution status of one outcome margin at a given time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FollowUp {
    /// The event was observed.
    Event,
    /// The window closed without an event.
    Completed,
    /// No event yet; the value is the elapsed fraction of the window in `[0, 1)`.
    Pending(f64),
}

impl FollowUp {
    pub fn is_pending(self) -> bool {
        matches!(self, FollowUp::Pending(_))
    }
}

/// One simulated patient. Event times are measured from arrival.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub id: usize,
    pub dose: Dose,
    pub arrival: f64,
    /// Escalation cohort index (Phase I) or arm index (Phase II).
    pub group: usize,
    pub source: PatientSource,
    pub tox_event: bool,
    pub tox_time: Option<f64>,
    pub eff_event: bool,
    pub eff_time: Option<f64>,
}

impl PatientRecord {
    pub fn cell(&self) -> OutcomeCell {
        OutcomeCell::from_events(self.tox_event, self.eff_event)
    }

    /// Calendar time at which the toxicity outcome becomes known.
    pub fn tox_resolved_at(&self, window: f64) -> f64 {
        self.arrival + self.tox_time.unwrap_or(window)
    }

    pub fn eff_resolved_at(&self, window: f64) -> f64 {
        self.arrival + self.eff_time.unwrap_or(window)
    }

    pub fn tox_status(&self, at: f64, window: f64) -> FollowUp {
        margin_status(self.arrival, self.tox_time, at, window)
    }

    pub fn eff_status(&self, at: f64, window: f64) -> FollowUp {
        margin_status(self.arrival, self.eff_time, at, window)
    }
}

fn margin_status(arrival: f64, event_time: Option<f64>, at: f64, window: f64) -> FollowUp {
    let elapsed = at - arrival;
    match event_time {
        Some(t) if t <= elapsed => FollowUp::Event,
        _ if elapsed >= window => FollowUp::Completed,
        _ => FollowUp::Pending((elapsed / window).clamp(0.0, 1.0)),
    }
}

/// Four-cell outcome counts of one dose.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    pub cells: [usize; 4],
}

impl CountTable {
    pub fn from_cells<I: IntoIterator<Item = OutcomeCell>>(cells: I) -> Self {
        let mut t = Self::default();
        for c in cells {
            t.add(c);
        }
        t
    }

    pub fn add(&mut self, c: OutcomeCell) {
        self.cells[c.index()] += 1;
    }

    pub fn n(&self) -> usize {
        self.cells.iter().sum()
    }

    pub fn n_tox(&self) -> usize {
        self.cells[2] + self.cells[3]
    }

    pub fn n_eff(&self) -> usize {
        self.cells[0] + self.cells[2]
    }

    pub fn tox_rate(&self) -> Option<f64> {
        let n = self.n();
        (n > 0).then(|| self.n_tox() as f64 / n as f64)
    }

    pub fn eff_rate(&self) -> Option<f64> {
        let n = self.n();
        (n > 0).then(|| self.n_eff() as f64 / n as f64)
    }

    /// Observed mean utility `Σ n_i u_i / n`.
    pub fn mean_utility(&self, w: &UtilityWeights) -> Option<f64> {
        let n = self.n();
        (n > 0).then(|| {
            let total: f64 = OutcomeCell::ALL
                .iter()
                .map(|&c| self.cells[c.index()] as f64 * w.score(c))
                .sum();
            total / n as f64
        })
    }

    pub fn identities_hold(&self) -> bool {
        self.n_tox() == self.cells[2] + self.cells[3]
            && self.n_eff() == self.cells[0] + self.cells[2]
            && self.n() == self.cells.iter().sum::<usize>()
            && self.n_tox() <= self.n()
            && self.n_eff() <= self.n()
    }
}
