use serde::Serialize;

use crate::config::{BackfillClearance, SafetyThreshold, TrialConfig};
use crate::domain::{CountTable, Dose, FollowUp, OutcomeCell, PatientRecord, PatientSource};
use crate::error::{Error, Result};

use super::boundaries::{BoinBoundaries, BoinDecision};
use super::rds::{rds_rank, utility_benchmark, UtilityData};
use super::rules::{futility_eliminate, safety_eliminate};
use super::select::{select_mtd, select_obd};
use super::Phase1Design;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Phase1Status {
    Running,
    Terminated,
    Complete(Vec<Dose>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SuspendReason {
    /// The current cohort is still under assessment.
    CohortAssessment(f64),
    /// Too many pending outcomes at the current dose.
    PendingOutcomes(f64),
    /// All cohorts are treated; waiting for the last assessments.
    FinalAssessment(f64),
}

impl SuspendReason {
    pub fn until(self) -> f64 {
        match self {
            Self::CohortAssessment(t) | Self::PendingOutcomes(t) | Self::FinalAssessment(t) => t,
        }
    }
}

/// What to do with the patient available at the time of a `step`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Phase1Action {
    /// Open a new escalation cohort at the dose and enroll the patient in it.
    AssignCohort(Dose),
    /// Enroll the patient in the open escalation cohort.
    Enroll(Dose),
    Backfill(Dose, usize),
    SuspendUntil(SuspendReason),
    TerminateTrial,
    CompletePhase(Vec<Dose>),
}

/// Evolving Phase I state of one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct Phase1State {
    pub n_doses: usize,
    pub clock: f64,
    pub patients: Vec<PatientRecord>,
    pub current: Dose,
    pub cohorts_started: usize,
    /// Patients enrolled so far in the current escalation cohort.
    pub cohort_filled: usize,
    /// Lowest safety-eliminated dose; it and every higher dose are closed.
    pub eliminated_from: Option<Dose>,
    pub futile: Vec<bool>,
    /// Doses where an escalation cohort ended without a de-escalation signal.
    pub cleared: Vec<bool>,
    pub status: Phase1Status,
}

impl Phase1State {
    pub fn new(n_doses: usize) -> Self {
        Self {
            n_doses,
            clock: 0.0,
            patients: Vec::new(),
            current: Dose(1),
            cohorts_started: 0,
            cohort_filled: 0,
            eliminated_from: None,
            futile: vec![false; n_doses],
            cleared: vec![false; n_doses],
            status: Phase1Status::Running,
        }
    }

    pub fn is_eliminated(&self, d: Dose) -> bool {
        self.eliminated_from.is_some_and(|e| d >= e)
    }

    pub fn eliminate_from(&mut self, d: Dose) {
        if !self.is_eliminated(d) {
            self.eliminated_from = Some(d);
        }
    }

    /// Open to assignment: in range, not eliminated and (for OBD designs) not futile.
    pub fn is_allowed(&self, d: Dose, obd: bool) -> bool {
        d.0 >= 1 && d.0 <= self.n_doses && !self.is_eliminated(d) && !(obd && self.futile[d.idx()])
    }

    pub fn doses(&self) -> impl Iterator<Item = Dose> {
        (1..=self.n_doses).map(Dose)
    }

    pub fn at_dose(&self, d: Dose) -> impl Iterator<Item = &PatientRecord> {
        self.patients.iter().filter(move |p| p.dose == d)
    }

    /// Complete-data counts of every dose.
    pub fn counts(&self) -> Vec<CountTable> {
        let mut out = vec![CountTable::default(); self.n_doses];
        for p in &self.patients {
            out[p.dose.idx()].add(p.cell());
        }
        out
    }

    pub fn escalation_count(&self) -> usize {
        self.patients
            .iter()
            .filter(|p| p.source == PatientSource::Escalation)
            .count()
    }

    fn cohort(&self) -> impl Iterator<Item = &PatientRecord> {
        let c = self.cohorts_started - 1;
        self.patients
            .iter()
            .filter(move |p| p.source == PatientSource::Escalation && p.group == c)
    }

    /// Records an enrolled patient. Escalation patients fill the open cohort.
    pub fn enroll(&mut self, p: PatientRecord) -> Result<()> {
        if p.arrival < self.clock {
            return Err(Error::InconsistentState(format!(
                "patient {} arrives at {} before the clock {}",
                p.id, p.arrival, self.clock
            )));
        }
        if p.source == PatientSource::Escalation {
            self.cohort_filled += 1;
        }
        self.clock = p.arrival;
        self.patients.push(p);
        Ok(())
    }
}

/// Data of one dose as seen by the design at a point in time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoseData {
    /// Patients contributing.
    pub n: usize,
    /// `(events, non-events)`; non-events may be fractional.
    pub tox: (f64, f64),
    pub eff: (f64, f64),
    pub utility: UtilityData,
}

impl DoseData {
    pub fn tox_rate(&self) -> Option<f64> {
        let total = self.tox.0 + self.tox.1;
        (total > 0.0).then(|| self.tox.0 / total)
    }
}

/// Decision rules of one Phase I design.
#[derive(Clone, Debug, PartialEq)]
pub struct Phase1Policy {
    pub design: Phase1Design,
    pub boundaries: BoinBoundaries,
    pub safety_threshold: f64,
    pub benchmark: f64,
    pub cfg: TrialConfig,
}

impl Phase1Policy {
    pub fn new(design: Phase1Design, cfg: &TrialConfig) -> Result<Self> {
        let boundaries = BoinBoundaries::new(cfg.target, cfg.phi1, cfg.phi2)?;
        let safety_threshold = match cfg.safety_threshold {
            SafetyThreshold::LambdaD => boundaries.lambda_d,
            SafetyThreshold::Target => cfg.target,
        };
        Ok(Self {
            design,
            boundaries,
            safety_threshold,
            benchmark: utility_benchmark(&cfg.utility, cfg.tox_limit, cfg.eff_min),
            cfg: cfg.clone(),
        })
    }

    fn obd(&self) -> bool {
        self.design.is_obd()
    }

    /// Calendar time at which every outcome the design waits for is known.
    fn resolved_at(&self, p: &PatientRecord) -> f64 {
        let t = p.tox_resolved_at(self.cfg.tox_window);
        if self.obd() {
            t.max(p.eff_resolved_at(self.cfg.eff_window))
        } else {
            t
        }
    }

    /// Data at dose `d` at time `at`. TITE designs weight pending outcomes by
    /// follow-up; the others use only patients whose outcomes are all known.
    pub fn dose_data(&self, st: &Phase1State, d: Dose, at: f64) -> DoseData {
        let (tw, ew) = (self.cfg.tox_window, self.cfg.eff_window);
        let mut n = 0;
        let mut tox = (0.0, 0.0);
        let mut eff = (0.0, 0.0);
        let mut cells = [0.0; 4];
        for p in st.at_dose(d) {
            let ts = p.tox_status(at, tw);
            let es = p.eff_status(at, ew);
            if !self.design.is_tite() && self.resolved_at(p) > at {
                continue;
            }
            n += 1;
            add_margin(&mut tox, ts);
            add_margin(&mut eff, es);
            let weight = fraction(ts).min(fraction(es));
            let cell = OutcomeCell::from_events(ts == FollowUp::Event, es == FollowUp::Event);
            cells[cell.index()] += weight;
        }
        DoseData {
            n,
            tox,
            eff,
            utility: UtilityData::from_cells(&cells, &self.cfg.utility),
        }
    }

    /// Highest cleared dose below the current one with an escalation response
    /// and room under the cap.
    pub fn backfill_candidate(&self, st: &Phase1State, at: f64) -> Option<Dose> {
        (1..st.current.0).rev().map(Dose).find(|&d| {
            let cleared = match self.cfg.backfill_clearance {
                BackfillClearance::CohortNotDeescalated => st.cleared[d.idx()],
                BackfillClearance::NotEliminated => true,
            };
            let responded = st.at_dose(d).any(|p| {
                p.source == PatientSource::Escalation && p.eff_status(at, self.cfg.eff_window) == FollowUp::Event
            });
            !st.is_eliminated(d) && cleared && responded && st.at_dose(d).count() < self.cfg.backfill_cap
        })
    }

    /// Next action for the patient available at time `at`.
    pub fn step(&self, st: &mut Phase1State, at: f64) -> Result<Phase1Action> {
        if st.status != Phase1Status::Running {
            return Err(Error::InconsistentState("Phase I is already over".into()));
        }
        if at < st.clock {
            return Err(Error::InconsistentState(format!(
                "step at {at} before the clock {}",
                st.clock
            )));
        }
        st.clock = at;
        if st.cohorts_started == 0 {
            return Ok(self.start_cohort(st, Dose(1)));
        }
        if st.cohort_filled < self.cfg.cohort_size {
            return Ok(Phase1Action::Enroll(st.current));
        }
        let last = st.cohorts_started >= self.cfg.max_cohorts;
        if self.design.is_tite() {
            if last {
                return self.finish_or_wait(st, at);
            }
            if let Some(until) = self.gate(st, at) {
                return Ok(Phase1Action::SuspendUntil(SuspendReason::PendingOutcomes(until)));
            }
            return self.decide(st, at);
        }
        let ready = st.cohort().map(|p| self.resolved_at(p)).fold(0.0, f64::max);
        if at < ready {
            if self.design == Phase1Design::BfBoin {
                if let Some(d) = self.backfill_candidate(st, at) {
                    return Ok(Phase1Action::Backfill(d, 1));
                }
            }
            return Ok(Phase1Action::SuspendUntil(SuspendReason::CohortAssessment(ready)));
        }
        if last {
            return self.finish_or_wait(st, at);
        }
        self.decide(st, at)
    }

    fn start_cohort(&self, st: &mut Phase1State, d: Dose) -> Phase1Action {
        st.current = d;
        st.cohorts_started += 1;
        st.cohort_filled = 0;
        Phase1Action::AssignCohort(d)
    }

    /// Earliest time the accrual gate at the current dose opens, if it is closed.
    fn gate(&self, st: &Phase1State, at: f64) -> Option<f64> {
        let pts: Vec<&PatientRecord> = st.at_dose(st.current).collect();
        let total = pts.len();
        let allowed = ((self.cfg.pending_fraction_limit * total as f64 + 1e-9).floor() as usize).min(total);
        let mut open_at = at;
        let mut margins = vec![true];
        if self.design == Phase1Design::TiteBoin12 && self.cfg.tite_efficacy_gate {
            margins.push(false);
        }
        for tox in margins {
            let mut pending: Vec<f64> = pts
                .iter()
                .filter_map(|p| {
                    let t = if tox {
                        p.tox_resolved_at(self.cfg.tox_window)
                    } else {
                        p.eff_resolved_at(self.cfg.eff_window)
                    };
                    (t > at).then_some(t)
                })
                .collect();
            if pending.len() > allowed {
                pending.sort_by(f64::total_cmp);
                open_at = open_at.max(pending[pending.len() - allowed - 1]);
            }
        }
        (open_at > at).then_some(open_at)
    }

    fn decide(&self, st: &mut Phase1State, at: f64) -> Result<Phase1Action> {
        let cfg = &self.cfg;
        let d = st.current;
        let data = self.dose_data(st, d, at);
        let Some(p_hat) = data.tox_rate() else {
            let next = st
                .at_dose(d)
                .map(|p| p.tox_resolved_at(cfg.tox_window))
                .filter(|&t| t > at)
                .fold(f64::INFINITY, f64::min);
            return Ok(Phase1Action::SuspendUntil(SuspendReason::PendingOutcomes(next)));
        };
        if safety_eliminate(
            data.tox.0,
            data.tox.1,
            data.n,
            cfg.safety_cutoff,
            self.safety_threshold,
            cfg.min_n_safety,
        )? {
            st.eliminate_from(d);
        }
        if self.obd()
            && futility_eliminate(
                data.eff.0,
                data.eff.1,
                data.n,
                cfg.eff_min,
                cfg.futility_cutoff,
                cfg.min_n_futility,
            )?
        {
            st.futile[d.idx()] = true;
        }
        if !st.doses().any(|k| st.is_allowed(k, self.obd())) {
            st.status = Phase1Status::Terminated;
            return Ok(Phase1Action::TerminateTrial);
        }
        let decision = self.boundaries.decide(p_hat);
        if decision != BoinDecision::Deescalate && !st.is_eliminated(d) {
            st.cleared[d.idx()] = true;
        }
        let next = if st.is_eliminated(d) {
            self.toward_allowed(st, d, Dose(d.0.saturating_sub(1).max(1)))
        } else if self.obd() {
            self.boin12_next(st, d, decision, data.n, at)?
        } else {
            match decision {
                BoinDecision::Escalate if st.is_allowed(Dose(d.0 + 1), false) => Dose(d.0 + 1),
                BoinDecision::Escalate | BoinDecision::Stay => d,
                BoinDecision::Deescalate => Dose(d.0.saturating_sub(1).max(1)),
            }
        };
        Ok(self.start_cohort(st, next))
    }

    fn boin12_next(&self, st: &Phase1State, d: Dose, decision: BoinDecision, n: usize, at: f64) -> Result<Dose> {
        let lower = Dose(d.0.saturating_sub(1).max(1));
        let set: Vec<Dose> = match decision {
            BoinDecision::Deescalate => return Ok(self.toward_allowed(st, d, lower)),
            BoinDecision::Stay if n >= self.cfg.rds_sample_cutoff => vec![lower, d],
            BoinDecision::Stay | BoinDecision::Escalate => vec![lower, d, Dose(d.0 + 1)],
        };
        let mut cands: Vec<(Dose, UtilityData)> = Vec::new();
        for k in set {
            if st.is_allowed(k, true) && !cands.iter().any(|(c, _)| *c == k) {
                cands.push((k, self.dose_data(st, k, at).utility));
            }
        }
        Ok(match rds_rank(&cands, self.benchmark)? {
            Some(k) => k,
            None => self.toward_allowed(st, d, d),
        })
    }

    /// One dose from `d` in the direction of `nearest_allowed(target)`.
    fn toward_allowed(&self, st: &Phase1State, d: Dose, target: Dose) -> Dose {
        let goal = self.nearest_allowed(st, target);
        match goal.0.cmp(&d.0) {
            std::cmp::Ordering::Greater => Dose(d.0 + 1),
            std::cmp::Ordering::Less => Dose(d.0 - 1),
            std::cmp::Ordering::Equal => d,
        }
    }

    /// `target` if allowed, else the closest allowed dose below it, else above it.
    fn nearest_allowed(&self, st: &Phase1State, target: Dose) -> Dose {
        let obd = self.obd();
        (1..=target.0)
            .rev()
            .chain(target.0 + 1..=st.n_doses)
            .map(Dose)
            .find(|&k| st.is_allowed(k, obd))
            .unwrap_or(target)
    }

    fn finish_or_wait(&self, st: &mut Phase1State, at: f64) -> Result<Phase1Action> {
        let end = st.patients.iter().map(|p| self.resolved_at(p)).fold(0.0, f64::max);
        if at < end {
            return Ok(Phase1Action::SuspendUntil(SuspendReason::FinalAssessment(end)));
        }
        st.clock = at.max(end);
        let rp2ds = self.select_rp2ds(st)?;
        if rp2ds.is_empty() {
            st.status = Phase1Status::Terminated;
            Ok(Phase1Action::TerminateTrial)
        } else {
            st.status = Phase1Status::Complete(rp2ds.clone());
            Ok(Phase1Action::CompletePhase(rp2ds))
        }
    }

    /// Final safety and futility screen on complete data, then the RP2D list.
    pub fn select_rp2ds(&self, st: &mut Phase1State) -> Result<Vec<Dose>> {
        let cfg = &self.cfg;
        let counts = st.counts();
        for d in st.doses().collect::<Vec<_>>() {
            let c = &counts[d.idx()];
            if c.n() == 0 || st.is_eliminated(d) {
                continue;
            }
            let (n_t, n) = (c.n_tox() as f64, c.n());
            if safety_eliminate(
                n_t,
                n as f64 - n_t,
                n,
                cfg.safety_cutoff,
                self.safety_threshold,
                cfg.min_n_safety,
            )? {
                st.eliminate_from(d);
            }
            let n_e = c.n_eff() as f64;
            if self.obd()
                && futility_eliminate(
                    n_e,
                    n as f64 - n_e,
                    n,
                    cfg.eff_min,
                    cfg.futility_cutoff,
                    cfg.min_n_futility,
                )?
            {
                st.futile[d.idx()] = true;
            }
        }
        let obd = self.obd();
        let allowed: Vec<Dose> = st
            .doses()
            .filter(|&d| counts[d.idx()].n() > 0 && st.is_allowed(d, obd))
            .collect();
        let mut out = if obd {
            select_obd(&counts, &allowed, &cfg.utility)
        } else {
            let bound = cfg.bound_mtd.then_some(self.boundaries.lambda_d);
            match select_mtd(&counts, &allowed, cfg.target, bound)? {
                Some(mtd) if mtd.0 > 1 => vec![Dose(mtd.0 - 1), mtd],
                Some(mtd) => vec![mtd],
                None => Vec::new(),
            }
        };
        out.truncate(cfg.max_rp2d);
        Ok(out)
    }
}

fn add_margin(acc: &mut (f64, f64), s: FollowUp) {
    match s {
        FollowUp::Event => acc.0 += 1.0,
        FollowUp::Completed => acc.1 += 1.0,
        FollowUp::Pending(f) => acc.1 += f,
    }
}

fn fraction(s: FollowUp) -> f64 {
    match s {
        FollowUp::Pending(f) => f,
        _ => 1.0,
    }
}
