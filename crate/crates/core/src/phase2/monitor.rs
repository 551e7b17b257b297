use crate::bayes::prior_mass;
use crate::bayes::{dirichlet_margin_tail, BetaPosterior, CellSet, DirichletPosterior};
use crate::config::TrialConfig;
use crate::domain::{independent_cells, CountTable, Dose, FollowUp, PatientRecord, UtilityWeights};
use crate::error::{Error, Result};

use super::calibrate::calibrate_cached;
use super::schedule::{CutoffSchedule, LookPlan};
use super::{CalibrationSpec, Hypotheses, Margin, Phase2Design};

/// Events and (possibly fractional) non-events on one margin.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MarginData {
    pub events: f64,
    pub non_events: f64,
}

/// Data entering one look.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LookData {
    pub tox: MarginData,
    pub eff: MarginData,
    /// Four-cell counts when every included outcome is resolved.
    pub cells: Option<[usize; 4]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LookDecision {
    Continue,
    NoGo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArmStatus {
    Active,
    /// Stopped at the given 0-based look.
    NoGo(usize),
    Go,
}

/// One Phase II arm.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmState {
    pub dose: Dose,
    pub patients: Vec<PatientRecord>,
    pub status: ArmStatus,
    pub next_look: usize,
    /// Phase I counts pooled into the posterior, if any.
    pub baseline: CountTable,
}

impl ArmState {
    pub fn new(dose: Dose) -> Self {
        Self {
            dose,
            patients: Vec::new(),
            status: ArmStatus::Active,
            next_look: 0,
            baseline: CountTable::default(),
        }
    }

    pub fn is_active(&self) -> bool {
        self.status == ArmStatus::Active
    }

    /// Phase II counts only, assuming complete follow-up.
    pub fn counts(&self) -> CountTable {
        CountTable::from_cells(self.patients.iter().map(PatientRecord::cell))
    }
}

/// Go/no-go monitor for one Phase II design.
#[derive(Clone, Debug, PartialEq)]
pub struct Phase2Monitor {
    pub design: Phase2Design,
    pub hypotheses: Hypotheses,
    pub schedule: CutoffSchedule,
    pub plan: LookPlan,
    pub dirichlet_prior: [f64; 4],
    pub ts_prior: [f64; 2],
    pub tox_window: f64,
    pub eff_window: f64,
    pub pending_limit: f64,
}

impl Phase2Monitor {
    pub fn new(design: Phase2Design, cfg: &TrialConfig, schedule: CutoffSchedule) -> Self {
        let h = cfg.hypotheses;
        Self {
            design,
            hypotheses: h,
            schedule,
            plan: LookPlan::from_config(cfg),
            dirichlet_prior: independent_cells(h.p_null, h.q_null),
            ts_prior: cfg.ts_prior,
            tox_window: cfg.tox_window,
            eff_window: cfg.eff_window,
            pending_limit: cfg.pending_fraction_limit,
        }
    }

    /// Monitor with cutoffs calibrated for `cfg`.
    pub fn calibrated(design: Phase2Design, cfg: &TrialConfig) -> Result<Self> {
        let cal = calibrate_cached(&CalibrationSpec::from_config(design, cfg))?;
        Ok(Self::new(design, cfg, cal.schedule))
    }

    fn included<'a>(&self, arm: &'a ArmState, r: usize) -> &'a [PatientRecord] {
        let m = self.plan.sizes[r].min(arm.patients.len());
        &arm.patients[..m]
    }

    fn monitored(&self, r: usize) -> (bool, bool) {
        if r == self.plan.final_look() {
            (true, true)
        } else {
            (self.plan.tox[r], self.plan.eff[r])
        }
    }

    /// Earliest calendar time at which look `r` may be evaluated, once its
    /// `m_r` patients are enrolled.
    ///
    /// TS and BOP2 wait for every monitored outcome; TOP waits only until the
    /// pending share of each monitored margin is within the limit. The final
    /// look always waits for complete data.
    pub fn ready_time(&self, arm: &ArmState, r: usize) -> f64 {
        let pts = self.included(arm, r);
        let (tox, eff) = self.monitored(r);
        let last_arrival = pts.iter().map(|p| p.arrival).fold(0.0, f64::max);
        let mut resolved: Vec<Vec<f64>> = Vec::new();
        if tox || r == self.plan.final_look() {
            resolved.push(pts.iter().map(|p| p.tox_resolved_at(self.tox_window)).collect());
        }
        if eff || r == self.plan.final_look() {
            resolved.push(pts.iter().map(|p| p.eff_resolved_at(self.eff_window)).collect());
        }
        let complete = self.design != Phase2Design::Top || r == self.plan.final_look();
        let n = pts.len();
        let allowed = if complete {
            0
        } else {
            ((self.pending_limit * n as f64 + 1e-9).floor() as usize).min(n)
        };
        resolved
            .into_iter()
            .map(|mut times| {
                times.sort_by(f64::total_cmp);
                // at most `allowed` may still be pending
                (n - allowed).checked_sub(1).map_or(0.0, |k| times[k])
            })
            .fold(last_arrival, f64::max)
    }

    /// Margin data of the patients counted at look `r`, observed at time `at`.
    pub fn look_data(&self, arm: &ArmState, r: usize, at: f64) -> LookData {
        let mut tox = MarginData::default();
        let mut eff = MarginData::default();
        let mut cells = arm.baseline.cells;
        let mut complete = true;
        for p in self.included(arm, r) {
            let ts = p.tox_status(at, self.tox_window);
            let es = p.eff_status(at, self.eff_window);
            accumulate(&mut tox, ts);
            accumulate(&mut eff, es);
            if ts.is_pending() || es.is_pending() {
                complete = false;
            } else {
                cells[p.cell().index()] += 1;
            }
        }
        let b = &arm.baseline;
        tox.events += b.n_tox() as f64;
        tox.non_events += (b.n() - b.n_tox()) as f64;
        eff.events += b.n_eff() as f64;
        eff.non_events += (b.n() - b.n_eff()) as f64;
        LookData {
            tox,
            eff,
            cells: complete.then_some(cells),
        }
    }

    fn prior_for(&self, margin: Margin) -> (f64, f64) {
        match self.design {
            Phase2Design::Ts => (self.ts_prior[0], self.ts_prior[1]),
            Phase2Design::Bop2 | Phase2Design::Top => prior_mass(&self.dirichlet_prior, cell_set(margin)),
        }
    }

    /// Posterior probability of the null side of `margin`:
    /// `Pr(p > p_null)` for toxicity, `Pr(q <= q_null)` for efficacy.
    pub fn null_probability(&self, data: &LookData, margin: Margin) -> Result<f64> {
        let h = &self.hypotheses;
        if let (Phase2Design::Bop2, Some(cells)) = (self.design, data.cells) {
            let post = DirichletPosterior::new(self.dirichlet_prior, cells.map(|c| c as f64))?;
            return match margin {
                Margin::Tox => dirichlet_margin_tail(&post, CellSet::TOX, h.p_null),
                Margin::Eff => post.margin(CellSet::EFF)?.cdf(h.q_null),
            };
        }
        let (a, b) = self.prior_for(margin);
        let d = match margin {
            Margin::Tox => data.tox,
            Margin::Eff => data.eff,
        };
        let post = BetaPosterior::from_counts(a, b, d.events, d.non_events)?;
        match margin {
            Margin::Tox => post.tail(h.p_null),
            Margin::Eff => post.cdf(h.q_null),
        }
    }

    /// Applies the look-`r` criteria to `data`.
    pub fn evaluate(&self, data: &LookData, r: usize) -> Result<LookDecision> {
        let m = *self.plan.sizes.get(r).ok_or(Error::OutOfRange {
            what: "look index",
            value: r as f64,
        })?;
        if self.plan.tox[r] && self.null_probability(data, Margin::Tox)? > self.schedule.cutoff_at(m, Margin::Tox)? {
            return Ok(LookDecision::NoGo);
        }
        if self.plan.eff[r] && self.null_probability(data, Margin::Eff)? > self.schedule.cutoff_at(m, Margin::Eff)? {
            return Ok(LookDecision::NoGo);
        }
        Ok(LookDecision::Continue)
    }

    /// Runs look `r` on `arm` at time `at` and updates its status.
    pub fn monitor_look(&self, arm: &mut ArmState, r: usize, at: f64) -> Result<LookDecision> {
        if !arm.is_active() || r != arm.next_look {
            return Err(Error::LookOrder {
                requested: r,
                expected: arm.next_look,
            });
        }
        let decision = self.evaluate(&self.look_data(arm, r, at), r)?;
        arm.next_look += 1;
        arm.status = match decision {
            LookDecision::NoGo => ArmStatus::NoGo(r),
            LookDecision::Continue if r == self.plan.final_look() => ArmStatus::Go,
            LookDecision::Continue => ArmStatus::Active,
        };
        Ok(decision)
    }
}

fn cell_set(margin: Margin) -> CellSet {
    match margin {
        Margin::Tox => CellSet::TOX,
        Margin::Eff => CellSet::EFF,
    }
}

fn accumulate(d: &mut MarginData, s: FollowUp) {
    match s {
        FollowUp::Event => d.events += 1.0,
        FollowUp::Completed => d.non_events += 1.0,
        FollowUp::Pending(f) => d.non_events += f,
    }
}

/// The Go arm with the highest observed Phase II utility; ties go to the lower dose.
pub fn select_rp3d(arms: &[ArmState], weights: &UtilityWeights) -> Option<Dose> {
    let mut best: Option<(Dose, f64)> = None;
    for arm in arms.iter().filter(|a| a.status == ArmStatus::Go) {
        let Some(u) = arm.counts().mean_utility(weights) else {
            continue;
        };
        best = match best {
            Some((d, bu)) if bu > u || (bu == u && d < arm.dose) => Some((d, bu)),
            _ => Some((arm.dose, u)),
        };
    }
    best.map(|(d, _)| d)
}
