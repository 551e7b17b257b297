use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::config::TrialConfig;
use crate::domain::{CountTable, Dose, PatientRecord, PatientSource, Scenario};
use crate::error::{Error, Result};
use crate::phase1::{Phase1Action, Phase1Design, Phase1Policy, Phase1State};
use crate::phase2::{select_rp3d, ArmState, ArmStatus, LookDecision, Phase2Design, Phase2Monitor};

use super::rng::{simulate_patient, stream_rng, Accrual, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminatedStage {
    None,
    Phase1,
    Phase2,
}

/// Outcome of one simulated trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub rp2ds: Vec<Dose>,
    pub rp3d: Option<Dose>,
    pub terminated_stage: TerminatedStage,
    pub n_s1: usize,
    pub n_s2: usize,
    /// Phase I patients at doses with true toxicity above the limit.
    pub n_tox_s1: usize,
    pub n_tox: usize,
    /// Days.
    pub dur_s1: f64,
    pub dur_total: f64,
    /// Patients per dose over both phases.
    pub allocation: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    CohortStart,
    Enroll,
    Backfill,
    Suspend,
    Phase1Terminated,
    Phase1Complete,
    Phase2Enroll,
    LookContinue,
    LookNoGo,
    ArmGo,
    Phase2Complete,
}

/// One line of a trial's event log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialEvent {
    pub time: f64,
    pub kind: EventKind,
    pub dose: Option<Dose>,
    pub patient: Option<usize>,
}

/// Seeds of the two phases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialSeeds {
    pub phase1: u64,
    pub phase2: u64,
}

/// Policies and calibrated monitors reused across replications.
#[derive(Clone, Debug)]
pub struct Simulator {
    pub cfg: TrialConfig,
    policies: Vec<(Phase1Design, Phase1Policy)>,
    monitors: Vec<(Phase2Design, Phase2Monitor)>,
}

impl Simulator {
    pub fn new(cfg: &TrialConfig) -> Result<Self> {
        cfg.validate()?;
        let policies = Phase1Design::ALL
            .into_iter()
            .map(|d| Ok((d, Phase1Policy::new(d, cfg)?)))
            .collect::<Result<_>>()?;
        let monitors = Phase2Design::ALL
            .into_iter()
            .map(|d| Ok((d, Phase2Monitor::calibrated(d, cfg)?)))
            .collect::<Result<_>>()?;
        Ok(Self {
            cfg: cfg.clone(),
            policies,
            monitors,
        })
    }

    pub fn policy(&self, d: Phase1Design) -> &Phase1Policy {
        &self
            .policies
            .iter()
            .find(|(k, _)| *k == d)
            .expect("all designs built")
            .1
    }

    pub fn monitor(&self, d: Phase2Design) -> &Phase2Monitor {
        &self
            .monitors
            .iter()
            .find(|(k, _)| *k == d)
            .expect("all designs built")
            .1
    }

    pub fn run(
        &self,
        scenario: &Scenario,
        p1: Phase1Design,
        p2: Option<Phase2Design>,
        seeds: TrialSeeds,
    ) -> Result<ReplicationResult> {
        self.run_inner(scenario, p1, p2, seeds, None)
    }

    /// Like [`Simulator::run`], also returning the event log.
    pub fn run_traced(
        &self,
        scenario: &Scenario,
        p1: Phase1Design,
        p2: Option<Phase2Design>,
        seeds: TrialSeeds,
    ) -> Result<(ReplicationResult, Vec<TrialEvent>)> {
        let mut log = Vec::new();
        let r = self.run_inner(scenario, p1, p2, seeds, Some(&mut log))?;
        Ok((r, log))
    }

    fn run_inner(
        &self,
        scenario: &Scenario,
        p1: Phase1Design,
        p2: Option<Phase2Design>,
        seeds: TrialSeeds,
        log: Option<&mut Vec<TrialEvent>>,
    ) -> Result<ReplicationResult> {
        let cfg = &self.cfg;
        if scenario.n_doses() != cfg.n_doses {
            return Err(Error::InvalidParameter(format!(
                "scenario {} has {} doses, configuration expects {}",
                scenario.name,
                scenario.n_doses(),
                cfg.n_doses
            )));
        }
        let mut run = Run {
            scenario,
            cfg,
            log,
            patients: 0,
        };
        let (state, start, end1) = run.phase1(self.policy(p1), seeds.phase1)?;
        let mut allocation = vec![0; cfg.n_doses];
        for p in &state.patients {
            allocation[p.dose.idx()] += 1;
        }
        let toxic = |d: Dose| scenario.is_toxic(d, cfg.tox_limit);
        let n_tox_s1 = state.patients.iter().filter(|p| toxic(p.dose)).count();
        let rp2ds = match &state.status {
            crate::phase1::Phase1Status::Complete(list) => list.clone(),
            _ => Vec::new(),
        };
        let mut result = ReplicationResult {
            rp2ds: rp2ds.clone(),
            rp3d: None,
            terminated_stage: TerminatedStage::Phase1,
            n_s1: state.patients.len(),
            n_s2: 0,
            n_tox_s1,
            n_tox: n_tox_s1,
            dur_s1: end1 - start,
            dur_total: end1 - start,
            allocation,
        };
        if rp2ds.is_empty() {
            return Ok(result);
        }
        let Some(p2) = p2 else {
            result.terminated_stage = TerminatedStage::None;
            return Ok(result);
        };
        let (arms, end2) = run.phase2(self.monitor(p2), &state, &rp2ds, end1, seeds.phase2)?;
        for arm in &arms {
            result.n_s2 += arm.patients.len();
            result.allocation[arm.dose.idx()] += arm.patients.len();
            if toxic(arm.dose) {
                result.n_tox += arm.patients.len();
            }
        }
        result.dur_total = end2 - start;
        result.rp3d = select_rp3d(&arms, &cfg.utility);
        result.terminated_stage = if result.rp3d.is_some() {
            TerminatedStage::None
        } else {
            TerminatedStage::Phase2
        };
        Ok(result)
    }
}

struct Run<'a> {
    scenario: &'a Scenario,
    cfg: &'a TrialConfig,
    log: Option<&'a mut Vec<TrialEvent>>,
    patients: usize,
}

impl Run<'_> {
    fn emit(&mut self, time: f64, kind: EventKind, dose: Option<Dose>, patient: Option<usize>) {
        if let Some(log) = self.log.as_deref_mut() {
            log.push(TrialEvent {
                time,
                kind,
                dose,
                patient,
            });
        }
    }

    fn new_patient<R: rand::Rng>(
        &mut self,
        rng: &mut R,
        dose: Dose,
        arrival: f64,
        group: usize,
        source: PatientSource,
    ) -> PatientRecord {
        let o = simulate_patient(self.scenario, dose, self.cfg, rng);
        let id = self.patients;
        self.patients += 1;
        PatientRecord {
            id,
            dose,
            arrival,
            group,
            source,
            tox_event: o.tox_event,
            tox_time: o.tox_time,
            eff_event: o.eff_event,
            eff_time: o.eff_time,
        }
    }

    /// Runs Phase I; returns the final state, the first enrollment time and the end time.
    fn phase1(&mut self, policy: &Phase1Policy, seed: u64) -> Result<(Phase1State, f64, f64)> {
        let cfg = self.cfg;
        let mut arrivals = Accrual::new(stream_rng(seed, Stream::Arrivals), cfg.accrual_rate_s1, cfg.accrual)?;
        let mut outcomes = stream_rng(seed, Stream::Outcomes);
        let mut st = Phase1State::new(cfg.n_doses);
        let start = arrivals.next_after(0.0);
        let mut t = start;
        loop {
            match policy.step(&mut st, t)? {
                action @ (Phase1Action::AssignCohort(_) | Phase1Action::Enroll(_) | Phase1Action::Backfill(..)) => {
                    let (dose, source, kind) = match action {
                        Phase1Action::AssignCohort(d) => {
                            self.emit(t, EventKind::CohortStart, Some(d), None);
                            (d, PatientSource::Escalation, EventKind::Enroll)
                        }
                        Phase1Action::Enroll(d) => (d, PatientSource::Escalation, EventKind::Enroll),
                        Phase1Action::Backfill(d, _) => (d, PatientSource::Backfill, EventKind::Backfill),
                        _ => unreachable!(),
                    };
                    let p = self.new_patient(&mut outcomes, dose, t, st.cohorts_started - 1, source);
                    self.emit(t, kind, Some(dose), Some(p.id));
                    st.enroll(p)?;
                    debug_assert!(st.counts().iter().all(CountTable::identities_hold));
                    t = arrivals.next_after(t);
                }
                Phase1Action::SuspendUntil(reason) => {
                    let until = reason.until();
                    if !(until > t && until.is_finite()) {
                        return Err(Error::InconsistentState(format!("suspension at {t} until {until}")));
                    }
                    self.emit(t, EventKind::Suspend, Some(st.current), None);
                    // the patient who arrived at `t` is held until accrual resumes
                    t = until;
                }
                Phase1Action::TerminateTrial => {
                    self.emit(t, EventKind::Phase1Terminated, None, None);
                    return Ok((st, start, t));
                }
                Phase1Action::CompletePhase(_) => {
                    self.emit(t, EventKind::Phase1Complete, None, None);
                    return Ok((st, start, t));
                }
            }
        }
    }

    /// Runs Phase II from time `t0`; returns the arms and the time of the last look.
    fn phase2(
        &mut self,
        monitor: &Phase2Monitor,
        st: &Phase1State,
        rp2ds: &[Dose],
        t0: f64,
        seed: u64,
    ) -> Result<(Vec<ArmState>, f64)> {
        let cfg = self.cfg;
        let plan = &monitor.plan;
        let mut arrivals = Accrual::new(stream_rng(seed, Stream::Arrivals), cfg.accrual_rate_s2, cfg.accrual)?;
        let mut outcomes = stream_rng(seed, Stream::Outcomes);
        let mut shuffle = stream_rng(seed, Stream::Randomization);
        let counts = st.counts();
        let mut arms: Vec<ArmState> = rp2ds
            .iter()
            .map(|&d| {
                let mut a = ArmState::new(d);
                if cfg.pool_phase1_data {
                    a.baseline = counts[d.idx()];
                }
                a
            })
            .collect();
        let mut block: Vec<usize> = Vec::new();
        let mut clock = t0;
        let mut end = t0;
        let mut ta = arrivals.next_after(t0);
        loop {
            // arms that have reached their next look size
            let waiting = arms
                .iter()
                .enumerate()
                .filter(|(_, a)| a.is_active() && a.patients.len() >= plan.sizes[a.next_look])
                .map(|(i, a)| (monitor.ready_time(a, a.next_look).max(clock), i))
                .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            let accruing: Vec<usize> = (0..arms.len())
                .filter(|&i| arms[i].is_active() && arms[i].patients.len() < plan.sizes[arms[i].next_look])
                .collect();
            match waiting {
                Some((rt, i)) if accruing.is_empty() || rt <= ta => {
                    clock = rt;
                    let r = arms[i].next_look;
                    let decision = monitor.monitor_look(&mut arms[i], r, rt)?;
                    let dose = Some(arms[i].dose);
                    self.emit(
                        rt,
                        match decision {
                            LookDecision::Continue => EventKind::LookContinue,
                            LookDecision::NoGo => EventKind::LookNoGo,
                        },
                        dose,
                        None,
                    );
                    if arms[i].status == ArmStatus::Go {
                        self.emit(rt, EventKind::ArmGo, dose, None);
                    }
                    end = rt;
                    block.clear();
                    // a patient arriving while no arm accrued was held
                    ta = ta.max(rt);
                }
                _ if accruing.is_empty() => break,
                _ => {
                    block.retain(|i| accruing.contains(i));
                    if block.is_empty() {
                        block = accruing.clone();
                        block.shuffle(&mut shuffle);
                    }
                    let i = block.remove(0);
                    clock = ta;
                    let dose = arms[i].dose;
                    let p = self.new_patient(&mut outcomes, dose, ta, i, PatientSource::Phase2);
                    self.emit(ta, EventKind::Phase2Enroll, Some(dose), Some(p.id));
                    arms[i].patients.push(p);
                    ta = arrivals.next_after(ta);
                }
            }
        }
        self.emit(end, EventKind::Phase2Complete, None, None);
        Ok((arms, end))
    }
}
