//! Independent oracles shared by the integration tests. Nothing here calls
//! the numerical routines it is used to check.

#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::distribution::{Beta, ContinuousCDF};
use statrs::function::beta::ln_beta;

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `Pr(X > t)` for `X ~ Beta(a, b)` by quadrature of the density on `[t, 1]`.
/// For `b < 1` the substitution `1 - x = s^(1/b)` removes the endpoint
/// singularity: `∫_t^1 x^(a-1) (1-x)^(b-1) dx = (1/b) ∫_0^{(1-t)^b} (1 - s^(1/b))^(a-1) ds`.
pub fn beta_tail_quadrature(a: f64, b: f64, t: f64) -> f64 {
    let ln_norm = -ln_beta(a, b);
    let integrate = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| {
        let rough = adaptive_simpson(f, lo, hi, 1e-6 * (hi - lo));
        adaptive_simpson(f, lo, hi, 1e-14 * rough.max(f64::MIN_POSITIVE))
    };
    if b < 1.0 {
        let f = |s: f64| ((a - 1.0) * (1.0 - s.powf(1.0 / b)).ln() + ln_norm).exp() / b;
        integrate(&f, 0.0, (1.0 - t).powf(b))
    } else {
        let f = |x: f64| {
            if x >= 1.0 {
                return if b == 1.0 { (ln_norm).exp() } else { 0.0 };
            }
            ((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() + ln_norm).exp()
        };
        integrate(&f, t, 1.0)
    }
}

/// Monte Carlo `Pr(Σ_{i in mask} π_i > t)` for `π ~ Dir(params)`, sampled as
/// normalized independent Gamma draws.
pub fn dirichlet_tail_mc<R: Rng>(params: [f64; 4], mask: u8, t: f64, draws: usize, rng: &mut R) -> f64 {
    let gammas: Vec<Gamma<f64>> = params
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive shape"))
        .collect();
    let mut hits = 0usize;
    for _ in 0..draws {
        let g: [f64; 4] = std::array::from_fn(|i| gammas[i].sample(rng));
        let total: f64 = g.iter().sum();
        let part: f64 = (0..4).filter(|i| mask & (1 << i) != 0).map(|i| g[i]).sum();
        if part > t * total {
            hits += 1;
        }
    }
    hits as f64 / draws as f64
}

/// Weighted least-squares nondecreasing fit by enumerating every split of the
/// sequence into consecutive blocks.
pub fn isotonic_brute_force(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for cuts in 0u32..(1 << (n - 1)) {
        let mut fit = Vec::with_capacity(n);
        let mut start = 0;
        for i in 0..n {
            let end_here = i == n - 1 || cuts & (1 << i) != 0;
            if end_here {
                let w: f64 = weights[start..=i].iter().sum();
                let m = (start..=i).map(|k| weights[k] * values[k]).sum::<f64>() / w;
                fit.extend(std::iter::repeat_n(m, i + 1 - start));
                start = i + 1;
            }
        }
        if fit.windows(2).any(|p| p[0] > p[1] + 1e-12) {
            continue;
        }
        let sse: f64 = (0..n).map(|k| weights[k] * (values[k] - fit[k]).powi(2)).sum();
        if best.as_ref().is_none_or(|(b, _)| sse < *b - 1e-12) {
            best = Some((sse, fit));
        }
    }
    best.expect("a single block is always monotone").1
}

/// Stopping rule of one margin at one look for the path oracle.
#[derive(Clone, Copy, Debug)]
pub struct OracleLook {
    pub m: usize,
    /// Toxicity cutoff, if toxicity is tested.
    pub tox_cutoff: Option<f64>,
    pub eff_cutoff: Option<f64>,
}

/// Probability of reaching the final look with Go when outcomes fall in the
/// four cells with probabilities `cells`. Enumerates every sequence of
/// per-look multinomial increments, carrying path probabilities.
pub fn go_probability_by_paths(
    looks: &[OracleLook],
    cells: [f64; 4],
    tox_prior: (f64, f64),
    eff_prior: (f64, f64),
    p_null: f64,
    q_null: f64,
) -> f64 {
    // cells ordered (no tox, eff), (no tox, no eff), (tox, eff), (tox, no eff)
    fn compositions(n: usize) -> Vec<[usize; 4]> {
        let mut out = Vec::new();
        for a in 0..=n {
            for b in 0..=n - a {
                for c in 0..=n - a - b {
                    out.push([a, b, c, n - a - b - c]);
                }
            }
        }
        out
    }
    fn ln_factorial(n: usize) -> f64 {
        (1..=n).map(|k| (k as f64).ln()).sum()
    }
    fn multinomial(k: &[usize; 4], p: &[f64; 4]) -> f64 {
        let n: usize = k.iter().sum();
        let mut lp = ln_factorial(n);
        for i in 0..4 {
            if k[i] > 0 {
                if p[i] == 0.0 {
                    return 0.0;
                }
                lp += k[i] as f64 * p[i].ln() - ln_factorial(k[i]);
            }
        }
        lp.exp()
    }
    // survival of each margin at each look, indexed by event count
    let tables: Vec<(Vec<bool>, Vec<bool>)> = looks
        .iter()
        .map(|look| {
            let m = look.m as f64;
            let tox = (0..=look.m)
                .map(|k| {
                    look.tox_cutoff.is_none_or(|c| {
                        let post = Beta::new(tox_prior.0 + k as f64, tox_prior.1 + m - k as f64).unwrap();
                        1.0 - post.cdf(p_null) <= c
                    })
                })
                .collect();
            let eff = (0..=look.m)
                .map(|k| {
                    look.eff_cutoff.is_none_or(|c| {
                        let post = Beta::new(eff_prior.0 + k as f64, eff_prior.1 + m - k as f64).unwrap();
                        post.cdf(q_null) <= c
                    })
                })
                .collect();
            (tox, eff)
        })
        .collect();
    let survives = |counts: &[usize; 4], r: usize| -> bool {
        tables[r].0[counts[2] + counts[3]] && tables[r].1[counts[0] + counts[2]]
    };
    fn walk(
        looks: &[OracleLook],
        r: usize,
        prev_m: usize,
        counts: [usize; 4],
        prob: f64,
        cells: &[f64; 4],
        survives: &dyn Fn(&[usize; 4], usize) -> bool,
    ) -> f64 {
        if r == looks.len() {
            return prob;
        }
        let step = looks[r].m - prev_m;
        let mut total = 0.0;
        for inc in compositions(step) {
            let p = multinomial(&inc, cells);
            if p == 0.0 {
                continue;
            }
            let next = std::array::from_fn(|i| counts[i] + inc[i]);
            if survives(&next, r) {
                total += walk(looks, r + 1, looks[r].m, next, prob * p, cells, survives);
            }
        }
        total
    }
    walk(looks, 0, 0, [0; 4], 1.0, &cells, &survives)
}

/// Scenario from toxicity and efficacy vectors, utilities computed.
pub fn scenario(name: &str, tox: &[f64], eff: &[f64], cfg: &twostage::TrialConfig) -> twostage::Scenario {
    let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ");
    let src = format!(
        "schema_version = 1\n[[scenario]]\nname = {name:?}\ntox = [{}]\neff = [{}]\n",
        list(tox),
        list(eff)
    );
    twostage::scenario::load_scenarios(&src, cfg).unwrap().remove(0)
}

/// One step of a driven Phase I run.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub at: f64,
    pub action: twostage::phase1::Phase1Action,
    pub eliminated_from: Option<twostage::Dose>,
}

/// Drives a Phase I policy outside the simulator. With `complete_data` every
/// patient arrives after all earlier outcomes are known; otherwise arrivals
/// are exponential with the Phase I accrual rate and are held through suspensions.
pub fn drive_phase1(
    policy: &twostage::phase1::Phase1Policy,
    scenario: &twostage::Scenario,
    seed: u64,
    complete_data: bool,
) -> (Vec<Step>, twostage::phase1::Phase1State) {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::Exp;
    use twostage::domain::{PatientRecord, PatientSource};
    use twostage::phase1::{Phase1Action, Phase1State};

    let cfg = &policy.cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = Exp::new(cfg.accrual_rate_s1).unwrap();
    let mut st = Phase1State::new(cfg.n_doses);
    let mut steps = Vec::new();
    let mut t = 1.0;
    loop {
        let action = policy.step(&mut st, t).unwrap();
        steps.push(Step {
            at: t,
            action: action.clone(),
            eliminated_from: st.eliminated_from,
        });
        let (dose, source) = match action {
            Phase1Action::AssignCohort(d) | Phase1Action::Enroll(d) => (d, PatientSource::Escalation),
            Phase1Action::Backfill(d, _) => (d, PatientSource::Backfill),
            Phase1Action::SuspendUntil(r) => {
                t = r.until();
                continue;
            }
            Phase1Action::TerminateTrial | Phase1Action::CompletePhase(_) => return (steps, st),
        };
        let o = twostage::sim::simulate_patient(scenario, dose, cfg, &mut rng);
        st.enroll(PatientRecord {
            id: st.patients.len(),
            dose,
            arrival: t,
            group: st.cohorts_started - 1,
            source,
            tox_event: o.tox_event,
            tox_time: o.tox_time,
            eff_event: o.eff_event,
            eff_time: o.eff_time,
        })
        .unwrap();
        t = if complete_data {
            let known = st
                .patients
                .iter()
                .map(|p| p.tox_resolved_at(cfg.tox_window).max(p.eff_resolved_at(cfg.eff_window)))
                .fold(t, f64::max);
            known + 1.0
        } else {
            t + gap.sample(&mut rng)
        };
    }
}

/// Cell probabilities of independent toxicity `p` and efficacy `q`.
pub fn independent(p: f64, q: f64) -> [f64; 4] {
    [(1.0 - p) * q, (1.0 - p) * (1.0 - q), p * q, p * (1.0 - q)]
}

/// Default calibration problem shrunk to arms of 20 with looks at 5, 10 and 15.
pub fn miniature(design: twostage::phase2::Phase2Design, alpha: f64) -> twostage::phase2::CalibrationSpec {
    let cfg = twostage::TrialConfig {
        arm_max: 20,
        interim_sizes: vec![5, 10, 15],
        type1_alpha: alpha,
        ..Default::default()
    };
    twostage::phase2::CalibrationSpec::from_config(design, &cfg)
}

/// `(null Go, alternative Go)` of `schedule` by enumerating every look path.
pub fn calibration_oracle(
    spec: &twostage::phase2::CalibrationSpec,
    schedule: &twostage::phase2::CutoffSchedule,
) -> (f64, f64) {
    use twostage::phase2::Margin;
    let plan = &spec.plan;
    let looks: Vec<OracleLook> = plan
        .sizes
        .iter()
        .enumerate()
        .map(|(r, &m)| OracleLook {
            m,
            tox_cutoff: plan.tox[r].then(|| schedule.cutoff_at(m, Margin::Tox).unwrap()),
            eff_cutoff: plan.eff[r].then(|| schedule.cutoff_at(m, Margin::Eff).unwrap()),
        })
        .collect();
    let h = spec.hypotheses;
    let pr = spec.priors;
    let go = |p, q| {
        go_probability_by_paths(
            &looks,
            independent(p, q),
            (pr.tox[0], pr.tox[1]),
            (pr.eff[0], pr.eff[1]),
            h.p_null,
            h.q_null,
        )
    };
    (go(h.p_null, h.q_null), go(h.p_alt, h.q_alt))
}

/// Strictly increasing toxicity curve from positive increments.
pub fn monotone_tox(steps: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut tox: Vec<f64> = steps
        .iter()
        .map(|s| {
            acc += s * 0.9;
            acc.min(0.99)
        })
        .collect();
    for i in 1..tox.len() {
        if tox[i] <= tox[i - 1] {
            tox[i] = tox[i - 1] + 1e-3;
        }
    }
    tox
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Dose-path, enrollment-cap, bookkeeping and clock checks on one simulated trial.
pub fn check_trial(
    sc: &twostage::Scenario,
    cfg: &twostage::TrialConfig,
    p1: twostage::phase1::Phase1Design,
    p2: Option<twostage::phase2::Phase2Design>,
    seed: u64,
) -> Result<(), String> {
    use twostage::sim::{trial_seeds, EventKind, Simulator, TerminatedStage};
    use twostage::Dose;

    let sim = Simulator::new(cfg).map_err(|e| e.to_string())?;
    let (res, log) = sim
        .run_traced(sc, p1, p2, trial_seeds(seed, 0, &sc.name, p1))
        .map_err(|e| e.to_string())?;

    ensure!(log.windows(2).all(|w| w[0].time <= w[1].time), "event times decrease");

    let cohorts: Vec<Dose> = log
        .iter()
        .filter(|e| e.kind == EventKind::CohortStart)
        .filter_map(|e| e.dose)
        .collect();
    ensure!(
        cohorts.first() == Some(&Dose(1)),
        "first cohort at {:?}",
        cohorts.first()
    );
    ensure!(
        cohorts.windows(2).all(|w| w[1].0.abs_diff(w[0].0) <= 1),
        "cohort doses jump: {cohorts:?}"
    );
    ensure!(cohorts.len() <= cfg.max_cohorts, "{} cohorts", cohorts.len());

    let count = |kind: EventKind, d: Option<Dose>| {
        log.iter()
            .filter(|e| e.kind == kind && (d.is_none() || e.dose == d))
            .count()
    };
    ensure!(
        count(EventKind::Enroll, None) <= cfg.n1(),
        "escalation enrollment over N1"
    );
    for k in 1..=cfg.n_doses {
        let d = Some(Dose(k));
        let backfilled = count(EventKind::Backfill, d);
        if backfilled > 0 {
            ensure!(
                count(EventKind::Enroll, d) + backfilled <= cfg.backfill_cap.max(cfg.n1()),
                "dose {k}: over the backfill cap"
            );
        }
        ensure!(count(EventKind::Phase2Enroll, d) <= cfg.arm_max, "dose {k}: arm over M");
    }
    ensure!(
        res.n_s2 <= res.rp2ds.len() * cfg.arm_max,
        "n_s2 {} over D2 * M",
        res.n_s2
    );
    ensure!(res.rp2ds.len() <= cfg.max_rp2d, "{} RP2Ds", res.rp2ds.len());

    ensure!(
        res.allocation.iter().sum::<usize>() == res.n_s1 + res.n_s2,
        "allocation does not add up"
    );
    ensure!(
        res.n_tox_s1 <= res.n_tox && res.n_tox <= res.n_s1 + res.n_s2,
        "n_tox out of range"
    );
    ensure!(
        res.dur_s1 >= 0.0 && res.dur_total >= res.dur_s1,
        "durations out of order"
    );
    if let Some(d) = res.rp3d {
        ensure!(res.rp2ds.contains(&d), "RP3D {d:?} not an RP2D");
    }
    match res.terminated_stage {
        TerminatedStage::Phase1 => ensure!(res.rp2ds.is_empty() && res.n_s2 == 0, "Phase I stop with RP2Ds"),
        TerminatedStage::Phase2 => {
            ensure!(
                res.rp3d.is_none() && !res.rp2ds.is_empty(),
                "Phase II stop inconsistent"
            )
        }
        TerminatedStage::None => ensure!(p2.is_none() || res.rp3d.is_some(), "completed without RP3D"),
    }
    Ok(())
}

/// Safety elimination only ever closes more doses, and nothing at or above
/// the closed range is assigned or recommended.
pub fn check_elimination(
    policy: &twostage::phase1::Phase1Policy,
    sc: &twostage::Scenario,
    seed: u64,
) -> Result<(), String> {
    use twostage::phase1::{Phase1Action, Phase1Status};

    let (steps, st) = drive_phase1(policy, sc, seed, false);
    let mut closed: Option<twostage::Dose> = None;
    for s in &steps {
        if let Some(old) = closed {
            ensure!(
                s.eliminated_from.is_some_and(|new| new <= old),
                "elimination reopened {old:?} -> {:?}",
                s.eliminated_from
            );
        }
        let assigned = match s.action {
            Phase1Action::AssignCohort(d) | Phase1Action::Enroll(d) | Phase1Action::Backfill(d, _) => Some(d),
            _ => None,
        };
        if let (Some(d), Some(limit)) = (assigned, s.eliminated_from) {
            ensure!(d < limit, "{d:?} assigned with doses from {limit:?} closed");
        }
        closed = s.eliminated_from;
    }
    if let Phase1Status::Complete(rp2ds) = &st.status {
        for d in rp2ds {
            ensure!(st.eliminated_from.is_none_or(|l| *d < l), "RP2D {d:?} is eliminated");
        }
    }
    Ok(())
}

/// Drives `tite` and `plain` on identical complete-data patient streams and
/// reports the first difference.
pub fn replay_difference(
    tite: &twostage::phase1::Phase1Policy,
    plain: &twostage::phase1::Phase1Policy,
    sc: &twostage::Scenario,
    seed: u64,
) -> Option<String> {
    let (ta, sa) = drive_phase1(tite, sc, seed, true);
    let (tb, sb) = drive_phase1(plain, sc, seed, true);
    if ta.len() <= 3 {
        return Some(format!("{} seed {seed}: trace too short", sc.name));
    }
    if let Some(i) = (0..ta.len().max(tb.len())).find(|&i| ta.get(i) != tb.get(i)) {
        return Some(format!(
            "{} seed {seed}: step {i} {:?} vs {:?}",
            sc.name,
            ta.get(i),
            tb.get(i)
        ));
    }
    if sa.status != sb.status || sa.patients != sb.patients {
        return Some(format!("{} seed {seed}: final states differ", sc.name));
    }
    None
}

/// One arm of `cfg.arm_max` patients whose outcomes are all resolved by day
/// `5 * arm_max + max window`.
pub fn resolved_arm<R: Rng>(
    cfg: &twostage::TrialConfig,
    dose: twostage::Dose,
    rng: &mut R,
) -> twostage::phase2::ArmState {
    use twostage::domain::{PatientRecord, PatientSource};
    let (p, q) = (rng.random_range(0.05..0.6), rng.random_range(0.05..0.7));
    let mut arm = twostage::phase2::ArmState::new(dose);
    arm.patients = (0..cfg.arm_max)
        .map(|i| {
            let tox = rng.random::<f64>() < p;
            let eff = rng.random::<f64>() < q;
            PatientRecord {
                id: i,
                dose,
                arrival: 5.0 * i as f64,
                group: 0,
                source: PatientSource::Phase2,
                tox_event: tox,
                tox_time: tox.then(|| rng.random_range(1.0..cfg.tox_window)),
                eff_event: eff,
                eff_time: eff.then(|| rng.random_range(1.0..cfg.eff_window)),
            }
        })
        .collect();
    arm
}

/// Runs every look of `arm` under BOP2 and TOP with nothing pending and
/// reports the first differing decision.
pub fn top_bop2_difference(sim: &twostage::sim::Simulator, arm: twostage::phase2::ArmState) -> Option<String> {
    use twostage::phase2::Phase2Design;
    let (bop2, top) = (sim.monitor(Phase2Design::Bop2), sim.monitor(Phase2Design::Top));
    let (mut a, mut b) = (arm.clone(), arm);
    let at = 1e6;
    for r in 0..bop2.plan.n_looks() {
        if !a.is_active() {
            break;
        }
        let da = bop2.monitor_look(&mut a, r, at).map_err(|e| e.to_string());
        let db = top.monitor_look(&mut b, r, at).map_err(|e| e.to_string());
        if da != db {
            return Some(format!("look {r}: {da:?} vs {db:?}"));
        }
    }
    (a.status != b.status).then(|| format!("final status {:?} vs {:?}", a.status, b.status))
}
