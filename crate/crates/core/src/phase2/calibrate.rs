use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::bayes::prior_mass;
use crate::bayes::{BetaPosterior, CellSet};
use crate::config::TrialConfig;
use crate::domain::independent_cells;
use crate::error::{Error, Result};

use super::schedule::{CutoffKind, CutoffSchedule, LookPlan, PowerParams};
use super::{Hypotheses, Margin, Phase2Design};

const LAMBDA_STEPS: std::ops::RangeInclusive<u32> = 50..=100;
const GAMMA_STEPS: std::ops::RangeInclusive<u32> = 0..=12;

/// Beta priors `(a, b)` of the toxicity and efficacy margins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginPriors {
    pub tox: [f64; 2],
    pub eff: [f64; 2],
}

impl MarginPriors {
    pub fn for_design(design: Phase2Design, cfg: &TrialConfig) -> Self {
        match design {
            Phase2Design::Ts => Self {
                tox: cfg.ts_prior,
                eff: cfg.ts_prior,
            },
            Phase2Design::Bop2 | Phase2Design::Top => {
                let prior = independent_cells(cfg.hypotheses.p_null, cfg.hypotheses.q_null);
                let (ta, tb) = prior_mass(&prior, CellSet::TOX);
                let (ea, eb) = prior_mass(&prior, CellSet::EFF);
                Self {
                    tox: [ta, tb],
                    eff: [ea, eb],
                }
            }
        }
    }

    fn of(&self, margin: Margin) -> [f64; 2] {
        match margin {
            Margin::Tox => self.tox,
            Margin::Eff => self.eff,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSpec {
    pub design: Phase2Design,
    pub hypotheses: Hypotheses,
    pub plan: LookPlan,
    pub alpha: f64,
    pub priors: MarginPriors,
}

impl CalibrationSpec {
    pub fn from_config(design: Phase2Design, cfg: &TrialConfig) -> Self {
        Self {
            design,
            hypotheses: cfg.hypotheses,
            plan: LookPlan::from_config(cfg),
            alpha: cfg.type1_alpha,
            priors: MarginPriors::for_design(design, cfg),
        }
    }
}

/// Integer stopping rule at one look for complete data: continue iff
/// `n_T <= max_tox` and `n_E >= min_eff`. `None` means the margin is not tested.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LookBoundary {
    pub m: usize,
    pub max_tox: Option<i64>,
    pub min_eff: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub design: Phase2Design,
    pub schedule: CutoffSchedule,
    /// Probability of a final Go under `(p_null, q_null)`.
    pub null_go: f64,
    /// Probability of a final Go under `(p_alt, q_alt)`.
    pub alt_go: f64,
    pub boundaries: Vec<LookBoundary>,
}

/// Posterior null probabilities for every possible event count at each look.
struct NullProbTable {
    /// `probs[r][x]`, increasing in `x` for toxicity and decreasing for efficacy.
    probs: Vec<Vec<f64>>,
}

impl NullProbTable {
    fn new(spec: &CalibrationSpec, margin: Margin) -> Result<Self> {
        let [a, b] = spec.priors.of(margin);
        let h = &spec.hypotheses;
        let probs = spec
            .plan
            .sizes
            .iter()
            .map(|&m| {
                (0..=m)
                    .map(|x| {
                        let post = BetaPosterior::from_counts(a, b, x as f64, (m - x) as f64)?;
                        match margin {
                            Margin::Tox => post.tail(h.p_null),
                            Margin::Eff => post.cdf(h.q_null),
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { probs })
    }

    /// Continuation interval `[lo, hi]` of the event count at look `r` for cutoff `c`.
    fn interval(&self, r: usize, margin: Margin, c: f64) -> (i64, i64) {
        let p = &self.probs[r];
        let m = (p.len() - 1) as i64;
        match margin {
            Margin::Tox => (0, p.partition_point(|&v| v <= c) as i64 - 1),
            Margin::Eff => (p.partition_point(|&v| v > c) as i64, m),
        }
    }
}

fn margin_intervals(
    table: &NullProbTable,
    plan: &LookPlan,
    margin: Margin,
    cutoff: impl Fn(usize) -> f64,
) -> Vec<(i64, i64)> {
    let tested = match margin {
        Margin::Tox => &plan.tox,
        Margin::Eff => &plan.eff,
    };
    plan.sizes
        .iter()
        .enumerate()
        .map(|(r, &m)| {
            if tested[r] {
                table.interval(r, margin, cutoff(m))
            } else {
                (0, m as i64)
            }
        })
        .collect()
}

/// Probability that a binomial event-count path stays within `intervals[r]`
/// at every look size `sizes[r]`, with per-patient event probability `prob`.
pub fn margin_survival(sizes: &[usize], intervals: &[(i64, i64)], prob: f64) -> f64 {
    let mut dist = vec![1.0];
    let mut n = 0;
    for (&m, &(lo, hi)) in sizes.iter().zip(intervals) {
        let pmf = binomial_pmf(m - n, prob);
        let mut next = vec![0.0; m + 1];
        for (x, &px) in dist.iter().enumerate() {
            if px == 0.0 {
                continue;
            }
            for (k, &pk) in pmf.iter().enumerate() {
                next[x + k] += px * pk;
            }
        }
        for (x, v) in next.iter_mut().enumerate() {
            let x = x as i64;
            if x < lo || x > hi {
                *v = 0.0;
            }
        }
        dist = next;
        n = m;
    }
    dist.iter().sum()
}

fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if p <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    if p >= 1.0 {
        out[n] = 1.0;
        return out;
    }
    let odds = p / (1.0 - p);
    out[0] = (1.0 - p).powi(n as i32);
    for k in 0..n {
        out[k + 1] = out[k] * (n - k) as f64 / (k + 1) as f64 * odds;
    }
    out
}

/// Integer boundaries implied by `schedule` for complete data.
pub fn stopping_boundaries(spec: &CalibrationSpec, schedule: &CutoffSchedule) -> Result<Vec<LookBoundary>> {
    let (tox, eff) = schedule_intervals(spec, schedule)?;
    Ok(spec
        .plan
        .sizes
        .iter()
        .enumerate()
        .map(|(r, &m)| LookBoundary {
            m,
            max_tox: spec.plan.tox[r].then_some(tox[r].1),
            min_eff: spec.plan.eff[r].then_some(eff[r].0),
        })
        .collect())
}

fn schedule_intervals(spec: &CalibrationSpec, schedule: &CutoffSchedule) -> Result<(Vec<(i64, i64)>, Vec<(i64, i64)>)> {
    let tt = NullProbTable::new(spec, Margin::Tox)?;
    let et = NullProbTable::new(spec, Margin::Eff)?;
    let cut = |margin| move |m| schedule.cutoff_at(m, margin).expect("look sizes lie in (0, M]");
    Ok((
        margin_intervals(&tt, &spec.plan, Margin::Tox, cut(Margin::Tox)),
        margin_intervals(&et, &spec.plan, Margin::Eff, cut(Margin::Eff)),
    ))
}

/// Exact `(null Go, alternative Go)` probabilities of `schedule` under
/// independent toxicity and efficacy.
pub fn operating_characteristics(spec: &CalibrationSpec, schedule: &CutoffSchedule) -> Result<(f64, f64)> {
    let (tox, eff) = schedule_intervals(spec, schedule)?;
    let h = &spec.hypotheses;
    let s = &spec.plan.sizes;
    let null = margin_survival(s, &tox, h.p_null) * margin_survival(s, &eff, h.q_null);
    let alt = margin_survival(s, &tox, h.p_alt) * margin_survival(s, &eff, h.q_alt);
    Ok((null, alt))
}

/// A distinct integer boundary vector on one margin and the first grid
/// point producing it.
struct Candidate {
    params: PowerParams,
    null: f64,
    alt: f64,
}

fn margin_candidates(spec: &CalibrationSpec, margin: Margin, gammas: &[f64]) -> Result<Vec<Candidate>> {
    let table = NullProbTable::new(spec, margin)?;
    let max = spec.plan.max_size();
    let h = &spec.hypotheses;
    let (p_null, p_alt) = match margin {
        Margin::Tox => (h.p_null, h.p_alt),
        Margin::Eff => (h.q_null, h.q_alt),
    };
    let mut seen: HashMap<Vec<(i64, i64)>, ()> = HashMap::new();
    let mut out = Vec::new();
    // larger λ first so each boundary vector keeps its largest λ
    for l in LAMBDA_STEPS.rev() {
        for &gamma in gammas {
            let params = PowerParams {
                lambda: f64::from(l) / 100.0,
                gamma,
            };
            let iv = margin_intervals(&table, &spec.plan, margin, |m| params.cutoff(m, max));
            if seen.insert(iv.clone(), ()).is_some() {
                continue;
            }
            out.push(Candidate {
                params,
                null: margin_survival(&spec.plan.sizes, &iv, p_null),
                alt: margin_survival(&spec.plan.sizes, &iv, p_alt),
            });
        }
    }
    Ok(out)
}

/// Index of the candidate maximizing power subject to `null <= alpha` and
/// `alt > 0`; ties go to the smaller null probability, then the earlier
/// candidate.
fn best_single(cands: &[Candidate], alpha: f64) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in cands.iter().enumerate() {
        if !(c.null <= alpha && c.alt > 0.0) {
            continue;
        }
        best = match best {
            Some(b) if !better(c.alt, c.null, cands[b].alt, cands[b].null) => Some(b),
            _ => Some(i),
        };
    }
    best
}

fn better(alt: f64, null: f64, best_alt: f64, best_null: f64) -> bool {
    alt > best_alt || (alt == best_alt && null < best_null)
}

fn infeasible(cands: impl Iterator<Item = (f64, f64, String)>, alpha: f64) -> Error {
    let best = cands
        .filter(|(_, alt, _)| *alt > 0.0)
        .min_by(|a, b| a.0.total_cmp(&b.0));
    Error::Infeasible(match best {
        Some((null, alt, what)) => format!(
            "no cutoff schedule keeps the null Go probability within {alpha}; closest is {what} with null Go {null:.6} and power {alt:.6}"
        ),
        None => "no cutoff schedule has positive power".to_string(),
    })
}

/// Grid search over power-function cutoffs maximizing power under the
/// type I error bound `spec.alpha`.
///
/// TS searches each margin separately with `γ = 0`, holding each margin to
/// `sqrt(alpha)` so that the joint null Go probability stays within `alpha`.
/// BOP2 and TOP search `(λ_T, γ_T, λ_E, γ_E)` jointly.
pub fn calibrate(spec: &CalibrationSpec) -> Result<Calibration> {
    spec.hypotheses.validate()?;
    if !(spec.alpha >= 0.0 && spec.alpha <= 1.0) {
        return Err(Error::InvalidProbability {
            name: "alpha",
            value: spec.alpha,
        });
    }
    let plan = &spec.plan;
    let interim = plan.interim_sizes().to_vec();
    let max = plan.max_size();
    let schedule = match spec.design {
        Phase2Design::Ts => {
            let tox = margin_candidates(spec, Margin::Tox, &[0.0])?;
            let eff = margin_candidates(spec, Margin::Eff, &[0.0])?;
            let level = spec.alpha.sqrt();
            let (Some(t), Some(e)) = (best_single(&tox, level), best_single(&eff, level)) else {
                let all = tox
                    .iter()
                    .chain(&eff)
                    .map(|c| (c.null, c.alt, format!("λ = {}", c.params.lambda)));
                return Err(infeasible(all, level));
            };
            let fixed = |c: &Candidate| ((1.0 - c.params.lambda) * 100.0).round() / 100.0;
            CutoffSchedule::new(
                CutoffKind::Fixed {
                    tox: fixed(&tox[t]),
                    eff: fixed(&eff[e]),
                },
                interim,
                max,
            )?
        }
        Phase2Design::Bop2 | Phase2Design::Top => {
            let gammas: Vec<f64> = GAMMA_STEPS.map(|g| f64::from(g) * 0.25).collect();
            let tox = margin_candidates(spec, Margin::Tox, &gammas)?;
            let eff = margin_candidates(spec, Margin::Eff, &gammas)?;
            let mut best: Option<(usize, usize, f64, f64)> = None;
            for (i, t) in tox.iter().enumerate() {
                for (j, e) in eff.iter().enumerate() {
                    let null = t.null * e.null;
                    let alt = t.alt * e.alt;
                    if !(null <= spec.alpha && alt > 0.0) {
                        continue;
                    }
                    let replace = match best {
                        None => true,
                        Some((bi, _, ba, bn)) => {
                            better(alt, null, ba, bn)
                                || (alt == ba && null == bn && t.params.lambda > tox[bi].params.lambda)
                        }
                    };
                    if replace {
                        best = Some((i, j, alt, null));
                    }
                }
            }
            let Some((i, j, _, _)) = best else {
                let all = tox.iter().flat_map(|t| {
                    eff.iter().map(move |e| {
                        (
                            t.null * e.null,
                            t.alt * e.alt,
                            format!("tox {:?}, eff {:?}", t.params, e.params),
                        )
                    })
                });
                return Err(infeasible(all, spec.alpha));
            };
            CutoffSchedule::new(
                CutoffKind::Power {
                    tox: tox[i].params,
                    eff: eff[j].params,
                },
                interim,
                max,
            )?
        }
    };
    let (null_go, alt_go) = operating_characteristics(spec, &schedule)?;
    Ok(Calibration {
        design: spec.design,
        boundaries: stopping_boundaries(spec, &schedule)?,
        schedule,
        null_go,
        alt_go,
    })
}

/// [`calibrate`] memoized per distinct specification.
pub fn calibrate_cached(spec: &CalibrationSpec) -> Result<Calibration> {
    static CACHE: OnceLock<Mutex<HashMap<String, Calibration>>> = OnceLock::new();
    let key = format!("{spec:?}");
    let cache = CACHE.get_or_init(Default::default);
    if let Some(c) = cache.lock().expect("calibration cache poisoned").get(&key) {
        return Ok(c.clone());
    }
    let cal = calibrate(spec)?;
    cache
        .lock()
        .expect("calibration cache poisoned")
        .insert(key, cal.clone());
    Ok(cal)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(design: Phase2Design, alpha: f64) -> CalibrationSpec {
        let cfg = TrialConfig {
            type1_alpha: alpha,
            ..Default::default()
        };
        CalibrationSpec::from_config(design, &cfg)
    }

    #[test]
    fn binomial_pmf_sums_to_one() {
        for p in [0.0, 0.2, 0.5, 1.0] {
            let s: f64 = binomial_pmf(17, p).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unconstrained_survival_is_one() {
        let s = margin_survival(&[10, 20], &[(0, 10), (0, 20)], 0.3);
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn default_calibrations_respect_alpha() {
        for d in Phase2Design::ALL {
            let cal = calibrate(&spec(d, 0.10)).unwrap();
            assert!(cal.null_go <= 0.10, "{d}: {}", cal.null_go);
            assert!(cal.alt_go > cal.null_go);
        }
    }

    #[test]
    fn alpha_zero_is_infeasible() {
        assert!(matches!(
            calibrate(&spec(Phase2Design::Bop2, 0.0)),
            Err(Error::Infeasible(_))
        ));
        assert!(calibrate(&spec(Phase2Design::Bop2, -0.1)).is_err());
    }

    #[test]
    fn alpha_one_maximizes_power() {
        let cal = calibrate(&spec(Phase2Design::Bop2, 1.0)).unwrap();
        let tight = calibrate(&spec(Phase2Design::Bop2, 0.1)).unwrap();
        assert!(cal.alt_go >= tight.alt_go);
    }

    #[test]
    fn top_matches_bop2() {
        let a = calibrate(&spec(Phase2Design::Bop2, 0.1)).unwrap();
        let b = calibrate(&spec(Phase2Design::Top, 0.1)).unwrap();
        assert_eq!(a.schedule, b.schedule);
    }
}
