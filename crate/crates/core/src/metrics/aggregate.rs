use serde::{Deserialize, Serialize};

use crate::domain::Classification;
use crate::error::{Error, Result};
use crate::sim::{Combo, ReplicationResult, TerminatedStage};

pub const DAYS_PER_MONTH: f64 = 30.0;

/// Metric names in report order.
pub const METRIC_NAMES: [&str; 11] = [
    "reps",
    "p_rp2d",
    "p_rp2d_tox",
    "p_et_s1",
    "n_tox_s1",
    "dur_s1",
    "p_rp3d",
    "p_et",
    "n_total",
    "n_tox",
    "dur",
];

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub mc_se: f64,
}

impl Estimate {
    fn proportion(hits: usize, n: usize) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            value: p,
            mc_se: (p * (1.0 - p) / n as f64).sqrt(),
        }
    }

    fn mean(xs: impl Iterator<Item = f64> + Clone) -> Self {
        let n = xs.clone().count() as f64;
        let mean = xs.clone().sum::<f64>() / n;
        let var = if n > 1.0 {
            xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            value: mean,
            mc_se: (var / n).sqrt(),
        }
    }
}

/// The ten operating characteristics of one scenario and combination.
/// Durations are in months. `None` marks a metric that does not apply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub scenario: String,
    pub combo: Combo,
    pub reps: usize,
    pub p_rp2d: Option<Estimate>,
    pub p_rp2d_tox: Option<Estimate>,
    pub p_et_s1: Option<Estimate>,
    pub n_tox_s1: Option<Estimate>,
    pub dur_s1: Option<Estimate>,
    pub p_rp3d: Option<Estimate>,
    pub p_et: Option<Estimate>,
    pub n_total: Option<Estimate>,
    pub n_tox: Option<Estimate>,
    pub dur: Option<Estimate>,
}

impl MetricsSummary {
    pub fn get(&self, name: &str) -> Option<Estimate> {
        match name {
            "reps" => Some(Estimate {
                value: self.reps as f64,
                mc_se: 0.0,
            }),
            "p_rp2d" => self.p_rp2d,
            "p_rp2d_tox" => self.p_rp2d_tox,
            "p_et_s1" => self.p_et_s1,
            "n_tox_s1" => self.n_tox_s1,
            "dur_s1" => self.dur_s1,
            "p_rp3d" => self.p_rp3d,
            "p_et" => self.p_et,
            "n_total" => self.n_total,
            "n_tox" => self.n_tox,
            "dur" => self.dur,
            _ => None,
        }
    }

    pub(crate) fn slot(&mut self, name: &str) -> Option<&mut Option<Estimate>> {
        Some(match name {
            "p_rp2d" => &mut self.p_rp2d,
            "p_rp2d_tox" => &mut self.p_rp2d_tox,
            "p_et_s1" => &mut self.p_et_s1,
            "n_tox_s1" => &mut self.n_tox_s1,
            "dur_s1" => &mut self.dur_s1,
            "p_rp3d" => &mut self.p_rp3d,
            "p_et" => &mut self.p_et,
            "n_total" => &mut self.n_total,
            "n_tox" => &mut self.n_tox,
            "dur" => &mut self.dur,
            _ => return None,
        })
    }

    pub(crate) fn empty(scenario: String, combo: Combo, reps: usize) -> Self {
        Self {
            scenario,
            combo,
            reps,
            p_rp2d: None,
            p_rp2d_tox: None,
            p_et_s1: None,
            n_tox_s1: None,
            dur_s1: None,
            p_rp3d: None,
            p_et: None,
            n_total: None,
            n_tox: None,
            dur: None,
        }
    }
}

/// Folds replications into the summary metrics. Selection probabilities for
/// the OBD are absent when the scenario has no OBD.
pub fn aggregate(
    scenario: &str,
    combo: Combo,
    results: &[ReplicationResult],
    class: &Classification,
) -> Result<MetricsSummary> {
    if results.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = results.len();
    let count = |f: &dyn Fn(&ReplicationResult) -> bool| results.iter().filter(|r| f(r)).count();
    let months = |days: f64| days / DAYS_PER_MONTH;
    let mut s = MetricsSummary::empty(scenario.to_string(), combo, n);
    s.p_rp2d = class
        .obd
        .map(|obd| Estimate::proportion(count(&|r| r.rp2ds.contains(&obd)), n));
    s.p_rp2d_tox = Some(Estimate::proportion(
        count(&|r| r.rp2ds.iter().any(|d| class.toxic.contains(d))),
        n,
    ));
    s.p_et_s1 = Some(Estimate::proportion(
        count(&|r| r.terminated_stage == TerminatedStage::Phase1),
        n,
    ));
    s.n_tox_s1 = Some(Estimate::mean(results.iter().map(|r| r.n_tox_s1 as f64)));
    s.dur_s1 = Some(Estimate::mean(results.iter().map(|r| months(r.dur_s1))));
    if combo.p2.is_some() {
        s.p_rp3d = class
            .obd
            .map(|obd| Estimate::proportion(count(&|r| r.rp3d == Some(obd)), n));
        s.p_et = Some(Estimate::proportion(count(&|r| r.rp3d.is_none()), n));
        s.n_total = Some(Estimate::mean(results.iter().map(|r| (r.n_s1 + r.n_s2) as f64)));
        s.n_tox = Some(Estimate::mean(results.iter().map(|r| r.n_tox as f64)));
        s.dur = Some(Estimate::mean(results.iter().map(|r| months(r.dur_total))));
    }
    Ok(s)
}
