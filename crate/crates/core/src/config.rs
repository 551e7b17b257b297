//! Trial configuration with the simulation-study defaults.
//!
//! Configuration files are TOML documents carrying `schema_version = 1` and
//! any subset of the [`TrialConfig`] fields; missing fields take defaults.

use serde::{Deserialize, Serialize};

use crate::domain::UtilityWeights;
use crate::error::{Error, Result};
use crate::phase2::Hypotheses;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Threshold used by the Phase I safety-elimination rule `Pr(p_d > t) > η`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SafetyThreshold {
    /// `t = λ_d`, the de-escalation boundary.
    LambdaD,
    /// `t = φ`, the target toxicity rate.
    Target,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AccrualModel {
    /// Exponential inter-arrival times.
    Poisson,
    /// Fixed spacing of `1 / rate` days.
    Deterministic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum EventTimeModel {
    /// Uniform on `(0, window]` given an event.
    Uniform,
    /// Weibull with scale = window, truncated to `(0, window]`.
    Weibull { shape: f64 },
}

/// What makes a lower dose "cleared" for BF-BOIN backfilling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackfillClearance {
    /// An escalation cohort completed there without a de-escalation signal.
    CohortNotDeescalated,
    /// The dose is merely not safety-eliminated.
    NotEliminated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    pub schema_version: u32,
    /// Number of Phase I dose levels (D1).
    pub n_doses: usize,
    /// Maximum number of RP2Ds carried into Phase II (D2).
    pub max_rp2d: usize,
    pub cohort_size: usize,
    pub max_cohorts: usize,
    /// Maximum Phase II patients per arm (M).
    pub arm_max: usize,
    /// Phase II interim sample sizes `m_1 < … < m_R < M`.
    pub interim_sizes: Vec<usize>,
    /// BOIN target toxicity rate φ.
    pub target: f64,
    pub phi1: f64,
    pub phi2: f64,
    /// Maximum acceptable toxicity probability p_T.
    pub tox_limit: f64,
    /// Minimum acceptable efficacy probability q_E.
    pub eff_min: f64,
    /// Safety cutoff η.
    pub safety_cutoff: f64,
    /// Futility cutoff ζ.
    pub futility_cutoff: f64,
    /// BOIN12 sample-size cutoff N*.
    pub rds_sample_cutoff: usize,
    /// Patients per day in Phase I.
    pub accrual_rate_s1: f64,
    /// Patients per day in Phase II.
    pub accrual_rate_s2: f64,
    pub tox_window: f64,
    pub eff_window: f64,
    pub hypotheses: Hypotheses,
    pub type1_alpha: f64,
    pub pending_fraction_limit: f64,
    pub utility: UtilityWeights,
    pub backfill_cap: usize,
    pub safety_threshold: SafetyThreshold,
    pub min_n_safety: usize,
    /// Keep the selected MTD's isotonic estimate below the de-escalation boundary.
    pub bound_mtd: bool,
    pub min_n_futility: usize,
    /// 1-based interim looks at which efficacy is tested (it is always tested at the final look).
    pub efficacy_looks: Vec<usize>,
    pub accrual: AccrualModel,
    pub event_time: EventTimeModel,
    pub backfill_clearance: BackfillClearance,
    /// Pool Phase I data of an RP2D into its Phase II posterior.
    pub pool_phase1_data: bool,
    /// TITE-BOIN12 also suspends accrual on pending efficacy outcomes.
    pub tite_efficacy_gate: bool,
    /// Beta prior `(a, b)` for each TS margin.
    pub ts_prior: [f64; 2],
}

impl Default for TrialConfig {
    fn default() -> Self {
        let tox_limit = 0.35;
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            n_doses: 6,
            max_rp2d: 2,
            cohort_size: 3,
            max_cohorts: 15,
            arm_max: 40,
            interim_sizes: vec![10, 20, 30],
            target: tox_limit,
            phi1: 0.6 * tox_limit,
            phi2: 1.4 * tox_limit,
            tox_limit,
            eff_min: 0.25,
            safety_cutoff: 0.95,
            futility_cutoff: 0.9,
            rds_sample_cutoff: 6,
            accrual_rate_s1: 0.1,
            accrual_rate_s2: 0.2,
            tox_window: 30.0,
            eff_window: 90.0,
            hypotheses: Hypotheses::default(),
            type1_alpha: 0.10,
            pending_fraction_limit: 0.5,
            utility: UtilityWeights::default(),
            backfill_cap: 12,
            safety_threshold: SafetyThreshold::LambdaD,
            min_n_safety: 3,
            bound_mtd: true,
            min_n_futility: 6,
            efficacy_looks: vec![2],
            accrual: AccrualModel::Poisson,
            event_time: EventTimeModel::Uniform,
            backfill_clearance: BackfillClearance::CohortNotDeescalated,
            pool_phase1_data: false,
            tite_efficacy_gate: true,
            ts_prior: [1.0, 1.0],
        }
    }
}

impl TrialConfig {
    /// Maximum Phase I escalation sample size N1.
    pub fn n1(&self) -> usize {
        self.max_cohorts * self.cohort_size
    }

    /// Maximum Phase II sample size N2.
    pub fn n2(&self) -> usize {
        self.max_rp2d * self.arm_max
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::SchemaVersion(self.schema_version));
        }
        if self.n_doses == 0 || self.max_rp2d == 0 || self.cohort_size == 0 || self.max_cohorts == 0 {
            return bad("dose count, RP2D count, cohort size and cohort count must be positive".into());
        }
        if !(0.0 < self.phi1 && self.phi1 < self.target && self.target < self.phi2 && self.phi2 < 1.0) {
            return bad(format!(
                "need 0 < phi1 < target < phi2 < 1, got ({}, {}, {})",
                self.phi1, self.target, self.phi2
            ));
        }
        for (name, v) in [
            ("tox_limit", self.tox_limit),
            ("eff_min", self.eff_min),
            ("safety_cutoff", self.safety_cutoff),
            ("futility_cutoff", self.futility_cutoff),
            ("pending_fraction_limit", self.pending_fraction_limit),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} outside [0, 1]"));
            }
        }
        if !(self.type1_alpha > 0.0 && self.type1_alpha <= 1.0) {
            return bad(format!("type1_alpha = {} outside (0, 1]", self.type1_alpha));
        }
        let mut prev = 0;
        for &m in &self.interim_sizes {
            if m <= prev {
                return bad(format!(
                    "interim sizes must be increasing and positive: {:?}",
                    self.interim_sizes
                ));
            }
            prev = m;
        }
        if prev >= self.arm_max {
            return bad(format!(
                "interim sizes {:?} must be below arm_max {}",
                self.interim_sizes, self.arm_max
            ));
        }
        for &r in &self.efficacy_looks {
            if r == 0 || r > self.interim_sizes.len() {
                return bad(format!("efficacy look {r} is not an interim index"));
            }
        }
        if self.accrual_rate_s1 <= 0.0 || self.accrual_rate_s2 <= 0.0 {
            return bad("accrual rates must be positive".into());
        }
        if self.tox_window <= 0.0 || self.eff_window <= 0.0 {
            return bad("assessment windows must be positive".into());
        }
        if let EventTimeModel::Weibull { shape } = self.event_time {
            if shape <= 0.0 {
                return bad(format!("weibull shape {shape} must be positive"));
            }
        }
        if self.ts_prior.iter().any(|&a| a <= 0.0) {
            return bad(format!("ts_prior {:?} must be positive", self.ts_prior));
        }
        self.hypotheses.validate()?;
        self.utility.validate()
    }

    pub fn from_toml_str(src: &str) -> Result<Self> {
        Self::from_layers(Some(src), &[])
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Builds a config from defaults, then an optional TOML document, then
    /// `key = value` overrides (dotted keys reach nested tables). Later layers win.
    pub fn from_layers(file: Option<&str>, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(&Self::default().to_toml_string()).map_err(|e| Error::Parse(e.to_string()))?;
        if let Some(src) = file {
            let user: toml::Table = toml::from_str(src).map_err(|e| Error::Parse(e.to_string()))?;
            merge(&mut table, user);
        }
        for (key, raw) in overrides {
            let value = parse_value(raw);
            let mut path: Vec<&str> = key.split('.').collect();
            let leaf = path.pop().expect("split yields one element");
            let mut node = &mut table;
            for part in path {
                node = node
                    .entry(part.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .ok_or_else(|| Error::Parse(format!("override key {key}: {part} is not a table")))?;
            }
            node.insert(leaf.to_string(), value);
        }
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
