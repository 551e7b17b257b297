//! Phase II go/no-go monitoring (TS, BOP2, TOP), cutoff calibration and
//! RP3D selection.

mod calibrate;
mod monitor;
mod schedule;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};

pub use calibrate::{
    calibrate, calibrate_cached, margin_survival, operating_characteristics, stopping_boundaries, Calibration,
    CalibrationSpec, LookBoundary, MarginPriors,
};
pub use monitor::{select_rp3d, ArmState, ArmStatus, LookData, LookDecision, MarginData, Phase2Monitor};
pub use schedule::{CutoffKind, CutoffSchedule, LookPlan, PowerParams};

/// Point hypotheses for the toxicity and efficacy margins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hypotheses {
    pub p_null: f64,
    pub p_alt: f64,
    pub q_null: f64,
    pub q_alt: f64,
}

impl Default for Hypotheses {
    fn default() -> Self {
        Self {
            p_null: 0.35,
            p_alt: 0.20,
            q_null: 0.25,
            q_alt: 0.45,
        }
    }
}

impl Hypotheses {
    pub fn validate(&self) -> Result<()> {
        check_probability("p_null", self.p_null)?;
        check_probability("p_alt", self.p_alt)?;
        check_probability("q_null", self.q_null)?;
        check_probability("q_alt", self.q_alt)?;
        if !(self.p_alt < self.p_null && self.q_null < self.q_alt) {
            return Err(Error::InvalidParameter(format!(
                "hypotheses need p_alt < p_null and q_null < q_alt, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase2Design {
    #[serde(rename = "ts")]
    Ts,
    #[serde(rename = "bop2")]
    Bop2,
    #[serde(rename = "top")]
    Top,
}

impl Phase2Design {
    pub const ALL: [Phase2Design; 3] = [Self::Ts, Self::Bop2, Self::Top];

    pub fn token(self) -> &'static str {
        match self {
            Self::Ts => "ts",
            Self::Bop2 => "bop2",
            Self::Top => "top",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Ts => "TS",
            Self::Bop2 => "BOP2",
            Self::Top => "TOP",
        }
    }
}

impl fmt::Display for Phase2Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Phase2Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.token().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown Phase II design {s:?}")))
    }
}

/// Which margin a cutoff or boundary refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Margin {
    Tox,
    Eff,
}
