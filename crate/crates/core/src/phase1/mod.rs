//! Phase I dose finding: BOIN, TITE-BOIN, BF-BOIN, BOIN12 and TITE-BOIN12.

mod boundaries;
mod policy;
mod rds;
mod rules;
mod select;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use boundaries::{boin_decision, boundary_table, BoinBoundaries, BoinDecision, BoundaryRow};
pub use policy::{DoseData, Phase1Action, Phase1Policy, Phase1State, Phase1Status, SuspendReason};
pub use rds::{rds, rds_rank, utility_benchmark, UtilityData};
pub use rules::{accrual_gate, effective_counts, futility_eliminate, safety_eliminate, tite_effective_rate};
pub use select::{select_mtd, select_obd};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase1Design {
    #[serde(rename = "boin")]
    Boin,
    #[serde(rename = "tite-boin")]
    TiteBoin,
    #[serde(rename = "bf-boin")]
    BfBoin,
    #[serde(rename = "boin12")]
    Boin12,
    #[serde(rename = "tite-boin12")]
    TiteBoin12,
}

impl Phase1Design {
    pub const ALL: [Phase1Design; 5] = [Self::Boin, Self::TiteBoin, Self::BfBoin, Self::Boin12, Self::TiteBoin12];

    pub fn token(self) -> &'static str {
        match self {
            Self::Boin => "boin",
            Self::TiteBoin => "tite-boin",
            Self::BfBoin => "bf-boin",
            Self::Boin12 => "boin12",
            Self::TiteBoin12 => "tite-boin12",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Boin => "BOIN",
            Self::TiteBoin => "TITE-BOIN",
            Self::BfBoin => "BF-BOIN",
            Self::Boin12 => "BOIN12",
            Self::TiteBoin12 => "TITE-BOIN12",
        }
    }

    /// Decisions use fractional follow-up of pending patients.
    pub fn is_tite(self) -> bool {
        matches!(self, Self::TiteBoin | Self::TiteBoin12)
    }

    /// Finds the OBD from toxicity and efficacy rather than the MTD.
    pub fn is_obd(self) -> bool {
        matches!(self, Self::Boin12 | Self::TiteBoin12)
    }
}

impl fmt::Display for Phase1Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Phase1Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|d| d.token().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown Phase I design {s:?}")))
    }
}
