//! Scenario files and the bundled scenario library.
//!
//! Schema (TOML):
//!
//! ```toml
//! schema_version = 1
//!
//! [[scenario]]
//! name = "scenario-1"
//! true_obd = 5          # optional; a dose level or "none"
//! true_mtd = 5          # optional; a dose level or "none"
//! tox = [0.05, 0.10, 0.15, 0.22, 0.30, 0.40]
//! eff = [0.02, 0.05, 0.15, 0.40, 0.50, 0.55]
//! utility = [39.2, 39.0, 43.0, 55.2, 58.0, 57.0]   # optional; derived when omitted
//! ```
//!
//! Utilities, when given, must agree with `expected_utility` to within
//! [`UTILITY_TOLERANCE`]. Labels, when given, are cross-checked against the
//! probabilities.

use serde::Deserialize;

use crate::config::TrialConfig;
use crate::domain::{classify_doses, expected_utility, Dose, DoseProfile, Scenario};
use crate::error::{check_probability, Error, Result};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;
pub const UTILITY_TOLERANCE: f64 = 0.1;

const BUNDLED: [(&str, &str); 9] = [
    ("scenario-1", include_str!("../data/scenario-1.toml")),
    ("scenario-2", include_str!("../data/scenario-2.toml")),
    ("scenario-3", include_str!("../data/scenario-3.toml")),
    ("scenario-4", include_str!("../data/scenario-4.toml")),
    ("scenario-5", include_str!("../data/scenario-5.toml")),
    ("scenario-6", include_str!("../data/scenario-6.toml")),
    ("scenario-7", include_str!("../data/scenario-7.toml")),
    ("scenario-8", include_str!("../data/scenario-8.toml")),
    ("scenario-9", include_str!("../data/scenario-9.toml")),
];

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDoc {
    schema_version: u32,
    #[serde(default)]
    scenario: Vec<ScenarioDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    name: String,
    #[serde(default)]
    true_obd: Option<Label>,
    #[serde(default)]
    true_mtd: Option<Label>,
    tox: Vec<f64>,
    eff: Vec<f64>,
    #[serde(default)]
    utility: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Label {
    Dose(usize),
    Text(String),
}

impl Label {
    fn resolve(&self, label: &'static str) -> Result<Option<usize>> {
        match self {
            Label::Dose(d) if *d >= 1 => Ok(Some(*d)),
            Label::Text(s) if s == "none" => Ok(None),
            Label::Dose(d) => Err(Error::Parse(format!("{label} = {d}: dose levels are 1-based"))),
            Label::Text(s) => Err(Error::Parse(format!(
                "{label} = {s:?}: expected a dose level or \"none\""
            ))),
        }
    }
}

/// Parses and validates every scenario in a TOML document.
pub fn load_scenarios(src: &str, cfg: &TrialConfig) -> Result<Vec<Scenario>> {
    let doc: FileDoc = toml::from_str(src).map_err(|e| Error::Parse(e.to_string()))?;
    if doc.schema_version != SCENARIO_SCHEMA_VERSION {
        return Err(Error::SchemaVersion(doc.schema_version));
    }
    doc.scenario.into_iter().map(|s| build(s, cfg)).collect()
}

fn build(doc: ScenarioDoc, cfg: &TrialConfig) -> Result<Scenario> {
    let name = doc.name;
    if doc.tox.is_empty() {
        return Err(Error::Parse(format!("scenario {name}: no doses")));
    }
    if doc.tox.len() != doc.eff.len() || doc.utility.as_ref().is_some_and(|u| u.len() != doc.tox.len()) {
        return Err(Error::Parse(format!("scenario {name}: tox/eff/utility lengths differ")));
    }
    let mut doses = Vec::with_capacity(doc.tox.len());
    for (i, (&p, &q)) in doc.tox.iter().zip(&doc.eff).enumerate() {
        check_probability("tox", p)?;
        check_probability("eff", q)?;
        if i > 0 && p <= doc.tox[i - 1] {
            return Err(Error::Monotonicity {
                scenario: name,
                dose: i + 1,
            });
        }
        let computed = expected_utility(p, q, &cfg.utility, None)?;
        let utility = match &doc.utility {
            Some(u) if (u[i] - computed).abs() > UTILITY_TOLERANCE => {
                return Err(Error::UtilityMismatch {
                    scenario: name,
                    dose: i + 1,
                    given: u[i],
                    computed,
                })
            }
            Some(u) => u[i],
            None => computed,
        };
        doses.push(DoseProfile {
            tox_prob: p,
            eff_prob: q,
            utility,
        });
    }
    let class = classify_doses(&doses, cfg.tox_limit, cfg.eff_min);
    for (label, given, computed) in [
        ("true_obd", &doc.true_obd, class.obd),
        ("true_mtd", &doc.true_mtd, class.mtd),
    ] {
        if let Some(given) = given {
            let given = given.resolve(label)?;
            if given != computed.map(|d| d.0) {
                return Err(Error::LabelMismatch {
                    scenario: name,
                    label,
                    given,
                    computed: computed.map(|d| d.0),
                });
            }
        }
    }
    Ok(Scenario {
        name,
        doses,
        true_obd: class.obd,
        true_mtd: class.mtd,
    })
}

/// Names of the bundled scenarios, in order.
pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// Raw TOML of a bundled scenario.
pub fn bundled_source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Bundled scenario `k` (1-based).
pub fn bundled(k: usize, cfg: &TrialConfig) -> Result<Scenario> {
    let (_, src) = BUNDLED
        .get(k.wrapping_sub(1))
        .ok_or_else(|| Error::InvalidParameter(format!("no bundled scenario {k}")))?;
    let mut v = load_scenarios(src, cfg)?;
    Ok(v.remove(0))
}

pub fn bundled_scenarios(cfg: &TrialConfig) -> Result<Vec<Scenario>> {
    (1..=BUNDLED.len()).map(|k| bundled(k, cfg)).collect()
}

/// Parses selections like `1-9`, `1,3,5`, or `2-4,7` into 1-based indices.
pub fn parse_selection(spec: &str, max: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (lo, hi) = match part.split_once('-') {
            Some((a, b)) => (parse_index(a)?, parse_index(b)?),
            None => {
                let k = parse_index(part)?;
                (k, k)
            }
        };
        if lo == 0 || lo > hi || hi > max {
            return Err(Error::InvalidParameter(format!("selection {part:?} outside 1..={max}")));
        }
        out.extend(lo..=hi);
    }
    if out.is_empty() {
        return Err(Error::InvalidParameter("empty selection".into()));
    }
    out.dedup();
    Ok(out)
}

fn parse_index(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Parse(format!("bad index {s:?}")))
}

impl Scenario {
    /// Renders the scenario in the file schema.
    pub fn to_toml(&self) -> String {
        let list = |f: &dyn Fn(&DoseProfile) -> f64| {
            self.doses
                .iter()
                .map(|d| format!("{}", f(d)))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let label = |d: Option<Dose>| d.map_or("\"none\"".to_string(), |d| d.0.to_string());
        format!(
            "schema_version = {SCENARIO_SCHEMA_VERSION}\n\n[[scenario]]\nname = {:?}\ntrue_obd = {}\ntrue_mtd = {}\ntox = [{}]\neff = [{}]\nutility = [{}]\n",
            self.name,
            label(self.true_obd),
            label(self.true_mtd),
            list(&|d| d.tox_prob),
            list(&|d| d.eff_prob),
            list(&|d| d.utility),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> TrialConfig {
        TrialConfig::default()
    }

    #[test]
    fn bundled_scenario_one() {
        let s = bundled(1, &cfg()).unwrap();
        let tox: Vec<f64> = s.doses.iter().map(|d| d.tox_prob).collect();
        assert_eq!(tox, vec![0.05, 0.10, 0.15, 0.22, 0.30, 0.40]);
        assert_eq!(s.true_obd, Some(Dose(5)));
    }

    #[test]
    fn non_strict_toxicity_rejected() {
        let src = "schema_version = 1\n[[scenario]]\nname = \"x\"\ntox = [0.1, 0.1, 0.2]\neff = [0.1, 0.2, 0.3]\n";
        assert!(matches!(
            load_scenarios(src, &cfg()),
            Err(Error::Monotonicity { dose: 2, .. })
        ));
    }

    #[test]
    fn omitted_utility_is_derived() {
        let src = "schema_version = 1\n[[scenario]]\nname = \"x\"\ntox = [0.1, 0.2]\neff = [0.3, 0.6]\n";
        let s = &load_scenarios(src, &cfg()).unwrap()[0];
        let want: Vec<f64> = [(0.1, 0.3), (0.2, 0.6)]
            .iter()
            .map(|&(p, q)| expected_utility(p, q, &cfg().utility, None).unwrap())
            .collect();
        assert_eq!(s.doses.iter().map(|d| d.utility).collect::<Vec<_>>(), want);
    }

    #[test]
    fn utility_mismatch_and_labels_checked() {
        let src = "schema_version = 1\n[[scenario]]\nname = \"x\"\ntox = [0.1, 0.2]\neff = [0.3, 0.6]\nutility = [54.0, 70.0]\n";
        assert!(matches!(
            load_scenarios(src, &cfg()),
            Err(Error::UtilityMismatch { dose: 2, .. })
        ));
        let src = "schema_version = 1\n[[scenario]]\nname = \"x\"\ntrue_obd = 1\ntox = [0.1, 0.2]\neff = [0.3, 0.6]\n";
        assert!(matches!(load_scenarios(src, &cfg()), Err(Error::LabelMismatch { .. })));
        let src = "schema_version = 2\n";
        assert!(matches!(load_scenarios(src, &cfg()), Err(Error::SchemaVersion(2))));
        assert!(matches!(load_scenarios("not toml [", &cfg()), Err(Error::Parse(_))));
    }

    #[test]
    fn round_trip_through_schema() {
        for s in bundled_scenarios(&cfg()).unwrap() {
            let back = load_scenarios(&s.to_toml(), &cfg()).unwrap();
            assert_eq!(back, vec![s]);
        }
    }

    #[test]
    fn selections() {
        assert_eq!(parse_selection("1-9", 9).unwrap(), (1..=9).collect::<Vec<_>>());
        assert_eq!(parse_selection("2,5-6", 9).unwrap(), vec![2, 5, 6]);
        assert!(parse_selection("0-3", 9).is_err());
        assert!(parse_selection("4-10", 9).is_err());
    }
}
