//! Published operating characteristics and utilities used as acceptance
//! references, with the tolerance bands they are compared under.

use serde::Deserialize;
use twostage::metrics::MetricsSummary;
use twostage::phase1::Phase1Design;
use twostage::phase2::Phase2Design;
use twostage::sim::Combo;

/// Published (toxicity, efficacy, utility) per scenario and dose.
pub const PUBLISHED_UTILITIES: [[(f64, f64, f64); 6]; 9] = [
    [
        (0.05, 0.02, 39.2),
        (0.10, 0.05, 39.0),
        (0.15, 0.15, 43.0),
        (0.22, 0.40, 55.2),
        (0.30, 0.50, 58.0),
        (0.40, 0.55, 57.0),
    ],
    [
        (0.02, 0.05, 42.2),
        (0.08, 0.30, 54.8),
        (0.15, 0.45, 61.0),
        (0.30, 0.50, 58.0),
        (0.40, 0.55, 57.0),
        (0.45, 0.58, 56.8),
    ],
    [
        (0.05, 0.02, 39.2),
        (0.10, 0.05, 39.0),
        (0.20, 0.10, 38.0),
        (0.40, 0.15, 33.0),
        (0.45, 0.30, 40.0),
        (0.50, 0.45, 47.0),
    ],
    [
        (0.05, 0.10, 44.0),
        (0.10, 0.20, 48.0),
        (0.20, 0.40, 56.0),
        (0.30, 0.60, 64.0),
        (0.45, 0.55, 55.0),
        (0.50, 0.45, 47.0),
    ],
    [
        (0.05, 0.30, 56.0),
        (0.10, 0.50, 66.0),
        (0.20, 0.60, 68.0),
        (0.25, 0.45, 57.0),
        (0.30, 0.40, 52.0),
        (0.45, 0.35, 43.0),
    ],
    [
        (0.05, 0.02, 39.2),
        (0.10, 0.05, 39.0),
        (0.20, 0.10, 38.0),
        (0.30, 0.18, 38.8),
        (0.40, 0.35, 45.0),
        (0.45, 0.30, 40.0),
    ],
    [
        (0.05, 0.05, 41.0),
        (0.10, 0.20, 48.0),
        (0.20, 0.40, 56.0),
        (0.30, 0.55, 61.0),
        (0.40, 0.55, 57.0),
        (0.45, 0.55, 55.0),
    ],
    [
        (0.05, 0.10, 44.0),
        (0.15, 0.25, 49.0),
        (0.20, 0.40, 56.0),
        (0.30, 0.45, 55.0),
        (0.40, 0.50, 54.0),
        (0.50, 0.50, 50.0),
    ],
    [
        (0.05, 0.02, 39.2),
        (0.15, 0.08, 38.8),
        (0.25, 0.15, 39.0),
        (0.32, 0.20, 39.2),
        (0.40, 0.20, 36.0),
        (0.45, 0.20, 34.0),
    ],
];

const PHASE1_CSV: &str = include_str!("../data/phase1_reference.csv");
const OVERALL_CSV: &str = include_str!("../data/overall_reference.csv");

/// Phase I metrics of one scenario and design, proportions in percent.
/// `NA` cells read as `None`.
#[derive(Clone, Debug, Deserialize)]
pub struct Phase1Row {
    pub scenario: String,
    pub p1_design: Phase1Design,
    #[serde(deserialize_with = "csv::invalid_option")]
    pub p_rp2d: Option<f64>,
    #[serde(deserialize_with = "csv::invalid_option")]
    pub p_rp2d_tox: Option<f64>,
    #[serde(deserialize_with = "csv::invalid_option")]
    pub p_et_s1: Option<f64>,
    #[serde(deserialize_with = "csv::invalid_option")]
    pub n_tox_s1: Option<f64>,
    #[serde(deserialize_with = "csv::invalid_option")]
    pub dur_s1: Option<f64>,
}

/// Overall metrics of one scenario and design combination.
#[derive(Clone, Debug, Deserialize)]
pub struct OverallRow {
    pub scenario: String,
    pub p1_design: Phase1Design,
    pub p2_design: Phase2Design,
    #[serde(deserialize_with = "csv::invalid_option")]
    pub p_rp3d: Option<f64>,
    #[serde(deserialize_with = "csv::invalid_option")]
    pub p_et: Option<f64>,
    #[serde(deserialize_with = "csv::invalid_option")]
    pub n_total: Option<f64>,
    #[serde(deserialize_with = "csv::invalid_option")]
    pub n_tox: Option<f64>,
    #[serde(deserialize_with = "csv::invalid_option")]
    pub dur: Option<f64>,
}

fn parse<T: for<'de> Deserialize<'de>>(src: &str) -> Vec<T> {
    csv::Reader::from_reader(src.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .expect("bundled reference tables parse")
}

pub fn phase1_reference() -> Vec<Phase1Row> {
    parse(PHASE1_CSV)
}

pub fn overall_reference() -> Vec<OverallRow> {
    parse(OVERALL_CSV)
}

impl Phase1Row {
    pub fn get(&self, metric: &str) -> Option<f64> {
        match metric {
            "p_rp2d" => self.p_rp2d,
            "p_rp2d_tox" => self.p_rp2d_tox,
            "p_et_s1" => self.p_et_s1,
            "n_tox_s1" => self.n_tox_s1,
            "dur_s1" => self.dur_s1,
            _ => None,
        }
    }
}

impl OverallRow {
    pub fn combo(&self) -> Combo {
        Combo {
            p1: self.p1_design,
            p2: Some(self.p2_design),
        }
    }

    pub fn get(&self, metric: &str) -> Option<f64> {
        match metric {
            "p_rp3d" => self.p_rp3d,
            "p_et" => self.p_et,
            "n_total" => self.n_total,
            "n_tox" => self.n_tox,
            "dur" => self.dur,
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Band {
    /// Absolute width in the metric's reported unit.
    Absolute(f64),
    /// Fraction of the published value.
    Relative(f64),
}

impl Band {
    pub fn contains(self, got: f64, published: f64) -> bool {
        match self {
            Band::Absolute(w) => (got - published).abs() <= w,
            Band::Relative(r) => (got - published).abs() <= r * published.abs(),
        }
    }
}

/// A simulated metric in the published unit: percent for proportions.
pub fn reported(s: &MetricsSummary, metric: &str) -> Option<f64> {
    s.get(metric).map(|e| {
        if metric.starts_with("p_") {
            100.0 * e.value
        } else {
            e.value
        }
    })
}

/// Describes the cell when `got` is outside `band` around `published`.
/// A metric that is NA on one side only is always a miss.
pub fn miss(label: &str, metric: &str, got: Option<f64>, published: Option<f64>, band: Band) -> Option<String> {
    let show = |v: Option<f64>| v.map_or("NA".to_string(), |v| format!("{v:.1}"));
    let ok = match (got, published) {
        (None, None) => true,
        (Some(g), Some(p)) => band.contains(g, p),
        _ => false,
    };
    (!ok).then(|| format!("{label} {metric}: {} vs published {}", show(got), show(published)))
}
