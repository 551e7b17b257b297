use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase1::Phase1Design;
use crate::phase2::Phase2Design;
use crate::sim::Combo;

use super::aggregate::{Estimate, MetricsSummary, METRIC_NAMES};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(Self::Text),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::UnsupportedFormat(s.to_string())),
        }
    }
}

/// One row of the long-format metrics table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Row {
    scenario: String,
    p1_design: String,
    p2_design: String,
    metric: String,
    value: Option<f64>,
    mc_se: Option<f64>,
}

fn rows(summaries: &[MetricsSummary]) -> Vec<Row> {
    summaries
        .iter()
        .flat_map(|s| {
            METRIC_NAMES.iter().map(move |&m| {
                let e = s.get(m);
                Row {
                    scenario: s.scenario.clone(),
                    p1_design: s.combo.p1.token().to_string(),
                    p2_design: s.combo.p2.map_or(String::new(), |d| d.token().to_string()),
                    metric: m.to_string(),
                    value: e.map(|e| e.value),
                    mc_se: e.map(|e| e.mc_se),
                }
            })
        })
        .collect()
}

pub fn render(summaries: &[MetricsSummary], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => render_csv(summaries),
        ReportFormat::Json => serde_json::to_string_pretty(&rows(summaries)).map_err(|e| Error::Parse(e.to_string())),
        ReportFormat::Text => Ok(render_text(summaries)),
    }
}

fn render_csv(summaries: &[MetricsSummary]) -> Result<String> {
    let mut out = String::from("scenario,p1_design,p2_design,metric,value,mc_se\n");
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let na = |v: Option<f64>| v.map_or("NA".to_string(), |v| v.to_string());
    for r in rows(summaries) {
        w.write_record([
            r.scenario.as_str(),
            r.p1_design.as_str(),
            r.p2_design.as_str(),
            r.metric.as_str(),
            &na(r.value),
            &na(r.mc_se),
        ])
        .map_err(|e| Error::Parse(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    out.push_str(&String::from_utf8(body).map_err(|e| Error::Parse(e.to_string()))?);
    Ok(out)
}

/// Reads a CSV document produced by [`render`] back into summaries.
pub fn parse_csv(src: &str) -> Result<Vec<MetricsSummary>> {
    let mut rdr = csv::Reader::from_reader(src.as_bytes());
    let mut out: Vec<MetricsSummary> = Vec::new();
    let num = |s: &str| -> Result<Option<f64>> {
        if s == "NA" {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|_| Error::Parse(format!("bad number {s:?}")))
        }
    };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.len() != 6 {
            return Err(Error::Parse(format!("expected 6 columns, got {}", rec.len())));
        }
        let combo = Combo {
            p1: rec[1].parse::<Phase1Design>()?,
            p2: if rec[2].is_empty() {
                None
            } else {
                Some(rec[2].parse::<Phase2Design>()?)
            },
        };
        let fresh = out.last().is_none_or(|s| s.scenario != rec[0] || s.combo != combo);
        if fresh {
            out.push(MetricsSummary::empty(rec[0].to_string(), combo, 0));
        }
        let s = out.last_mut().expect("pushed above");
        let value = num(&rec[4])?;
        let mc_se = num(&rec[5])?;
        if &rec[3] == "reps" {
            s.reps = value.ok_or_else(|| Error::Parse("reps is NA".into()))? as usize;
            continue;
        }
        let slot = s
            .slot(&rec[3])
            .ok_or_else(|| Error::Parse(format!("unknown metric {:?}", &rec[3])))?;
        *slot = match (value, mc_se) {
            (Some(value), Some(mc_se)) => Some(Estimate { value, mc_se }),
            _ => None,
        };
    }
    Ok(out)
}

fn pct(e: Option<Estimate>) -> String {
    e.map_or("NA".into(), |e| format!("{:.1}%", 100.0 * e.value))
}

fn num(e: Option<Estimate>) -> String {
    e.map_or("NA".into(), |e| format!("{:.1}", e.value))
}

fn render_text(summaries: &[MetricsSummary]) -> String {
    let mut out = String::from("Operating characteristics (durations in months)\n");
    let mut scenarios: Vec<&str> = Vec::new();
    for s in summaries {
        if !scenarios.contains(&s.scenario.as_str()) {
            scenarios.push(&s.scenario);
        }
    }
    for sc in scenarios {
        let rows: Vec<&MetricsSummary> = summaries.iter().filter(|s| s.scenario == sc).collect();
        let p1s: Vec<Phase1Design> = Phase1Design::ALL
            .into_iter()
            .filter(|d| rows.iter().any(|s| s.combo.p1 == *d))
            .collect();
        let _ = writeln!(out, "\n{sc}: Phase I");
        let _ = writeln!(
            out,
            "{:<12} {:>8} {:>11} {:>8} {:>9} {:>7}",
            "Design", "p_rp2d", "p_rp2d,tox", "p_et,s1", "n_tox,s1", "Dur_s1"
        );
        for &p1 in &p1s {
            let s = rows.iter().find(|s| s.combo.p1 == p1).expect("filtered above");
            let _ = writeln!(
                out,
                "{:<12} {:>8} {:>11} {:>8} {:>9} {:>7}",
                p1.label(),
                pct(s.p_rp2d),
                pct(s.p_rp2d_tox),
                pct(s.p_et_s1),
                num(s.n_tox_s1),
                num(s.dur_s1)
            );
        }
        let p2s: Vec<Phase2Design> = Phase2Design::ALL
            .into_iter()
            .filter(|d| rows.iter().any(|s| s.combo.p2 == Some(*d)))
            .collect();
        if p2s.is_empty() {
            continue;
        }
        let _ = writeln!(out, "\n{sc}: overall");
        let groups = [
            ("p_rp3d (%)", true),
            ("p_et (%)", true),
            ("n_total", false),
            ("n_tox", false),
            ("Dur", false),
        ];
        let width = 7;
        let mut header = format!("{:<12}", "Design");
        let mut sub = format!("{:<12}", "");
        for (g, _) in groups {
            let _ = write!(header, " | {:^w$}", g, w = p2s.len() * (width + 1) - 1);
            sub.push_str(" |");
            for p2 in &p2s {
                let _ = write!(sub, " {:>width$}", p2.label());
            }
        }
        let _ = writeln!(out, "{header}\n{sub}");
        for &p1 in &p1s {
            let mut line = format!("{:<12}", p1.label());
            for (g, is_pct) in groups {
                line.push_str(" |");
                for &p2 in &p2s {
                    let s = rows.iter().find(|s| s.combo == Combo { p1, p2: Some(p2) });
                    let e = s.and_then(|s| match g {
                        "p_rp3d (%)" => s.p_rp3d,
                        "p_et (%)" => s.p_et,
                        "n_total" => s.n_total,
                        "n_tox" => s.n_tox,
                        _ => s.dur,
                    });
                    let cell = match (s, e) {
                        (None, _) => String::new(),
                        (Some(_), None) => String::new(),
                        (Some(_), Some(e)) if is_pct => format!("{:.1}", 100.0 * e.value),
                        (Some(_), Some(e)) => format!("{:.1}", e.value),
                    };
                    let _ = write!(line, " {cell:>width$}");
                }
            }
            let _ = writeln!(out, "{}", line.trim_end());
        }
    }
    out
}
