//! Commands behind the `twostage` binary. Each returns the document the
//! binary prints or writes, so the library and the binary agree by construction.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use twostage::domain::classify_scenario;
use twostage::metrics::{aggregate, parse_csv, render, MetricsSummary, ReportFormat};
use twostage::phase1::{boundary_table, BoinBoundaries, Phase1Policy};
use twostage::phase2::{calibrate, Calibration, CalibrationSpec, CutoffKind, Phase2Design};
use twostage::scenario::{bundled_scenarios, load_scenarios, parse_selection};
use twostage::sim::{run_batch, trial_seeds, Combo, Simulator, TrialEvent};
use twostage::{Scenario, TrialConfig};

/// Failures split by exit status: bad input exits 2, everything else 1.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Runtime(e) => e,
        }
    }
}

pub type CmdResult<T> = std::result::Result<T, Failure>;

fn config_err<T, E: Into<anyhow::Error>>(r: std::result::Result<T, E>) -> CmdResult<T> {
    r.map_err(|e| Failure::Config(e.into()))
}

fn runtime_err<T, E: Into<anyhow::Error>>(r: std::result::Result<T, E>) -> CmdResult<T> {
    r.map_err(|e| Failure::Runtime(e.into()))
}

/// Splits `key=value` into its parts.
pub fn parse_override(s: &str) -> std::result::Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(format!("expected key=value, got {s:?}")),
    }
}

/// Defaults, then the optional config file, then overrides.
pub fn load_config(file: Option<&Path>, overrides: &[(String, String)]) -> CmdResult<TrialConfig> {
    let src = match file {
        Some(p) => Some(config_err(
            fs::read_to_string(p).with_context(|| format!("reading config {}", p.display())),
        )?),
        None => None,
    };
    config_err(TrialConfig::from_layers(src.as_deref(), overrides))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DocFormat {
    Text,
    Json,
}

impl std::str::FromStr for DocFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(Self::Text),
            "json" => Ok(Self::Json),
            other => Err(format!("unsupported format {other:?} (text, json)")),
        }
    }
}

#[derive(Serialize)]
struct BoundaryDoc {
    phi: f64,
    phi1: f64,
    phi2: f64,
    lambda_e: f64,
    lambda_d: f64,
    elimination_threshold: f64,
    safety_cutoff: f64,
    rows: Vec<twostage::phase1::BoundaryRow>,
}

/// BOIN decision table for `n = 1..=n_max` under `cfg`'s target and bracket.
pub fn cmd_boundaries(cfg: &TrialConfig, n_max: usize, format: DocFormat) -> CmdResult<String> {
    let b = config_err(BoinBoundaries::new(cfg.target, cfg.phi1, cfg.phi2))?;
    let policy = config_err(Phase1Policy::new(twostage::phase1::Phase1Design::Boin, cfg))?;
    let rows = config_err(boundary_table(
        &b,
        n_max,
        policy.safety_threshold,
        cfg.safety_cutoff,
        cfg.min_n_safety,
    ))?;
    let doc = BoundaryDoc {
        phi: cfg.target,
        phi1: cfg.phi1,
        phi2: cfg.phi2,
        lambda_e: b.lambda_e,
        lambda_d: b.lambda_d,
        elimination_threshold: policy.safety_threshold,
        safety_cutoff: cfg.safety_cutoff,
        rows,
    };
    match format {
        DocFormat::Json => runtime_err(serde_json::to_string_pretty(&doc)),
        DocFormat::Text => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "BOIN boundaries: phi = {:.3}, phi1 = {:.3}, phi2 = {:.3}",
                doc.phi, doc.phi1, doc.phi2
            );
            let _ = writeln!(s, "lambda_e = {:.3}, lambda_d = {:.3}", doc.lambda_e, doc.lambda_d);
            let _ = writeln!(
                s,
                "eliminate when Pr(p > {:.3} | data) > {}",
                doc.elimination_threshold, doc.safety_cutoff
            );
            let _ = writeln!(s);
            let _ = writeln!(
                s,
                "{:>4} {:>10} {:>12} {:>11}",
                "n", "escalate<=", "deescalate>=", "eliminate>="
            );
            let na = |v: Option<usize>| v.map_or("NA".to_string(), |k| k.to_string());
            for r in &doc.rows {
                let _ = writeln!(
                    s,
                    "{:>4} {:>10} {:>12} {:>11}",
                    r.n,
                    r.escalate_max,
                    na(r.deescalate_min),
                    na(r.eliminate_min)
                );
            }
            Ok(s)
        }
    }
}

/// Calibrated cutoff schedule of `design` under `cfg`.
pub fn calibration(design: Phase2Design, cfg: &TrialConfig) -> CmdResult<Calibration> {
    config_err(calibrate(&CalibrationSpec::from_config(design, cfg)))
}

pub fn cmd_calibrate(design: Phase2Design, cfg: &TrialConfig, format: DocFormat) -> CmdResult<String> {
    let cal = calibration(design, cfg)?;
    match format {
        DocFormat::Json => runtime_err(serde_json::to_string_pretty(&cal)),
        DocFormat::Text => {
            let h = &cfg.hypotheses;
            let mut s = String::new();
            let _ = writeln!(s, "{} calibration", design.label());
            let _ = writeln!(
                s,
                "hypotheses: p_null = {}, p_alt = {}, q_null = {}, q_alt = {}; alpha = {}",
                h.p_null, h.p_alt, h.q_null, h.q_alt, cfg.type1_alpha
            );
            match cal.schedule.kind {
                CutoffKind::Fixed { tox, eff } => {
                    let _ = writeln!(s, "fixed cutoffs: C_T = {tox}, C_E = {eff}");
                }
                CutoffKind::Power { tox, eff } => {
                    let _ = writeln!(
                        s,
                        "power cutoffs: tox lambda = {}, gamma = {}; eff lambda = {}, gamma = {}",
                        tox.lambda, tox.gamma, eff.lambda, eff.gamma
                    );
                }
            }
            let _ = writeln!(s, "null Go probability = {:.6}", cal.null_go);
            let _ = writeln!(s, "power = {:.6}", cal.alt_go);
            let _ = writeln!(s);
            let _ = writeln!(s, "{:>4} {:>8} {:>8}", "m", "max tox", "min eff");
            let na = |v: Option<i64>| v.map_or("-".to_string(), |k| k.to_string());
            for b in &cal.boundaries {
                let _ = writeln!(s, "{:>4} {:>8} {:>8}", b.m, na(b.max_tox), na(b.min_eff));
            }
            Ok(s)
        }
    }
}

/// Selections as given on the command line.
#[derive(Clone, Debug)]
pub struct RunRequest {
    pub scenarios: String,
    pub scenario_file: Option<PathBuf>,
    pub combos: String,
    pub phase1_only: bool,
    pub reps: usize,
    pub seed: u64,
    pub threads: Option<usize>,
}

/// Everything `simulate` needs.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub scenarios: Vec<Scenario>,
    pub combos: Vec<Combo>,
    pub reps: usize,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl RunSpec {
    /// Resolves selections against the bundled scenarios, or against the
    /// scenario file when one is given.
    pub fn resolve(cfg: &TrialConfig, req: &RunRequest) -> CmdResult<Self> {
        let library = match &req.scenario_file {
            Some(p) => {
                let src =
                    config_err(fs::read_to_string(p).with_context(|| format!("reading scenarios {}", p.display())))?;
                config_err(load_scenarios(&src, cfg))?
            }
            None => config_err(bundled_scenarios(cfg))?,
        };
        let picked = config_err(parse_selection(&req.scenarios, library.len()))?;
        let mut combos = config_err(Combo::parse_list(&req.combos))?;
        if req.phase1_only {
            for c in &mut combos {
                c.p2 = None;
            }
        }
        let mut seen = std::collections::HashSet::new();
        combos.retain(|c| seen.insert(*c));
        if req.reps == 0 {
            return Err(Failure::Config(anyhow::anyhow!("reps must be at least 1")));
        }
        if req.threads == Some(0) {
            return Err(Failure::Config(anyhow::anyhow!("threads must be at least 1")));
        }
        Ok(Self {
            scenarios: picked.into_iter().map(|k| library[k - 1].clone()).collect(),
            combos,
            reps: req.reps,
            seed: req.seed,
            threads: req.threads,
        })
    }
}

/// Runs the batch and folds every (scenario, combination) into a summary.
pub fn simulate(spec: &RunSpec, cfg: &TrialConfig) -> CmdResult<Vec<MetricsSummary>> {
    config_err(Simulator::new(cfg))?;
    let out = runtime_err(run_batch(
        &spec.scenarios,
        &spec.combos,
        cfg,
        spec.reps,
        spec.seed,
        spec.threads,
    ))?;
    out.iter()
        .map(|b| {
            let sc = spec
                .scenarios
                .iter()
                .find(|s| s.name == b.scenario)
                .expect("batch output names a requested scenario");
            runtime_err(aggregate(&b.scenario, b.combo, &b.results, &classify_scenario(sc, cfg)))
        })
        .collect()
}

#[derive(Serialize)]
struct EventLine<'a> {
    scenario: &'a str,
    combo: String,
    #[serde(flatten)]
    event: &'a TrialEvent,
}

/// JSON-lines event log of replication 0 for each (scenario, combination).
pub fn event_log(spec: &RunSpec, cfg: &TrialConfig) -> CmdResult<String> {
    let sim = config_err(Simulator::new(cfg))?;
    let mut s = String::new();
    for sc in &spec.scenarios {
        for &combo in &spec.combos {
            let seeds = trial_seeds(spec.seed, 0, &sc.name, combo.p1);
            let (_, events) = runtime_err(sim.run_traced(sc, combo.p1, combo.p2, seeds))?;
            for event in &events {
                let line = EventLine {
                    scenario: &sc.name,
                    combo: combo.to_string(),
                    event,
                };
                s.push_str(&runtime_err(serde_json::to_string(&line))?);
                s.push('\n');
            }
        }
    }
    Ok(s)
}

/// File name of a rendered report.
pub fn report_file(format: ReportFormat) -> &'static str {
    match format {
        ReportFormat::Text => "report.txt",
        ReportFormat::Csv => "metrics.csv",
        ReportFormat::Json => "metrics.json",
    }
}

/// Writes each format into `dir` and returns the paths written.
pub fn write_reports(dir: &Path, summaries: &[MetricsSummary], formats: &[ReportFormat]) -> CmdResult<Vec<PathBuf>> {
    runtime_err(fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())))?;
    formats
        .iter()
        .map(|&f| {
            let path = dir.join(report_file(f));
            let doc = runtime_err(render(summaries, f))?;
            runtime_err(fs::write(&path, doc).with_context(|| format!("writing {}", path.display())))?;
            Ok(path)
        })
        .collect()
}

/// Re-renders a metrics CSV in another format.
pub fn cmd_report(csv_src: &str, format: ReportFormat) -> CmdResult<String> {
    let summaries = config_err(parse_csv(csv_src))?;
    runtime_err(render(&summaries, format))
}
