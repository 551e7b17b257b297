use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twostage::metrics::ReportFormat;
use twostage::phase2::Phase2Design;
use twostage_cli::{
    cmd_boundaries, cmd_calibrate, cmd_report, event_log, load_config, parse_override, simulate, write_reports,
    CmdResult, DocFormat, Failure, RunRequest, RunSpec,
};

#[derive(Parser)]
#[command(
    name = "twostage",
    version,
    about = "Simulate two-stage Phase I/II dose-finding and dose-optimization trials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML file layered over the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set type1_alpha=0.05` or `--set hypotheses.q_null=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override)]
    overrides: Vec<(String, String)>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the BOIN escalation, de-escalation and elimination table.
    Boundaries {
        #[command(flatten)]
        config: ConfigArgs,
        /// Target toxicity rate.
        #[arg(long)]
        phi: Option<f64>,
        #[arg(long)]
        phi1: Option<f64>,
        #[arg(long)]
        phi2: Option<f64>,
        /// Largest sample size in the table (defaults to the Phase I maximum).
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long, default_value = "text")]
        format: DocFormat,
    },
    /// Calibrate the Phase II cutoff schedule of one design.
    Calibrate {
        #[command(flatten)]
        config: ConfigArgs,
        /// ts, bop2 or top.
        #[arg(long)]
        design: Phase2Design,
        /// Type I error level (overrides the config).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value = "text")]
        format: DocFormat,
    },
    /// Run replications and write operating-characteristic reports.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Scenario selection such as `1-9` or `2,5`.
        #[arg(long, default_value = "1-9")]
        scenarios: String,
        /// TOML scenario file used instead of the bundled scenarios.
        #[arg(long)]
        scenario_file: Option<PathBuf>,
        /// `all` or a comma-separated list like `boin+bop2,tite-boin12+top`.
        #[arg(long, default_value = "all")]
        combos: String,
        /// Stop after Phase I.
        #[arg(long)]
        phase1_only: bool,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory.
        #[arg(long, env = "TWOSTAGE_OUT_DIR", default_value = ".")]
        out: PathBuf,
        /// Report formats to write.
        #[arg(long, value_delimiter = ',', default_value = "csv,json,text")]
        formats: Vec<ReportFormat>,
        /// Also write the event log of the first replication of each run.
        #[arg(long)]
        event_log: bool,
        /// Do not print the text report.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Re-render a metrics CSV.
    Report {
        /// Metrics CSV written by `simulate`.
        input: PathBuf,
        #[arg(long, default_value = "text")]
        format: ReportFormat,
    },
}

fn run(cli: Cli) -> CmdResult<String> {
    match cli.command {
        Command::Boundaries {
            config,
            phi,
            phi1,
            phi2,
            n_max,
            format,
        } => {
            let mut overrides = config.overrides;
            if let Some(phi) = phi {
                overrides.push(("target".into(), phi.to_string()));
                if phi1.is_none() {
                    overrides.push(("phi1".into(), (0.6 * phi).to_string()));
                }
                if phi2.is_none() {
                    overrides.push(("phi2".into(), (1.4 * phi).to_string()));
                }
            }
            for (k, v) in [("phi1", phi1), ("phi2", phi2)] {
                if let Some(v) = v {
                    overrides.push((k.into(), v.to_string()));
                }
            }
            let cfg = load_config(config.config.as_deref(), &overrides)?;
            cmd_boundaries(&cfg, n_max.unwrap_or(cfg.n1()), format)
        }
        Command::Calibrate {
            config,
            design,
            alpha,
            format,
        } => {
            let mut overrides = config.overrides;
            if let Some(a) = alpha {
                overrides.push(("type1_alpha".into(), a.to_string()));
            }
            let cfg = load_config(config.config.as_deref(), &overrides)?;
            cmd_calibrate(design, &cfg, format)
        }
        Command::Simulate {
            config,
            scenarios,
            scenario_file,
            combos,
            phase1_only,
            reps,
            seed,
            threads,
            out,
            formats,
            event_log: log,
            quiet,
        } => {
            let cfg = load_config(config.config.as_deref(), &config.overrides)?;
            let req = RunRequest {
                scenarios,
                scenario_file,
                combos,
                phase1_only,
                reps,
                seed,
                threads,
            };
            let spec = RunSpec::resolve(&cfg, &req)?;
            let summaries = simulate(&spec, &cfg)?;
            let written = write_reports(&out, &summaries, &formats)?;
            for p in &written {
                eprintln!("wrote {}", p.display());
            }
            if log {
                let path = out.join("events.jsonl");
                let doc = event_log(&spec, &cfg)?;
                std::fs::write(&path, doc).map_err(|e| Failure::Runtime(e.into()))?;
                eprintln!("wrote {}", path.display());
            }
            if quiet {
                Ok(String::new())
            } else {
                twostage::metrics::render(&summaries, ReportFormat::Text).map_err(|e| Failure::Runtime(e.into()))
            }
        }
        Command::Report { input, format } => {
            let src = std::fs::read_to_string(&input)
                .map_err(|e| Failure::Config(anyhow::anyhow!("reading {}: {e}", input.display())))?;
            cmd_report(&src, format)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(doc) => {
            print!("{doc}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
