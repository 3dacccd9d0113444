//! `geophase` command-line driver.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 numerical
//! contract error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geophase::scenario::{
    self, converge, export_schedule, fringe, run_scenario, sweep, write_convergence_csv, write_json_lines,
    write_records_csv, write_sequence, write_sweep_csv, OutputFormat, PathSource, ScenarioConfig, ScenarioKind,
    ScheduleKind,
};
use geophase::{Error, Result};

#[derive(Parser)]
#[command(name = "geophase", version, about = "Geometric phases of mixed-state paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and emit a result record.
    Compute(Common),
    /// Run a scenario for each value of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary (eta, lambda, lambda-ratio, theta0, tau, radius, steps, gap-tol, phase-tol).
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true, default_value = "")]
        values: String,
    },
    /// Emit the interference fringe `1 + ν cos(χ − α)` over [0, 2π).
    Fringe {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 256)]
        chi_points: usize,
    },
    /// Grid-refinement study: repeat the run with doubled step counts.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Write the system+ancilla unitary schedule (or the state path) as a matrix file.
    ExportSchedule {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Kind::Transported)]
        kind: Kind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Transported,
    Connecting,
    States,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    Integrated,
    Analytic,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// dephasing, unitary-precession, custom-lindblad, imported-path or degenerate-demo.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<f64>,
    /// Dephasing strength (absolute).
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    radius: Option<f64>,
    #[arg(long, value_enum)]
    source: Option<Source>,
    #[arg(long)]
    gap_tol: Option<f64>,
    #[arg(long)]
    phase_tol: Option<f64>,
    /// Target accuracy for convergence flagging.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Matrix file for the imported-path scenario.
    #[arg(long)]
    path_file: Option<PathBuf>,
    /// Output file (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::from_file(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(s) = &self.scenario {
            cfg.scenario = ScenarioKind::parse(s)?;
        }
        macro_rules! set {
            ($($field:ident),*) => { $( if self.$field.is_some() { cfg.$field = self.$field.clone(); } )* };
        }
        set!(theta0, eta, lambda, tau, steps, radius, gap_tol, phase_tol, tolerance, path_file, out, workers);
        if let Some(s) = self.source {
            cfg.source = match s {
                Source::Integrated => PathSource::Integrated,
                Source::Analytic => PathSource::Analytic,
            };
        }
        if let Some(f) = self.format {
            cfg.format = Some(match f {
                Format::Json => OutputFormat::Json,
                Format::Csv => OutputFormat::Csv,
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn output(cfg: &ScenarioConfig) -> Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| Error::Config(format!("out: cannot create {}: {e}", path.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::Config(format!("values: {s:?} is not a number"))))
        .collect()
}

fn warn_unconverged(record: &scenario::ResultRecord) {
    if record.diagnostics.convergence_flagged {
        eprintln!(
            "warning: convergence estimate {:.3e} exceeds 10x tolerance {:.1e}; increase --steps",
            record.diagnostics.convergence_estimate.unwrap_or(f64::NAN),
            record.inputs.tolerance
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compute(common) => {
            let cfg = common.config()?;
            let record = run_scenario(&cfg)?;
            warn_unconverged(&record);
            let mut out = output(&cfg)?;
            match cfg.format.unwrap_or(OutputFormat::Json) {
                OutputFormat::Json => write_json_lines(&mut out, &[record])?,
                OutputFormat::Csv => write_records_csv(&mut out, &[record])?,
            }
            out.flush()?;
        }
        Command::Sweep { common, param, values } => {
            let cfg = common.config()?;
            let rows = sweep(&cfg, &param, &parse_values(&values)?)?;
            for row in &rows {
                if let Some(r) = &row.record {
                    warn_unconverged(r);
                }
                if let Some(e) = &row.error {
                    eprintln!("warning: {param} = {}: {e}", row.value);
                }
            }
            let mut out = output(&cfg)?;
            match cfg.format.unwrap_or(OutputFormat::Csv) {
                OutputFormat::Json => write_json_lines(&mut out, &rows)?,
                OutputFormat::Csv => write_sweep_csv(&mut out, &rows)?,
            }
            out.flush()?;
        }
        Command::Fringe { common, chi_points } => {
            let cfg = common.config()?;
            let data = fringe(&cfg, chi_points)?;
            let mut out = output(&cfg)?;
            match cfg.format.unwrap_or(OutputFormat::Csv) {
                OutputFormat::Json => write_json_lines(&mut out, &[data])?,
                OutputFormat::Csv => data.write_csv(&mut out)?,
            }
            out.flush()?;
        }
        Command::Converge { common, levels } => {
            let cfg = common.config()?;
            let rows = converge(&cfg, levels)?;
            let mut out = output(&cfg)?;
            match cfg.format.unwrap_or(OutputFormat::Csv) {
                OutputFormat::Json => write_json_lines(&mut out, &rows)?,
                OutputFormat::Csv => write_convergence_csv(&mut out, &rows)?,
            }
            out.flush()?;
        }
        Command::ExportSchedule { common, kind } => {
            let cfg = common.config()?;
            let kind = match kind {
                Kind::Transported => ScheduleKind::Transported,
                Kind::Connecting => ScheduleKind::Connecting,
                Kind::States => ScheduleKind::States,
            };
            let seq = export_schedule(&cfg, kind)?;
            let mut out = output(&cfg)?;
            write_sequence(&mut out, &seq.times, &seq.matrices)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
