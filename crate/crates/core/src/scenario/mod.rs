//! Scenario registry and drivers: single runs, sweeps, fringes,
//! convergence studies and schedule export.

pub mod config;
pub mod demo;
pub mod matrix_file;

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use config::{JumpConfig, MatrixEntries, ModelConfig, OutputFormat, PathSource, ScenarioConfig, ScenarioKind};
pub use demo::{DegenerateDemo, DEMO_TAU};
pub use matrix_file::{read_sequence, read_state_path, write_sequence, write_state_path, MatrixSequence};

use crate::error::{Error, Result};
use crate::lindblad::{
    dephasing_phase_closed_form, dephasing_phase_first_order, dephasing_qubit_analytic, integrate,
    unitary_precession_phase,
};
use crate::numkernel::{angular_distance, trace, ONE};
use crate::phase::{
    fringe_intensity, geometric_phase_degenerate, geometric_phase_with, relative_phase_with, visibility, PhaseOptions,
    PhaseResult,
};
use crate::purification::{build_connecting_unitary, build_usa, build_w_path, parallel_transport_correction};
use crate::spectral::{decompose_path_with, DecomposeOptions, DegeneracyStructure, SpectralPath, StatePath};

/// A generated or imported path with its decomposition.
#[derive(Clone, Debug)]
pub struct PreparedPath {
    pub spectral: SpectralPath,
    pub blocks: DegeneracyStructure,
    /// Sampled density operators, when the path was not built from exact eigen-data.
    pub states: Option<StatePath>,
}

impl PreparedPath {
    /// `max_j |Tr ρ(t_j) − 1|` of the sampled states.
    pub fn trace_drift(&self) -> Option<f64> {
        self.states.as_ref().map(|p| p.states().iter().map(|r| (trace(r) - ONE).norm()).fold(0.0, f64::max))
    }

    /// Sampled states, rebuilt from eigen-data when needed.
    pub fn state_path(&self) -> Result<StatePath> {
        match &self.states {
            Some(p) => Ok(p.clone()),
            None => StatePath::new(
                self.spectral.times().to_vec(),
                (0..self.spectral.len()).map(|j| self.spectral.reconstruct(j)).collect(),
            ),
        }
    }
}

fn decompose(states: StatePath, gap_tol: f64) -> Result<PreparedPath> {
    let opts = DecomposeOptions { gap_tol, ..Default::default() };
    let (spectral, blocks) = decompose_path_with(&states, &opts)?;
    Ok(PreparedPath { spectral, blocks, states: Some(states) })
}

/// Build and decompose the path a configuration describes.
pub fn prepare(cfg: &ScenarioConfig) -> Result<PreparedPath> {
    cfg.validate()?;
    let gap_tol = cfg.gap_tol();
    match cfg.scenario {
        ScenarioKind::Dephasing | ScenarioKind::UnitaryPrecession => {
            let p = cfg.qubit_params()?;
            let grid = cfg.grid()?;
            match cfg.source {
                PathSource::Integrated => decompose(integrate(&p.model(), &p.initial_state(), &grid)?, gap_tol),
                PathSource::Analytic => {
                    let spectral = dephasing_qubit_analytic(&p, &grid)?;
                    let blocks = DegeneracyStructure::detect(&spectral, gap_tol);
                    Ok(PreparedPath { spectral, blocks, states: None })
                }
            }
        }
        ScenarioKind::CustomLindblad => {
            let m = cfg.model.as_ref().expect("validated");
            decompose(integrate(&m.model()?, &m.initial_state()?, &cfg.grid()?)?, gap_tol)
        }
        ScenarioKind::ImportedPath => {
            let file = cfg.path_file.as_ref().expect("validated");
            decompose(matrix_file::read_state_path_file(file)?, gap_tol)
        }
        ScenarioKind::DegenerateDemo => decompose(DegenerateDemo::default().state_path(&cfg.grid()?)?, gap_tol),
    }
}

/// Abelian rule when possible, Wilson lines when a weighted block is degenerate.
pub fn compute_phase(prepared: &PreparedPath, opts: &PhaseOptions) -> Result<PhaseResult> {
    match geometric_phase_with(&prepared.spectral, opts) {
        Err(Error::DegenerateBlock { .. }) => geometric_phase_degenerate(&prepared.spectral, &prepared.blocks, opts),
        other => other,
    }
}

/// Echo of the inputs that shaped a record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub scenario: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub tau: f64,
    pub steps: usize,
    pub gap_tol: f64,
    pub phase_tol: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_file: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordDiagnostics {
    /// Smallest eigenvalue gap over the path; absent for one-level systems.
    pub min_gap: Option<f64>,
    pub trace_drift: Option<f64>,
    /// Largest per-branch transport residual.
    pub transport_residual: f64,
    /// `|γ(Δt) − γ(Δt/2)|`, or `|γ(2Δt) − γ(Δt)|` for imported paths.
    pub convergence_estimate: Option<f64>,
    /// Set when the convergence estimate exceeds ten times the tolerance.
    pub convergence_flagged: bool,
    pub samples: usize,
    /// Branch groups handled by Wilson lines.
    pub degenerate_blocks: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub inputs: Inputs,
    pub gamma: f64,
    pub alpha: Option<f64>,
    pub visibility: f64,
    pub closed_form_gamma: Option<f64>,
    pub first_order_gamma: Option<f64>,
    pub diagnostics: RecordDiagnostics,
}

fn inputs(cfg: &ScenarioConfig, prepared: &PreparedPath) -> Inputs {
    let qubit = matches!(cfg.scenario, ScenarioKind::Dephasing | ScenarioKind::UnitaryPrecession);
    let sp = &prepared.spectral;
    Inputs {
        scenario: cfg.scenario.name().into(),
        eta: qubit.then(|| cfg.eta()),
        lambda: qubit.then(|| cfg.lambda()),
        theta0: qubit.then(|| cfg.theta0()),
        radius: qubit.then(|| cfg.radius()),
        tau: sp.tau(),
        steps: sp.len() - 1,
        gap_tol: cfg.gap_tol(),
        phase_tol: cfg.phase_tol(),
        tolerance: cfg.tolerance(),
        path_file: cfg.path_file.as_ref().map(|p| p.display().to_string()),
    }
}

/// `(closed form, first order)` oracles where the scenario has them.
fn oracles(cfg: &ScenarioConfig) -> (Option<f64>, Option<f64>) {
    let Ok(p) = cfg.qubit_params() else { return (None, None) };
    match cfg.scenario {
        ScenarioKind::Dephasing => (dephasing_phase_closed_form(&p).ok(), dephasing_phase_first_order(&p).ok()),
        ScenarioKind::UnitaryPrecession => (unitary_precession_phase(&p).ok(), dephasing_phase_first_order(&p).ok()),
        _ => (None, None),
    }
}

fn every_other(path: &StatePath) -> Option<StatePath> {
    let n = path.len();
    if n < 5 || !(n - 1).is_multiple_of(2) {
        return None;
    }
    let times = path.times().iter().step_by(2).copied().collect();
    let states = path.states().iter().step_by(2).cloned().collect();
    StatePath::new(times, states).ok()
}

fn convergence_estimate(cfg: &ScenarioConfig, prepared: &PreparedPath, gamma: f64) -> Option<f64> {
    let opts = cfg.phase_options();
    let other = if cfg.scenario == ScenarioKind::ImportedPath {
        let coarse = every_other(prepared.states.as_ref()?)?;
        decompose(coarse, cfg.gap_tol()).ok()?
    } else {
        let fine = ScenarioConfig { steps: Some(2 * cfg.steps()), ..cfg.clone() };
        prepare(&fine).ok()?
    };
    compute_phase(&other, &opts).ok().map(|r| angular_distance(r.gamma, gamma))
}

/// Generate or load the path, compute phases, attach oracles and diagnostics.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ResultRecord> {
    let prepared = prepare(cfg)?;
    let result = compute_phase(&prepared, &cfg.phase_options())?;
    let (closed_form_gamma, first_order_gamma) = oracles(cfg);
    let estimate = convergence_estimate(cfg, &prepared, result.gamma);
    let degenerate_blocks = prepared
        .blocks
        .blocks
        .iter()
        .filter(|b| b.size() > 1 && b.has_active_steps())
        .map(|b| b.branches.clone())
        .collect();
    Ok(ResultRecord {
        inputs: inputs(cfg, &prepared),
        gamma: result.gamma,
        alpha: result.alpha,
        visibility: result.visibility,
        closed_form_gamma,
        first_order_gamma,
        diagnostics: RecordDiagnostics {
            min_gap: Some(result.diagnostics.min_gap).filter(|g| g.is_finite()),
            trace_drift: prepared.trace_drift(),
            transport_residual: result.diagnostics.transport_residual.iter().copied().fold(0.0, f64::max),
            convergence_estimate: estimate,
            convergence_flagged: estimate.is_some_and(|e| e > 10.0 * cfg.tolerance()),
            samples: result.diagnostics.samples,
            degenerate_blocks,
        },
    })
}

/// One sweep point: a record or the error that stopped it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub record: Option<ResultRecord>,
    pub error: Option<String>,
}

pub const SWEEPABLE: &[&str] =
    &["eta", "lambda", "lambda-ratio", "theta0", "tau", "radius", "steps", "gap-tol", "phase-tol"];

fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w);
    }
    b.build().map_err(|e| Error::Config(format!("workers: {e}")))
}

/// Run `param = v` for every value, concurrently up to `cfg.workers`.
///
/// Rows come back in input order; per-point failures are recorded in the
/// row and do not stop the sweep.
pub fn sweep(cfg: &ScenarioConfig, param: &str, values: &[f64]) -> Result<Vec<SweepRow>> {
    use rayon::prelude::*;
    if !SWEEPABLE.contains(&param) {
        return Err(Error::Config(format!("param: {param:?} is not sweepable (one of {})", SWEEPABLE.join(", "))));
    }
    cfg.validate()?;
    let pool = thread_pool(cfg.workers)?;
    Ok(pool.install(|| {
        values
            .par_iter()
            .map(|&value| {
                let outcome = cfg.with_param(param, value).and_then(|c| run_scenario(&c));
                let (record, error) = match outcome {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                SweepRow { param: param.into(), value, record, error }
            })
            .collect()
    }))
}

#[derive(Serialize)]
struct RecordCsvRow<'a> {
    param: Option<&'a str>,
    value: Option<f64>,
    gamma: Option<f64>,
    alpha: Option<f64>,
    visibility: Option<f64>,
    closed_form_gamma: Option<f64>,
    first_order_gamma: Option<f64>,
    min_gap: Option<f64>,
    convergence_estimate: Option<f64>,
    convergence_flagged: Option<bool>,
    error: Option<&'a str>,
}

const RECORD_CSV_HEADER: [&str; 11] = [
    "param",
    "value",
    "gamma",
    "alpha",
    "visibility",
    "closed_form_gamma",
    "first_order_gamma",
    "min_gap",
    "convergence_estimate",
    "convergence_flagged",
    "error",
];

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn record_row<'a>(
    param: Option<&'a str>,
    value: Option<f64>,
    r: Option<&ResultRecord>,
    error: Option<&'a str>,
) -> RecordCsvRow<'a> {
    RecordCsvRow {
        param,
        value,
        gamma: r.map(|r| r.gamma),
        alpha: r.and_then(|r| r.alpha),
        visibility: r.map(|r| r.visibility),
        closed_form_gamma: r.and_then(|r| r.closed_form_gamma),
        first_order_gamma: r.and_then(|r| r.first_order_gamma),
        min_gap: r.and_then(|r| r.diagnostics.min_gap),
        convergence_estimate: r.and_then(|r| r.diagnostics.convergence_estimate),
        convergence_flagged: r.map(|r| r.diagnostics.convergence_flagged),
        error,
    }
}

fn write_record_rows<'a, W: Write>(out: W, rows: impl Iterator<Item = RecordCsvRow<'a>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(RECORD_CSV_HEADER).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// One CSV row per sweep point, keyed by the swept value.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    write_record_rows(
        out,
        rows.iter().map(|row| record_row(Some(&row.param), Some(row.value), row.record.as_ref(), row.error.as_deref())),
    )
}

/// Records as CSV with empty `param`/`value` columns.
pub fn write_records_csv<W: Write>(out: W, records: &[ResultRecord]) -> Result<()> {
    write_record_rows(out, records.iter().map(|r| record_row(None, None, Some(r), None)))
}

/// Write each item as one JSON object per line.
pub fn write_json_lines<W: Write, T: Serialize>(mut out: W, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(|e| Error::Io(e.into()))?;
        writeln!(out)?;
    }
    Ok(())
}

/// Fringe samples over `[0, 2π)` with the `α`, `ν` that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeData {
    pub scenario: String,
    /// `None` when the endpoint overlap vanishes (flat profile).
    pub alpha: Option<f64>,
    pub visibility: f64,
    pub rows: Vec<(f64, f64)>,
}

pub fn fringe(cfg: &ScenarioConfig, chi_points: usize) -> Result<FringeData> {
    if chi_points < 4 {
        return Err(Error::Config(format!("chi-points: need at least 4, got {chi_points}")));
    }
    let prepared = prepare(cfg)?;
    let sp = &prepared.spectral;
    let (alpha, nu) = match relative_phase_with(sp, cfg.phase_tol()) {
        Ok(a) => (Some(a), visibility(sp)),
        Err(Error::UndefinedPhase { .. }) => (None, 0.0),
        Err(e) => return Err(e),
    };
    let rows = (0..chi_points)
        .map(|i| {
            let chi = 2.0 * PI * i as f64 / chi_points as f64;
            (chi, fringe_intensity(alpha.unwrap_or(0.0), nu, chi))
        })
        .collect();
    Ok(FringeData { scenario: cfg.scenario.name().into(), alpha, visibility: nu, rows })
}

impl FringeData {
    /// CSV with a `#` metadata header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# scenario: {}", self.scenario)?;
        match self.alpha {
            Some(a) => writeln!(out, "# alpha: {a}")?,
            None => writeln!(out, "# alpha: undefined")?,
        }
        writeln!(out, "# visibility: {}", self.visibility)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["chi", "intensity"]).map_err(csv_error)?;
        for (chi, i) in &self.rows {
            w.write_record([chi.to_string(), i.to_string()]).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One level of a grid-refinement study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub dt: f64,
    pub gamma: f64,
    /// `|γ − γ_previous level|`.
    pub difference: Option<f64>,
    /// Previous difference over this one (≈ 4 for second order).
    pub difference_ratio: Option<f64>,
    /// `|γ − closed form|` where available.
    pub error: Option<f64>,
    pub error_ratio: Option<f64>,
}

/// Repeat the run at `steps·2^i` for `i < levels`.
pub fn converge(cfg: &ScenarioConfig, levels: usize) -> Result<Vec<ConvergenceRow>> {
    if levels < 2 {
        return Err(Error::Config(format!("levels: need at least 2, got {levels}")));
    }
    if cfg.scenario == ScenarioKind::ImportedPath {
        return Err(Error::Config("scenario: converge needs a generated path, not imported-path".into()));
    }
    let (closed, _) = oracles(cfg);
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    for i in 0..levels {
        let steps = cfg.steps() << i;
        let level = ScenarioConfig { steps: Some(steps), ..cfg.clone() };
        let prepared = prepare(&level)?;
        let gamma = compute_phase(&prepared, &cfg.phase_options())?.gamma;
        let prev = rows.last();
        let difference = prev.map(|p| angular_distance(gamma, p.gamma));
        let error = closed.map(|c| angular_distance(gamma, c));
        rows.push(ConvergenceRow {
            steps,
            dt: prepared.spectral.tau() / steps as f64,
            gamma,
            difference,
            difference_ratio: prev.and_then(|p| p.difference).zip(difference).map(|(a, b)| a / b),
            error,
            error_ratio: prev.and_then(|p| p.error).zip(error).map(|(a, b)| a / b),
        });
    }
    Ok(rows)
}

pub fn write_convergence_csv<W: Write>(out: W, rows: &[ConvergenceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// What `export-schedule` writes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ScheduleKind {
    /// `U_sa(t)` built from the parallel-transported `V∥(t)`.
    #[default]
    Transported,
    /// `U_sa(t)` built from the connecting unitary `V(t)`.
    Connecting,
    /// The sampled density operators themselves.
    States,
}

impl ScheduleKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "transported" => Ok(Self::Transported),
            "connecting" => Ok(Self::Connecting),
            "states" => Ok(Self::States),
            other => Err(Error::Config(format!("kind: {other:?} (expected transported, connecting or states)"))),
        }
    }
}

/// Matrix sequence for export: system ⊗ ancilla unitaries or the state path.
pub fn export_schedule(cfg: &ScenarioConfig, kind: ScheduleKind) -> Result<MatrixSequence> {
    let prepared = prepare(cfg)?;
    let sp = &prepared.spectral;
    if kind == ScheduleKind::States {
        let path = prepared.state_path()?;
        return Ok(MatrixSequence { times: path.times().to_vec(), matrices: path.states().to_vec() });
    }
    let mut v = build_connecting_unitary(sp)?;
    if kind == ScheduleKind::Transported {
        v = parallel_transport_correction(&v, sp.frame(0))?.1;
    }
    let usa = build_usa(&v, &build_w_path(sp, (0, 0))?)?;
    Ok(MatrixSequence { times: usa.times().to_vec(), matrices: usa.unitaries().to_vec() })
}
