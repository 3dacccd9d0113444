//! Scenario configuration (TOML).

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{DephasingQubitParams, LindbladModel, TimeGrid};
use crate::numkernel::{CMatrix, C64};
use crate::phase::{PhaseOptions, DEFAULT_PHASE_TOL};
use crate::spectral::{DensityOperator, DEFAULT_GAP_TOL};

pub const DEFAULT_ETA: f64 = 1.0;
pub const DEFAULT_LAMBDA: f64 = 0.1;
pub const DEFAULT_THETA0: f64 = PI / 3.0;
pub const DEFAULT_STEPS: usize = 20_000;
/// Target accuracy; records whose convergence estimate exceeds ten times
/// this are flagged.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    #[default]
    Dephasing,
    UnitaryPrecession,
    CustomLindblad,
    ImportedPath,
    DegenerateDemo,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Dephasing => "dephasing",
            Self::UnitaryPrecession => "unitary-precession",
            Self::CustomLindblad => "custom-lindblad",
            Self::ImportedPath => "imported-path",
            Self::DegenerateDemo => "degenerate-demo",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "dephasing" => Self::Dephasing,
            "unitary-precession" => Self::UnitaryPrecession,
            "custom-lindblad" => Self::CustomLindblad,
            "imported-path" => Self::ImportedPath,
            "degenerate-demo" => Self::DegenerateDemo,
            other => {
                return Err(Error::Config(format!(
                    "scenario: unknown name {other:?} (expected dephasing, unitary-precession, \
                     custom-lindblad, imported-path or degenerate-demo)"
                )))
            }
        })
    }
}

/// How qubit scenarios produce their path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PathSource {
    /// Integrate the master equation.
    #[default]
    Integrated,
    /// Sample the exact solution.
    Analytic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// Complex matrix as rows of `[re, im]` pairs.
pub type MatrixEntries = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpConfig {
    /// `Γ = √rate · operator`.
    pub rate: f64,
    pub operator: MatrixEntries,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    pub hamiltonian: MatrixEntries,
    /// Initial density matrix.
    pub rho0: MatrixEntries,
    #[serde(default)]
    pub jumps: Vec<JumpConfig>,
}

/// Everything a run needs. Unset physical fields take scenario defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScenarioConfig {
    #[serde(default)]
    pub scenario: ScenarioKind,
    pub eta: Option<f64>,
    /// Dephasing strength `Λ` (absolute, not relative to `η`).
    pub lambda: Option<f64>,
    pub theta0: Option<f64>,
    pub tau: Option<f64>,
    pub steps: Option<usize>,
    /// Bloch radius of the initial state for qubit scenarios.
    pub radius: Option<f64>,
    #[serde(default)]
    pub source: PathSource,
    pub gap_tol: Option<f64>,
    pub phase_tol: Option<f64>,
    pub tolerance: Option<f64>,
    pub path_file: Option<PathBuf>,
    pub model: Option<ModelConfig>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub workers: Option<usize>,
}

impl ScenarioConfig {
    pub fn new(scenario: ScenarioKind) -> Self {
        Self { scenario, ..Default::default() }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    /// Reads a config file; a relative `path-file` is resolved against the
    /// config file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let (Some(p), Some(dir)) = (&cfg.path_file, path.parent()) {
            if p.is_relative() {
                cfg.path_file = Some(dir.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn eta(&self) -> f64 {
        self.eta.unwrap_or(DEFAULT_ETA)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or(match self.scenario {
            ScenarioKind::Dephasing => DEFAULT_LAMBDA,
            _ => 0.0,
        })
    }

    pub fn theta0(&self) -> f64 {
        self.theta0.unwrap_or(DEFAULT_THETA0)
    }

    pub fn radius(&self) -> f64 {
        self.radius.unwrap_or(1.0)
    }

    pub fn steps(&self) -> usize {
        self.steps.unwrap_or(DEFAULT_STEPS)
    }

    /// Duration; qubit scenarios default to one precession period.
    pub fn tau(&self) -> Option<f64> {
        self.tau.or(match self.scenario {
            ScenarioKind::Dephasing | ScenarioKind::UnitaryPrecession => Some(2.0 * PI / self.eta()),
            ScenarioKind::DegenerateDemo => Some(super::demo::DEMO_TAU),
            _ => None,
        })
    }

    pub fn gap_tol(&self) -> f64 {
        self.gap_tol.unwrap_or(DEFAULT_GAP_TOL)
    }

    pub fn phase_tol(&self) -> f64 {
        self.phase_tol.unwrap_or(DEFAULT_PHASE_TOL)
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(DEFAULT_TOLERANCE)
    }

    pub fn phase_options(&self) -> PhaseOptions {
        PhaseOptions { gap_tol: self.gap_tol(), phase_tol: self.phase_tol() }
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        let tau = self.tau().ok_or_else(|| Error::Config("tau: required for this scenario".into()))?;
        TimeGrid::new(tau, self.steps()).map_err(field("tau/steps"))
    }

    pub fn qubit_params(&self) -> Result<DephasingQubitParams> {
        let p = DephasingQubitParams {
            eta: self.eta(),
            lam: self.lambda(),
            theta0: self.theta0(),
            tau: self.tau().unwrap_or(2.0 * PI / self.eta()),
            radius: self.radius(),
        };
        p.validated().map_err(field("eta/lambda/theta0/tau/radius"))
    }

    /// Field-level validation; run before any numerics.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => {
                Err(Error::Config(format!("{name}: must be positive and finite, got {x}")))
            }
            _ => Ok(()),
        };
        positive("eta", self.eta)?;
        positive("tau", self.tau)?;
        positive("gap-tol", self.gap_tol)?;
        positive("phase-tol", self.phase_tol)?;
        positive("tolerance", self.tolerance)?;
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("lambda: must be nonnegative, got {l}")));
            }
        }
        if let Some(t) = self.theta0 {
            if !(0.0..=PI).contains(&t) {
                return Err(Error::Config(format!("theta0: must lie in [0, pi], got {t}")));
            }
        }
        if let Some(r) = self.radius {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Config(format!("radius: must lie in [0, 1], got {r}")));
            }
        }
        if let Some(s) = self.steps {
            if s < 2 {
                return Err(Error::Config(format!("steps: need at least 2, got {s}")));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers: must be at least 1".into()));
        }
        match self.scenario {
            ScenarioKind::UnitaryPrecession if self.lambda() != 0.0 => {
                Err(Error::Config("lambda: unitary-precession requires lambda = 0".into()))
            }
            ScenarioKind::CustomLindblad => {
                if self.model.is_none() {
                    return Err(Error::Config("model: custom-lindblad requires a [model] table".into()));
                }
                if self.tau.is_none() {
                    return Err(Error::Config("tau: custom-lindblad requires tau".into()));
                }
                Ok(())
            }
            ScenarioKind::ImportedPath => match &self.path_file {
                None => Err(Error::Config("path-file: imported-path requires path-file".into())),
                Some(p) if !p.is_file() => Err(Error::Config(format!("path-file: {} does not exist", p.display()))),
                _ => Ok(()),
            },
            _ => Ok(()),
        }
    }

    /// Sets a sweepable scalar by name.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        match name {
            "eta" => cfg.eta = Some(value),
            "lambda" => cfg.lambda = Some(value),
            "lambda-ratio" => cfg.lambda = Some(value * self.eta()),
            "theta0" => cfg.theta0 = Some(value),
            "tau" => cfg.tau = Some(value),
            "radius" => cfg.radius = Some(value),
            "gap-tol" => cfg.gap_tol = Some(value),
            "phase-tol" => cfg.phase_tol = Some(value),
            "steps" => {
                if value.fract() != 0.0 || value < 2.0 {
                    return Err(Error::Config(format!("steps: sweep value {value} is not an integer >= 2")));
                }
                cfg.steps = Some(value as usize);
            }
            other => {
                return Err(Error::Config(format!(
                    "param: {other:?} is not sweepable (eta, lambda, lambda-ratio, theta0, tau, \
                     radius, steps, gap-tol, phase-tol)"
                )))
            }
        }
        Ok(cfg)
    }
}

fn field(name: &'static str) -> impl Fn(Error) -> Error {
    move |e| Error::Config(format!("{name}: {e}"))
}

fn matrix(entries: &MatrixEntries, n: usize, what: &str) -> Result<CMatrix> {
    if entries.len() != n || entries.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("model.{what}: expected {n}x{n} entries")));
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| C64::new(entries[i][j][0], entries[i][j][1])))
}

impl ModelConfig {
    pub fn model(&self) -> Result<LindbladModel> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::Config("model.dim: must be positive".into()));
        }
        let h = matrix(&self.hamiltonian, n, "hamiltonian")?;
        let jumps = self
            .jumps
            .iter()
            .enumerate()
            .map(|(m, j)| {
                if !(j.rate >= 0.0 && j.rate.is_finite()) {
                    return Err(Error::Config(format!("model.jumps[{m}].rate: must be nonnegative")));
                }
                Ok(matrix(&j.operator, n, "jumps.operator")?.mapv(|z| z * j.rate.sqrt()))
            })
            .collect::<Result<Vec<_>>>()?;
        LindbladModel::new(h, jumps).map_err(field("model.hamiltonian"))
    }

    pub fn initial_state(&self) -> Result<DensityOperator> {
        DensityOperator::new(matrix(&self.rho0, self.dim, "rho0")?).map_err(field("model.rho0"))
    }
}
