//! Lindblad master equation integration and the dephasing-qubit model.
//!
//! The generator is
//!
//! ```text
//! ρ̇ = −i[H, ρ] + Σ_m (Γ_m ρ Γ_m† − ½{Γ_m†Γ_m, ρ})
//! ```
//!
//! integrated with classical fourth-order Runge–Kutta on a uniform grid.
//! The dephasing qubit uses `H = (η/2)σ_z` and `Γ = √(Λ/2)σ_z`; its exact
//! solution and the geometric phase of one precession period are available
//! in closed form.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::numkernel::{
    check_square, dagger, eigh_hermitian, hermiticity_error, hermitize, pauli, trace, wrap_phase, CMatrix, C64, I, ONE,
    ZERO,
};
use crate::spectral::{DensityOperator, SpectralPath, StatePath};

/// Trace drift beyond this aborts integration.
pub const TRACE_DRIFT_TOL: f64 = 1e-8;
/// Eigenvalues below this abort integration.
pub const POSITIVITY_TOL: f64 = -1e-8;

/// Hamiltonian plus jump operators.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    hamiltonian: CMatrix,
    jumps: Vec<CMatrix>,
    // Σ_m Γ_m†Γ_m
    decay: CMatrix,
}

impl LindbladModel {
    pub fn new(hamiltonian: CMatrix, jumps: Vec<CMatrix>) -> Result<Self> {
        let n = check_square(&hamiltonian, "Hamiltonian")?;
        let scale = hamiltonian.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let dev = hermiticity_error(&hamiltonian);
        if dev > 1e-12 * scale {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let mut decay = Array2::from_elem((n, n), ZERO);
        for (m, g) in jumps.iter().enumerate() {
            if g.dim() != (n, n) {
                return Err(Error::Dimension(format!("jump operator {m} is not {n}x{n}")));
            }
            check_square(g, "jump operator")?;
            decay = decay + dagger(g).dot(g);
        }
        Ok(Self { hamiltonian: hermitize(&hamiltonian), jumps, decay })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[CMatrix] {
        &self.jumps
    }

    /// Right-hand side `L[ρ]`.
    pub fn generator(&self, rho: &CMatrix) -> CMatrix {
        let h = &self.hamiltonian;
        let mut out = (h.dot(rho) - rho.dot(h)).mapv(|z| -I * z);
        for g in &self.jumps {
            out = out + g.dot(rho).dot(&dagger(g));
        }
        out - (self.decay.dot(rho) + rho.dot(&self.decay)).mapv(|z| 0.5 * z)
    }

    fn rk4_step(&self, rho: &CMatrix, dt: f64) -> CMatrix {
        let k1 = self.generator(rho);
        let k2 = self.generator(&(rho + &k1.mapv(|z| z * (dt / 2.0))));
        let k3 = self.generator(&(rho + &k2.mapv(|z| z * (dt / 2.0))));
        let k4 = self.generator(&(rho + &k3.mapv(|z| z * dt)));
        rho + &(k1 + k2.mapv(|z| 2.0 * z) + k3.mapv(|z| 2.0 * z) + k4).mapv(|z| z * (dt / 6.0))
    }
}

/// Uniform grid on `[0, τ]` with `steps` intervals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    tau: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(tau: f64, steps: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Domain(format!("duration must be positive and finite, got {tau}")));
        }
        if steps < 2 {
            return Err(Error::Domain(format!("need at least 2 steps, got {steps}")));
        }
        Ok(Self { tau, steps })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.tau / self.steps as f64
    }

    /// `steps + 1` sample times; the last is exactly `τ`.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps)
            .map(|j| if j == self.steps { self.tau } else { self.tau * j as f64 / self.steps as f64 })
            .collect()
    }

    /// Same duration, twice the steps.
    pub fn refined(&self) -> Self {
        Self { tau: self.tau, steps: 2 * self.steps }
    }
}

/// Integrate `ρ̇ = L[ρ]` with one RK4 step per grid interval.
///
/// Every sample is re-Hermitized; trace drift and negative eigenvalues
/// beyond tolerance abort with an error naming the step.
pub fn integrate(model: &LindbladModel, rho0: &DensityOperator, grid: &TimeGrid) -> Result<StatePath> {
    if rho0.dim() != model.dim() {
        return Err(Error::Dimension(format!(
            "initial state is {}x{} but the model is {}x{}",
            rho0.dim(),
            rho0.dim(),
            model.dim(),
            model.dim()
        )));
    }
    let times = grid.times();
    let mut states = Vec::with_capacity(times.len());
    let mut rho = rho0.matrix().clone();
    states.push(rho.clone());
    for j in 0..grid.steps() {
        rho = hermitize(&model.rk4_step(&rho, times[j + 1] - times[j]));
        check_sample(&rho, j + 1)?;
        states.push(rho.clone());
    }
    StatePath::new(times, states)
}

fn check_sample(rho: &CMatrix, step: usize) -> Result<()> {
    let drift = (trace(rho) - ONE).norm();
    if !(drift <= TRACE_DRIFT_TOL) {
        return Err(Error::Integration { step, drift });
    }
    let low = eigh_hermitian(rho)?.values[0];
    if low < POSITIVITY_TOL {
        return Err(Error::Positivity { step, eigenvalue: low });
    }
    Ok(())
}

/// Parameters of the dephasing qubit.
///
/// The initial Bloch vector is `r (sin θ₀, 0, cos θ₀)`; `r = 1` (pure) by
/// default. The closed-form phase requires `cos θ₀ ≥ 0`, `r = 1` and
/// `τ = 2π/η`; the numerical path does not.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DephasingQubitParams {
    pub eta: f64,
    pub lam: f64,
    pub theta0: f64,
    pub tau: f64,
    pub radius: f64,
}

impl DephasingQubitParams {
    /// One precession period `τ = 2π/η`, pure initial state.
    pub fn new(eta: f64, lam: f64, theta0: f64) -> Result<Self> {
        Self { eta, lam, theta0, tau: 2.0 * PI / eta, radius: 1.0 }.validated()
    }

    pub fn with_tau(self, tau: f64) -> Result<Self> {
        Self { tau, ..self }.validated()
    }

    pub fn with_radius(self, radius: f64) -> Result<Self> {
        Self { radius, ..self }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let Self { eta, lam, theta0, tau, radius } = self;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Domain(format!("eta must be positive, got {eta}")));
        }
        if !(lam >= 0.0 && lam.is_finite()) {
            return Err(Error::Domain(format!("lambda must be nonnegative, got {lam}")));
        }
        if !(0.0..=PI).contains(&theta0) {
            return Err(Error::Domain(format!("theta0 must lie in [0, pi], got {theta0}")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Domain(format!("tau must be positive, got {tau}")));
        }
        if !(0.0..=1.0).contains(&radius) {
            return Err(Error::Domain(format!("Bloch radius must lie in [0, 1], got {radius}")));
        }
        Ok(self)
    }

    pub fn is_quasi_cyclic(&self) -> bool {
        (self.tau * self.eta / (2.0 * PI) - 1.0).abs() < 1e-12
    }

    /// `H = (η/2)σ_z`, `Γ = √(Λ/2)σ_z`.
    pub fn model(&self) -> LindbladModel {
        let h = pauli::z().mapv(|z| z * (self.eta / 2.0));
        let jumps = if self.lam > 0.0 { vec![pauli::z().mapv(|z| z * (self.lam / 2.0).sqrt())] } else { Vec::new() };
        LindbladModel::new(h, jumps).expect("dephasing model is well formed")
    }

    pub fn initial_state(&self) -> DensityOperator {
        DensityOperator::new(self.density_at(0.0)).expect("Bloch state is a valid density operator")
    }

    /// Exact `ρ(t)`.
    pub fn density_at(&self, t: f64) -> CMatrix {
        let (s, c) = self.theta0.sin_cos();
        let r = self.radius;
        let coh = 0.5 * r * s * (-self.lam * t).exp();
        let off = coh * (-I * self.eta * t).exp();
        ndarray::array![[C64::new(0.5 * (1.0 + r * c), 0.0), off], [off.conj(), C64::new(0.5 * (1.0 - r * c), 0.0)]]
    }

    /// `θ_t` with `tan θ_t = e^{−Λt} tan θ₀`.
    pub fn theta_at(&self, t: f64) -> f64 {
        let (s, c) = self.theta0.sin_cos();
        ((-self.lam * t).exp() * s).atan2(c)
    }

    /// Larger eigenvalue `ω₁(t)`.
    pub fn omega1(&self, t: f64) -> f64 {
        let (s, c) = self.theta0.sin_cos();
        0.5 * (1.0 + self.radius * (c * c + (-2.0 * self.lam * t).exp() * s * s).sqrt())
    }
}

/// Exact spectral path; branch 0 carries the larger eigenvalue `ω₁ ≥ ½`.
pub fn dephasing_qubit_analytic(p: &DephasingQubitParams, grid: &TimeGrid) -> Result<SpectralPath> {
    let times = grid.times();
    let n = times.len();
    let mut weights = Array2::zeros((n, 2));
    let mut frames = Vec::with_capacity(n);
    for (j, &t) in times.iter().enumerate() {
        let w1 = p.omega1(t);
        weights[[j, 0]] = w1;
        weights[[j, 1]] = 1.0 - w1;
        let (sh, ch) = (p.theta_at(t) / 2.0).sin_cos();
        let e0 = (-I * p.eta * t / 2.0).exp();
        let e1 = (I * p.eta * t / 2.0).exp();
        frames.push(ndarray::array![[e0 * ch, -e0 * sh], [e1 * sh, e1 * ch]]);
    }
    SpectralPath::new(times, weights, frames)
}

fn require_closed_form_domain(p: &DephasingQubitParams) -> Result<()> {
    if p.theta0.cos() < 0.0 {
        return Err(Error::Domain(format!("closed form needs cos(theta0) >= 0, got theta0 = {}", p.theta0)));
    }
    if p.radius != 1.0 {
        return Err(Error::Domain("closed form needs a pure initial state".into()));
    }
    if !p.is_quasi_cyclic() {
        return Err(Error::Domain("closed form needs tau = 2*pi/eta".into()));
    }
    Ok(())
}

/// Closed-form geometric phase of one dephased precession period.
///
/// Evaluated as `(η/2Λ)·ln(1 + (q−1)/(1+c))` with `q = √(c² + s²e^{−4πΛ/η})`
/// and `q − 1` formed without cancellation. `Λ = 0` returns `−π(1 − cos θ₀)`
/// and `θ₀ = 0` returns `0`.
pub fn dephasing_phase_closed_form(p: &DephasingQubitParams) -> Result<f64> {
    require_closed_form_domain(p)?;
    let (s, c) = p.theta0.sin_cos();
    if p.lam == 0.0 {
        return Ok(wrap_phase(-PI * (1.0 - c)));
    }
    if p.theta0 == 0.0 {
        return Ok(0.0);
    }
    let x = -4.0 * PI * p.lam / p.eta;
    let q = (c * c + s * s * x.exp()).sqrt();
    let q_minus_1 = s * s * x.exp_m1() / (q + 1.0);
    Ok(wrap_phase(p.eta / (2.0 * p.lam) * (q_minus_1 / (1.0 + c)).ln_1p()))
}

/// First-order expansion `−π(1 − cos θ₀) + π² cos θ₀ sin²θ₀ (Λ/η)`.
pub fn dephasing_phase_first_order(p: &DephasingQubitParams) -> Result<f64> {
    require_closed_form_domain(p)?;
    let (s, c) = p.theta0.sin_cos();
    Ok(wrap_phase(-PI * (1.0 - c) + PI * PI * c * s * s * (p.lam / p.eta)))
}

/// Geometric phase of undamped precession (`Λ = 0`) for any `τ` and Bloch
/// radius, from the per-branch analytic phases.
pub fn unitary_precession_phase(p: &DephasingQubitParams) -> Result<f64> {
    if p.lam != 0.0 {
        return Err(Error::Domain("unitary precession needs lambda = 0".into()));
    }
    let (s, c) = (p.theta0 / 2.0).sin_cos();
    let cos_t = p.theta0.cos();
    let half = p.eta * p.tau / 2.0;
    let w1 = 0.5 * (1.0 + p.radius);
    let z1 = w1 * ((-I * half).exp() * c * c + (I * half).exp() * s * s) * (I * half * cos_t).exp();
    let z2 = (1.0 - w1) * ((-I * half).exp() * s * s + (I * half).exp() * c * c) * (-I * half * cos_t).exp();
    let z = z1 + z2;
    if z.norm() < crate::phase::DEFAULT_PHASE_TOL {
        return Err(Error::UndefinedPhase { magnitude: z.norm() });
    }
    Ok(wrap_phase(z.arg()))
}
