//! Purifications and the unitaries that realize a mixed-state path.
//!
//! A path `ρ(t) = Σ_k ω_k(t)|φ_k(t)⟩⟨φ_k(t)|` is lifted to the pure state
//!
//! ```text
//! |Ψ(t)⟩ = Σ_k √ω_k(t) |φ_k(t)⟩ ⊗ |a_k⟩
//! ```
//!
//! on system ⊗ ancilla (ancilla dimension equal to the system's, fixed
//! computational basis `|a_k⟩`). Product-space vectors use the composite
//! index `m·N + l`, system first. The evolution `|Ψ(t)⟩ = U_sa(t)|Ψ(0)⟩` is
//! assembled from a system unitary `V(t)` carrying the eigenvectors and an
//! ancilla-coupled unitary `W(t)` carrying the weights.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::numkernel::{
    dagger, identity, kron, max_abs, outer, partial_trace_ancilla, unitarity_error, CMatrix, CVector, C64, I, ONE, ZERO,
};
use crate::phase::{GaugeTransform, DEFAULT_PHASE_TOL};
use crate::spectral::{validate_times, SpectralPath};

/// Time-ordered unitaries on a common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryPath {
    times: Vec<f64>,
    unitaries: Vec<CMatrix>,
}

impl UnitaryPath {
    /// Requires `U_0 = I` within `1e-12` and unitarity within `1e-10`.
    pub fn new(times: Vec<f64>, unitaries: Vec<CMatrix>) -> Result<Self> {
        let path = Self::unanchored(times, unitaries)?;
        let dev = max_abs(&(&path.unitaries[0] - &identity(path.dim())));
        if dev > 1e-12 {
            return Err(Error::Contract(format!("unitary path must start at the identity (deviation {dev:.3e})")));
        }
        Ok(path)
    }

    /// Like [`UnitaryPath::new`] without the `U_0 = I` requirement (for `W(t)`).
    pub fn unanchored(times: Vec<f64>, unitaries: Vec<CMatrix>) -> Result<Self> {
        validate_times(&times)?;
        if times.len() != unitaries.len() {
            return Err(Error::Dimension(format!("{} times but {} unitaries", times.len(), unitaries.len())));
        }
        let n = unitaries[0].nrows();
        for (j, u) in unitaries.iter().enumerate() {
            if u.dim() != (n, n) {
                return Err(Error::Dimension(format!("unitary {j} is not {n}x{n}")));
            }
            let err = unitarity_error(u);
            if !(err <= 1e-10) {
                return Err(Error::Contract(format!("sample {j} is not unitary (error {err:.3e})")));
            }
        }
        Ok(Self { times, unitaries })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.unitaries[0].nrows()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn unitaries(&self) -> &[CMatrix] {
        &self.unitaries
    }

    pub fn at(&self, j: usize) -> &CMatrix {
        &self.unitaries[j]
    }

    pub fn last(&self) -> &CMatrix {
        self.unitaries.last().unwrap()
    }
}

/// Purified state vectors `|Ψ(t_j)⟩` of dimension `N²`.
#[derive(Clone, Debug, PartialEq)]
pub struct PurifiedPath {
    times: Vec<f64>,
    states: Vec<CVector>,
    system_dim: usize,
}

impl PurifiedPath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[CVector] {
        &self.states
    }

    pub fn state(&self, j: usize) -> &CVector {
        &self.states[j]
    }

    /// `⟨Ψ(t_a)|Ψ(t_b)⟩`.
    pub fn overlap(&self, a: usize, b: usize) -> C64 {
        crate::numkernel::inner(&self.states[a], &self.states[b])
    }

    /// `Tr_a |Ψ(t_j)⟩⟨Ψ(t_j)|`.
    pub fn reduced(&self, j: usize) -> CMatrix {
        let n = self.system_dim;
        partial_trace_ancilla(&outer(&self.states[j]), n, n).expect("purified dimension is N*N")
    }

    /// Normalized fringe `|e^{iχ}Ψ(0) + Ψ(τ)|²/2` at each shift.
    pub fn fringe(&self, chi_grid: &[f64]) -> Vec<(f64, f64)> {
        let first = &self.states[0];
        let last = self.states.last().unwrap();
        chi_grid
            .iter()
            .map(|&chi| {
                let ph = (I * chi).exp();
                let sum: f64 = first.iter().zip(last).map(|(a, b)| (ph * a + b).norm_sqr()).sum();
                (chi, sum / 2.0)
            })
            .collect()
    }

    /// Relative phase and visibility from `⟨Ψ(0)|Ψ(τ)⟩`; `None` when it vanishes.
    pub fn interference(&self) -> (Option<f64>, f64) {
        let z = self.overlap(0, self.len() - 1);
        let alpha = (z.norm() >= DEFAULT_PHASE_TOL).then(|| crate::numkernel::wrap_phase(z.arg()));
        (alpha, z.norm())
    }
}

/// `|Ψ(t_j)⟩ = Σ_k √ω_k(t_j) |φ_k(t_j)⟩ ⊗ |a_k⟩`.
pub fn purify_path(spectral: &SpectralPath) -> Result<PurifiedPath> {
    let n = spectral.dim();
    let states = (0..spectral.len())
        .map(|j| {
            let w = spectral.weights_at(j);
            if let Some(bad) = w.iter().find(|&&x| x < -1e-10) {
                return Err(Error::Contract(format!("negative weight {bad:.3e} at sample {j}")));
            }
            let root: Vec<f64> = w.iter().map(|&x| x.max(0.0).sqrt()).collect();
            let frame = spectral.frame(j);
            Ok(Array1::from_shape_fn(n * n, |idx| {
                let (m, k) = (idx / n, idx % n);
                root[k] * frame[[m, k]]
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PurifiedPath { times: spectral.times().to_vec(), states, system_dim: n })
}

/// `V(t_j) = Σ_k |φ_k(t_j)⟩⟨φ_k(0)|`.
pub fn build_connecting_unitary(spectral: &SpectralPath) -> Result<UnitaryPath> {
    let start = dagger(spectral.frame(0));
    let unitaries = spectral.frames().iter().map(|f| f.dot(&start)).collect();
    UnitaryPath::new(spectral.times().to_vec(), unitaries)
}

fn check_basis(v: &UnitaryPath, basis: &CMatrix) -> Result<()> {
    let n = v.dim();
    if basis.dim() != (n, n) {
        return Err(Error::Dimension(format!("basis is {:?}, path is {n}x{n}", basis.dim())));
    }
    let err = unitarity_error(basis);
    if !(err <= 1e-10) {
        return Err(Error::Contract(format!("basis is not orthonormal (error {err:.3e})")));
    }
    Ok(())
}

/// `B diag(e^{i·sign·θ_k}) B†`.
fn diagonal_in(basis: &CMatrix, theta: ndarray::ArrayView1<'_, f64>, sign: f64) -> CMatrix {
    let mut scaled = basis.clone();
    for (k, mut col) in scaled.columns_mut().into_iter().enumerate() {
        let ph = (I * sign * theta[k]).exp();
        col.mapv_inplace(|z| z * ph);
    }
    scaled.dot(&dagger(basis))
}

/// `θ_k(t_j) = −Σ_{i<j} arg⟨φ_k(0)|V_i†V_{i+1}|φ_k(0)⟩`.
fn transport_phases(v: &UnitaryPath, basis: &CMatrix) -> GaugeTransform {
    let n = v.dim();
    let mut theta = Array2::zeros((v.len(), n));
    for j in 0..v.len() - 1 {
        let local = dagger(&v.at(j).dot(basis)).dot(&v.at(j + 1).dot(basis));
        for k in 0..n {
            theta[[j + 1, k]] = theta[[j, k]] - local[[k, k]].arg();
        }
    }
    GaugeTransform::new(theta).expect("first row is zero")
}

/// Gauge phases making `V` parallel transporting on `basis`, and the
/// transported path `V∥(t_j) = V(t_j) Σ_k e^{iθ_k(t_j)}|φ_k(0)⟩⟨φ_k(0)|`.
///
/// The phases cancel the per-step overlap arguments, so every
/// `⟨φ_k(0)|V∥(t_j)†V∥(t_{j+1})|φ_k(0)⟩` is real and nonnegative.
pub fn parallel_transport_correction(v: &UnitaryPath, basis: &CMatrix) -> Result<(GaugeTransform, UnitaryPath)> {
    check_basis(v, basis)?;
    let theta = transport_phases(v, basis);
    let unitaries =
        v.unitaries().iter().enumerate().map(|(j, u)| u.dot(&diagonal_in(basis, theta.theta().row(j), 1.0))).collect();
    Ok((theta, UnitaryPath::new(v.times().to_vec(), unitaries)?))
}

/// `max_{j,k} |⟨φ_k(0)|U_j†(U_{j+1} − U_j)|φ_k(0)⟩| / Δt_j`.
pub fn transport_residual(v: &UnitaryPath, basis: &CMatrix) -> Result<f64> {
    check_basis(v, basis)?;
    if v.len() < 2 {
        return Err(Error::Contract("transport residual needs at least 2 samples".into()));
    }
    let t = v.times();
    let mut worst = 0.0_f64;
    for j in 0..v.len() - 1 {
        let left = dagger(&v.at(j).dot(basis));
        let diff = (v.at(j + 1) - v.at(j)).dot(basis);
        let local = left.dot(&diff);
        for k in 0..v.dim() {
            worst = worst.max(local[[k, k]].norm() / (t[j + 1] - t[j]));
        }
    }
    Ok(worst)
}

/// `V_c(t_j) = Σ_k e^{−iθ_k(t_j)}|φ_k(0)⟩⟨φ_k(0)|`, so that `V V_c† = V∥`.
pub fn compensating_unitary(v: &UnitaryPath, basis: &CMatrix) -> Result<UnitaryPath> {
    check_basis(v, basis)?;
    let theta = transport_phases(v, basis);
    let unitaries = (0..v.len()).map(|j| diagonal_in(basis, theta.theta().row(j), -1.0)).collect();
    UnitaryPath::new(v.times().to_vec(), unitaries)
}

/// Spectral path whose frames are `U(t_j)·basis`, weights unchanged.
pub fn evolve_frames(spectral: &SpectralPath, u: &UnitaryPath, basis: &CMatrix) -> Result<SpectralPath> {
    if u.len() != spectral.len() || u.dim() != spectral.dim() {
        return Err(Error::Dimension("unitary path and spectral path grids differ".into()));
    }
    let frames = u.unitaries().iter().map(|m| m.dot(basis)).collect();
    SpectralPath::new(spectral.times().to_vec(), spectral.weights().clone(), frames)
}

/// Rotation in the plane of unit vectors `e` and `x` taking `e` to `x`.
///
/// With `x = c e + s f` (`f ⟂ e`, `s ≥ 0`):
/// `R = I + (c−1)(ee† + ff†) + s(fe† − ef†)`. Continuous in `x` away from
/// `x = −e`; the identity when `x = e`.
fn plane_rotation(e_index: usize, x: &CVector) -> CMatrix {
    let dim = x.len();
    let c = x[e_index];
    let mut f = x.clone();
    f[e_index] -= c;
    let s = f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut r = identity(dim);
    if s == 0.0 {
        // x = e·c with |c| = 1
        r[[e_index, e_index]] = c;
        return r;
    }
    f.mapv_inplace(|z| z / s);
    let cm1 = c - ONE;
    for a in 0..dim {
        for b in 0..dim {
            let ea = if a == e_index { ONE } else { ZERO };
            let eb = if b == e_index { ONE } else { ZERO };
            r[[a, b]] += cm1 * (ea * eb + f[a] * f[b].conj()) + s * (f[a] * eb - ea * f[b].conj());
        }
    }
    r
}

/// `W(t_j)` on system ⊗ ancilla, returned in the computational basis.
///
/// In the basis `|φ_k(0)⟩ ⊗ |a_l⟩` the `(k₀, l₀)` column is `δ_{kl}√ω_k(t_j)`;
/// the remaining columns are completed by the plane rotation taking that
/// basis vector to the target column.
pub fn build_w_path(spectral: &SpectralPath, designated: (usize, usize)) -> Result<UnitaryPath> {
    let eigen = build_w_path_eigenbasis(spectral, designated)?;
    let lift = kron(spectral.frame(0), &identity(spectral.dim()));
    let lift_dag = dagger(&lift);
    let unitaries = eigen.unitaries().iter().map(|w| lift.dot(w).dot(&lift_dag)).collect();
    UnitaryPath::unanchored(spectral.times().to_vec(), unitaries)
}

/// `W(t_j)` expressed in the `|φ_k(0)⟩ ⊗ |a_l⟩` basis.
pub fn build_w_path_eigenbasis(spectral: &SpectralPath, designated: (usize, usize)) -> Result<UnitaryPath> {
    let n = spectral.dim();
    let (k0, l0) = designated;
    if k0 >= n || l0 >= n {
        return Err(Error::Contract(format!("designated column ({k0}, {l0}) out of range for N = {n}")));
    }
    let e_index = k0 * n + l0;
    let unitaries = (0..spectral.len())
        .map(|j| {
            let w = spectral.weights_at(j);
            let norm: f64 = w.iter().map(|x| x.max(0.0)).sum();
            if !((norm - 1.0).abs() <= 1e-8) {
                return Err(Error::Contract(format!("target column at sample {j} has squared norm {norm}")));
            }
            let mut x = Array1::from_elem(n * n, ZERO);
            for k in 0..n {
                x[k * n + k] = C64::new(w[k].max(0.0).sqrt(), 0.0);
            }
            let scale = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            x.mapv_inplace(|z| z / scale);
            Ok(plane_rotation(e_index, &x))
        })
        .collect::<Result<Vec<_>>>()?;
    UnitaryPath::unanchored(spectral.times().to_vec(), unitaries)
}

/// `U_sa(t_j) = (V(t_j) ⊗ I) W(t_j) W(0)†`.
pub fn build_usa(v: &UnitaryPath, w: &UnitaryPath) -> Result<UnitaryPath> {
    let n = v.dim();
    if w.dim() != n * n || w.len() != v.len() {
        return Err(Error::Contract(format!(
            "V is {n}-dimensional with {} samples, W is {}-dimensional with {} samples",
            v.len(),
            w.dim(),
            w.len()
        )));
    }
    let id = identity(n);
    let w0_dag = dagger(w.at(0));
    let unitaries = (0..v.len()).map(|j| kron(v.at(j), &id).dot(w.at(j)).dot(&w0_dag)).collect();
    let mut path = UnitaryPath::unanchored(v.times().to_vec(), unitaries)?;
    // W(0)W(0)† is the identity up to rounding; store it exactly
    path.unitaries[0] = kron(v.at(0), &id);
    UnitaryPath::new(path.times, path.unitaries)
}
