//! Built-in four-level path with a two-fold degenerate eigenvalue.
//!
//! `ρ(t) = U(t) diag(ω_a(t), ¼, ¼, ω_c(t)) U(t)†` with
//! `U(t) = exp(−iG₁t) exp(−iG₂t)` for two fixed non-commuting Hermitian
//! generators, `ω_a = 0.35 + 0.05 cos t` and `ω_c = 0.15 − 0.05 cos t`.
//! The degenerate pair is carried through a genuinely non-abelian
//! holonomy while staying at least `0.05` away from the other levels.

use ndarray::{array, Array2};

use crate::error::Result;
use crate::lindblad::TimeGrid;
use crate::numkernel::{dagger, matrix_exp, CMatrix, C64};
use crate::spectral::StatePath;

pub const DEMO_TAU: f64 = 1.5;
pub const DEMO_DIM: usize = 4;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Debug)]
pub struct DegenerateDemo {
    pub g1: CMatrix,
    pub g2: CMatrix,
}

impl Default for DegenerateDemo {
    fn default() -> Self {
        let g1 = array![
            [c(0.3, 0.0), c(0.5, 0.0), c(0.0, 0.2), c(0.0, 0.0)],
            [c(0.5, 0.0), c(-0.2, 0.0), c(0.4, 0.0), c(0.3, 0.0)],
            [c(0.0, -0.2), c(0.4, 0.0), c(0.1, 0.0), c(0.6, 0.0)],
            [c(0.0, 0.0), c(0.3, 0.0), c(0.6, 0.0), c(-0.4, 0.0)],
        ];
        let g2 = array![
            [c(0.2, 0.0), c(0.0, 0.1), c(0.0, 0.0), c(0.3, 0.0)],
            [c(0.0, -0.1), c(-0.3, 0.0), c(0.6, 0.2), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.6, -0.2), c(0.4, 0.0), c(0.0, 0.25)],
            [c(0.3, 0.0), c(0.0, 0.0), c(0.0, -0.25), c(-0.1, 0.0)],
        ];
        Self { g1, g2 }
    }
}

impl DegenerateDemo {
    /// `exp(−iG t)`.
    pub fn propagator(g: &CMatrix, t: f64) -> CMatrix {
        matrix_exp(&g.mapv(|z| z * c(0.0, -t)))
    }

    /// `U(t) = exp(−iG₁t) exp(−iG₂t)`.
    pub fn unitary(&self, t: f64) -> CMatrix {
        Self::propagator(&self.g1, t).dot(&Self::propagator(&self.g2, t))
    }

    /// Eigenvalues `(ω_a, ω_b, ω_b, ω_c)` in the rotating frame.
    pub fn weights(t: f64) -> [f64; 4] {
        [0.35 + 0.05 * t.cos(), 0.25, 0.25, 0.15 - 0.05 * t.cos()]
    }

    pub fn density(&self, t: f64) -> CMatrix {
        let u = self.unitary(t);
        let w = Self::weights(t);
        let d = Array2::from_shape_fn((DEMO_DIM, DEMO_DIM), |(i, j)| if i == j { c(w[i], 0.0) } else { c(0.0, 0.0) });
        u.dot(&d).dot(&dagger(&u))
    }

    pub fn state_path(&self, grid: &TimeGrid) -> Result<StatePath> {
        let times = grid.times();
        let states = times.iter().map(|&t| self.density(t)).collect();
        StatePath::new(times, states)
    }
}
