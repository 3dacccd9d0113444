//! Small dense complex linear algebra.
//!
//! Everything here targets the tiny matrices that show up in few-level
//! quantum systems (dimension 16 or less is the design envelope). All
//! functions are pure and allocate their outputs.

mod eigh;
mod expm;

use ndarray::{Array1, Array2};
pub use num_complex::Complex64 as C64;

pub use self::eigh::{eigh_hermitian, Eigh};
pub use self::expm::matrix_exp;

use crate::error::{Error, Result};

pub type CMatrix = Array2<C64>;
pub type CVector = Array1<C64>;

/// Relative tolerance used by [`eigh_hermitian`] to accept a matrix as Hermitian.
pub const HERMITIAN_RTOL: f64 = 1e-12;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn identity(n: usize) -> CMatrix {
    Array2::from_diag_elem(n, ONE)
}

/// Conjugate transpose.
pub fn dagger(a: &CMatrix) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

/// Largest entry modulus.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diag().sum()
}

/// `‖A − A†‖_max`.
pub fn hermiticity_error(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

/// `(A + A†) / 2`.
pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + &dagger(a)).mapv(|z| z * 0.5)
}

/// `‖U†U − I‖_max`.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let g = dagger(u).dot(u);
    max_abs(&(g - identity(u.nrows())))
}

/// Kronecker product `A ⊗ B`, with `A` as the leading (slow) index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::from_elem((ar * br, ac * bc), ZERO);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// `⟨u|v⟩`, conjugating the left argument.
pub fn inner<'a, 'b>(u: impl IntoIterator<Item = &'a C64>, v: impl IntoIterator<Item = &'b C64>) -> C64 {
    u.into_iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub(crate) fn check_square(a: &CMatrix, what: &str) -> Result<usize> {
    let (r, c) = a.dim();
    if r != c || r == 0 {
        return Err(Error::Dimension(format!("{what} must be square and nonempty, got {r}x{c}")));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Contract(format!("{what} has non-finite entries")));
    }
    Ok(r)
}

/// Unitary polar factor `M (M†M)^{-1/2}`, the unitary closest to `M` in
/// Frobenius norm.
///
/// Fails when the smallest singular value is below `1e-12` times the largest.
pub fn polar_unitary(m: &CMatrix) -> Result<CMatrix> {
    let n = check_square(m, "polar_unitary input")?;
    if n == 1 {
        let z = m[[0, 0]];
        if z.norm() == 0.0 {
            return Err(Error::Singular { ratio: 0.0 });
        }
        return Ok(Array2::from_elem((1, 1), z / z.norm()));
    }
    let gram = hermitize(&dagger(m).dot(m));
    let eig = eigh_hermitian(&gram)?;
    let largest = eig.values[n - 1].max(0.0).sqrt();
    let smallest = eig.values[0].max(0.0).sqrt();
    if largest == 0.0 || smallest <= 1e-12 * largest {
        let ratio = if largest == 0.0 { 0.0 } else { smallest / largest };
        return Err(Error::Singular { ratio });
    }
    // (M†M)^{-1/2} = V diag(σ^{-1}) V†
    let mut scaled = eig.vectors.clone();
    for (k, mut col) in scaled.columns_mut().into_iter().enumerate() {
        let s = 1.0 / eig.values[k].sqrt();
        col.mapv_inplace(|z| z * s);
    }
    let inv_sqrt = scaled.dot(&dagger(&eig.vectors));
    Ok(m.dot(&inv_sqrt))
}

/// Trace out the ancilla (second tensor factor) of a `(n·k)×(n·k)` operator.
///
/// `(Tr_a ρ)_{mn} = Σ_l ρ[(m,l),(n,l)]` with composite index `m·k + l`.
pub fn partial_trace_ancilla(rho_sa: &CMatrix, n: usize, k: usize) -> Result<CMatrix> {
    let dim = check_square(rho_sa, "partial_trace_ancilla input")?;
    if n == 0 || k == 0 || n * k != dim {
        return Err(Error::Dimension(format!("cannot factor dimension {dim} as {n} (system) x {k} (ancilla)")));
    }
    let mut out = Array2::from_elem((n, n), ZERO);
    for a in 0..n {
        for b in 0..n {
            out[[a, b]] = (0..k).map(|l| rho_sa[[a * k + l, b * k + l]]).sum();
        }
    }
    Ok(out)
}

/// `|ψ⟩⟨ψ|`.
pub fn outer(psi: &CVector) -> CMatrix {
    let n = psi.len();
    Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj())
}

/// Wrap an angle onto `(−π, π]`; values within `1e-10` of `−π` report `+π`.
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::PI;
    const TIE: f64 = 1e-10;
    let mut y = x % (2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    } else if y <= -PI {
        y += 2.0 * PI;
    }
    if y <= -PI + TIE {
        y += 2.0 * PI;
    }
    y
}

/// Distance between two angles on the circle.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

/// Pauli matrices, for convenience.
pub mod pauli {
    use super::*;

    pub fn x() -> CMatrix {
        ndarray::array![[ZERO, ONE], [ONE, ZERO]]
    }
    pub fn y() -> CMatrix {
        ndarray::array![[ZERO, -I], [I, ZERO]]
    }
    pub fn z() -> CMatrix {
        ndarray::array![[ONE, ZERO], [ZERO, -ONE]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn polar_of_unitary_is_itself() {
        let u = matrix_exp(&pauli::y().mapv(|z| z * c(0.0, 0.3)));
        let p = polar_unitary(&u).unwrap();
        assert!(max_abs(&(p - &u)) < 1e-12);
    }

    #[test]
    fn polar_of_positive_diagonal_is_identity() {
        let m = array![[c(2.0, 0.0), ZERO], [ZERO, c(3.0, 0.0)]];
        let p = polar_unitary(&m).unwrap();
        assert!(max_abs(&(p - identity(2))) < 1e-14);
    }

    #[test]
    fn polar_rejects_singular() {
        let m = array![[ONE, ONE], [ONE, ONE]];
        assert!(matches!(polar_unitary(&m), Err(Error::Singular { .. })));
        let z = Array2::from_elem((1, 1), ZERO);
        assert!(polar_unitary(&z).is_err());
    }

    #[test]
    fn partial_trace_of_product_state() {
        let psi = array![c(0.6, 0.0), c(0.0, 0.8)];
        let anc = array![ONE, ZERO];
        let prod: CVector = (0..4).map(|i| psi[i / 2] * anc[i % 2]).collect();
        let red = partial_trace_ancilla(&outer(&prod), 2, 2).unwrap();
        assert!(max_abs(&(red - outer(&psi))) < 1e-15);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let s = 1.0 / 2f64.sqrt();
        let bell = array![c(s, 0.0), ZERO, ZERO, c(s, 0.0)];
        let red = partial_trace_ancilla(&outer(&bell), 2, 2).unwrap();
        assert!(max_abs(&(red - identity(2).mapv(|z| z * 0.5))) < 1e-15);
    }

    #[test]
    fn partial_trace_dimension_error() {
        let m = identity(6);
        assert!(matches!(partial_trace_ancilla(&m, 4, 2), Err(Error::Dimension(_))));
        assert!(partial_trace_ancilla(&m, 3, 2).is_ok());
    }

    #[test]
    fn wrap_phase_tie_rule() {
        assert_eq!(wrap_phase(-PI), PI);
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(-0.5) + 0.5).abs() < 1e-15);
        assert!((wrap_phase(2.0 * PI + 0.25) - 0.25).abs() < 1e-14);
        assert!(wrap_phase(-PI + 1e-12) > PI - 1e-9);
        assert!(wrap_phase(-PI + 1e-6) < -PI + 1e-3);
    }

    #[test]
    fn kron_of_identities() {
        let k = kron(&identity(2), &identity(3));
        assert!(max_abs(&(k - identity(6))) == 0.0);
        let k = kron(&pauli::x(), &pauli::z());
        assert_eq!(k[[0, 2]], ONE);
        assert_eq!(k[[1, 3]], -ONE);
    }
}
