use ndarray::{Array1, Array2};

use super::{check_square, dagger, hermiticity_error, hermitize, max_abs, CMatrix, C64, HERMITIAN_RTOL, ONE, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Eigh {
    /// Eigenvalues in ascending order.
    pub values: Array1<f64>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: CMatrix,
}

/// Hermitian eigensolver (cyclic complex Jacobi).
///
/// Each eigenvector is rotated so its largest-magnitude component (the first
/// such component on near-ties) is real and nonnegative.
pub fn eigh_hermitian(a: &CMatrix) -> Result<Eigh> {
    let n = check_square(a, "eigh input")?;
    let scale = max_abs(a);
    let deviation = hermiticity_error(a);
    if deviation > HERMITIAN_RTOL * scale {
        return Err(Error::NotHermitian { deviation });
    }
    let mut m = hermitize(a);
    let mut v = Array2::from_diag_elem(n, ONE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = off_diagonal_sq(&m);
        let diag: f64 = (0..n).map(|i| m[[i, i]].re.powi(2)).sum();
        if off <= 1e-32 * (off + diag) || off < f64::MIN_POSITIVE {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[i, i]].re.total_cmp(&m[[j, j]].re));
    let values = order.iter().map(|&i| m[[i, i]].re).collect::<Array1<f64>>();
    let mut vectors = Array2::from_elem((n, n), ZERO);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src).to_owned();
        fix_phase(col.as_slice_mut().unwrap());
        vectors.column_mut(dst).assign(&col);
    }
    Ok(Eigh { values, vectors })
}

fn off_diagonal_sq(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[[i, j]].norm_sqr();
            }
        }
    }
    s
}

/// Annihilate `m[p,q]` with the unitary `J = diag(1, e^{-iφ}) R(θ)` acting on
/// the `(p, q)` plane, where `m[p,q] = r e^{iφ}`.
fn rotate(m: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = m[[p, q]];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = m[[p, p]].re;
    let aqq = m[[q, q]].re;
    let phase = apq / r;
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // J = [[c, s], [-s e^{-iφ}, c e^{-iφ}]] in the (p, q) block.
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    let n = m.nrows();
    // m ← m J
    for k in 0..n {
        let mkp = m[[k, p]];
        let mkq = m[[k, q]];
        m[[k, p]] = mkp * jpp + mkq * jqp;
        m[[k, q]] = mkp * jpq + mkq * jqq;
    }
    // m ← J† m
    for k in 0..n {
        let mpk = m[[p, k]];
        let mqk = m[[q, k]];
        m[[p, k]] = jpp.conj() * mpk + jqp.conj() * mqk;
        m[[q, k]] = jpq.conj() * mpk + jqq.conj() * mqk;
    }
    m[[p, q]] = ZERO;
    m[[q, p]] = ZERO;
    m[[p, p]] = C64::new(m[[p, p]].re, 0.0);
    m[[q, q]] = C64::new(m[[q, q]].re, 0.0);
    // v ← v J
    for k in 0..n {
        let vkp = v[[k, p]];
        let vkq = v[[k, q]];
        v[[k, p]] = vkp * jpp + vkq * jqp;
        v[[k, q]] = vkp * jpq + vkq * jqq;
    }
}

fn fix_phase(col: &mut [C64]) {
    let largest = col.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if largest == 0.0 {
        return;
    }
    let pivot = col.iter().position(|z| z.norm() >= largest * (1.0 - 1e-10)).unwrap();
    let rot = col[pivot].conj() / col[pivot].norm();
    for z in col.iter_mut() {
        *z *= rot;
    }
    col[pivot] = C64::new(col[pivot].re, 0.0);
}

#[allow(dead_code)]
pub(crate) fn reconstruct(e: &Eigh) -> CMatrix {
    let mut scaled = e.vectors.clone();
    for (k, mut col) in scaled.columns_mut().into_iter().enumerate() {
        let w = e.values[k];
        col.mapv_inplace(|z| z * w);
    }
    scaled.dot(&dagger(&e.vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{identity, pauli, unitarity_error};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMatrix {
        let g = Array2::from_shape_fn((n, n), |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        hermitize(&g)
    }

    #[test]
    fn diagonal_input() {
        let a = array![[C64::new(0.2, 0.0), ZERO], [ZERO, C64::new(0.8, 0.0)]];
        let e = eigh_hermitian(&a).unwrap();
        assert_eq!(e.values.to_vec(), vec![0.2, 0.8]);
        assert!(max_abs(&(e.vectors - identity(2))) == 0.0);
    }

    #[test]
    fn half_pauli_x() {
        let a = pauli::x().mapv(|z| z * 0.5);
        let e = eigh_hermitian(&a).unwrap();
        assert!((e.values[0] + 0.5).abs() < 1e-15);
        assert!((e.values[1] - 0.5).abs() < 1e-15);
        let s = 1.0 / 2f64.sqrt();
        // largest component real nonnegative, first index on ties
        assert!((e.vectors[[0, 0]] - C64::new(s, 0.0)).norm() < 1e-15);
        assert!((e.vectors[[1, 0]] - C64::new(-s, 0.0)).norm() < 1e-15);
        assert!((e.vectors[[0, 1]] - C64::new(s, 0.0)).norm() < 1e-15);
        assert!((e.vectors[[1, 1]] - C64::new(s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn random_reconstruction_and_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 3, 4, 7, 16] {
            for _ in 0..10 {
                let a = random_hermitian(n, &mut rng);
                let e = eigh_hermitian(&a).unwrap();
                let norm = max_abs(&a);
                assert!(max_abs(&(reconstruct(&e) - &a)) <= 1e-11 * norm.max(1.0));
                assert!(unitarity_error(&e.vectors) <= 1e-11);
                for k in 0..n {
                    let v = e.vectors.column(k);
                    let r = a.dot(&v) - v.mapv(|z| z * e.values[k]);
                    assert!(r.iter().all(|z| z.norm() <= 1e-11 * norm));
                }
                assert!(e.values.windows(2).into_iter().all(|w| w[0] <= w[1]));
                let tr: f64 = (0..n).map(|i| a[[i, i]].re).sum();
                assert!((e.values.sum() - tr).abs() <= 1e-11 * norm.max(1.0));
                for k in 0..n {
                    let col = e.vectors.column(k);
                    let big = col.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
                    let piv = col.iter().find(|z| z.norm() >= big * (1.0 - 1e-10)).unwrap();
                    assert!(piv.im == 0.0 && piv.re >= 0.0);
                }
            }
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = array![[ONE, ONE], [ZERO, ONE]];
        assert!(matches!(eigh_hermitian(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn degenerate_spectrum() {
        let a = identity(3).mapv(|z| z / 3.0);
        let e = eigh_hermitian(&a).unwrap();
        assert!(e.values.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-16));
        assert!(unitarity_error(&e.vectors) < 1e-15);
    }
}
