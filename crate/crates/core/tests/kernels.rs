//! Linear-algebra kernels against nalgebra.

use geophase::numkernel::{eigh_hermitian, matrix_exp, max_abs, polar_unitary, unitarity_error, CMatrix, C64};
use nalgebra::DMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    Array2::from_shape_fn((n, n), |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn to_na(m: &CMatrix) -> DMatrix<C64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[[r, c]])
}

fn from_na(m: &DMatrix<C64>) -> CMatrix {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(r, c)| m[(r, c)])
}

#[test]
fn polar_factor_matches_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=6 {
        for _ in 0..20 {
            let m = random(&mut rng, n);
            let svd = to_na(&m).svd(true, true);
            let oracle = from_na(&(svd.u.unwrap() * svd.v_t.unwrap()));
            let got = polar_unitary(&m).unwrap();
            assert!(max_abs(&(&got - &oracle)) < 1e-10, "n = {n}");
            assert!(unitarity_error(&got) < 1e-12);
        }
    }
}

#[test]
fn eigenvalues_match_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 1..=8 {
        let a = random(&mut rng, n);
        let h = (&a + &a.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
        let mut oracle: Vec<f64> = to_na(&h).symmetric_eigenvalues().iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        let e = eigh_hermitian(&h).unwrap();
        for (x, y) in e.values.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
        let recon = e
            .vectors
            .dot(&Array2::from_diag(&e.values.mapv(|v| C64::new(v, 0.0))))
            .dot(&e.vectors.t().mapv(|z| z.conj()));
        assert!(max_abs(&(recon - &h)) < 1e-12);
    }
}

#[test]
fn exponential_matches_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..=6 {
        for scale in [1e-3, 0.5, 4.0, 30.0] {
            let a = random(&mut rng, n).mapv(|z| z * scale);
            let oracle = from_na(&to_na(&a).exp());
            let got = matrix_exp(&a);
            let size = max_abs(&oracle).max(1.0);
            assert!(max_abs(&(got - &oracle)) < 1e-11 * size, "n = {n}, scale = {scale}");
        }
    }
}
