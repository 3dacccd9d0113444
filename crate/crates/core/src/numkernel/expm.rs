use ndarray::Array2;

use super::{identity, CMatrix, C64, ZERO};

// Degree-13 Padé coefficients and the matching scaling threshold on ‖A‖₁
// (Higham 2005).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(a: &CMatrix) -> f64 {
    a.columns().into_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn scaled(a: &CMatrix, s: f64) -> CMatrix {
    a.mapv(|z| z * s)
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
///
/// Non-finite input yields non-finite output; callers validate upstream.
pub fn matrix_exp(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix_exp needs a square matrix");
    let nrm = norm1(a);
    if nrm == 0.0 {
        return identity(n);
    }
    let squarings = if nrm > THETA13 { (nrm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = scaled(a, 0.5_f64.powi(squarings));

    let b = &PADE13;
    let id = identity(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);

    let inner_u = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let u = a.dot(&(a6.dot(&inner_u) + scaled(&a6, b[7]) + scaled(&a4, b[5]) + scaled(&a2, b[3]) + scaled(&id, b[1])));
    let inner_v = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let v = a6.dot(&inner_v) + scaled(&a6, b[6]) + scaled(&a4, b[4]) + scaled(&a2, b[2]) + scaled(&id, b[0]);

    let mut r = solve(&(&v - &u), &(&v + &u));
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    r
}

/// Solve `A X = B` by Gaussian elimination with partial pivoting.
fn solve(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let m = b.ncols();
    let mut lu = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| lu[[i, col]].norm().total_cmp(&lu[[j, col]].norm())).unwrap();
        if piv != col {
            for k in 0..n {
                lu.swap([col, k], [piv, k]);
            }
            for k in 0..m {
                x.swap([col, k], [piv, k]);
            }
        }
        let d = lu[[col, col]];
        for row in col + 1..n {
            let f = lu[[row, col]] / d;
            if f == ZERO {
                continue;
            }
            for k in col..n {
                let t = lu[[col, k]];
                lu[[row, k]] -= f * t;
            }
            for k in 0..m {
                let t = x[[col, k]];
                x[[row, k]] -= f * t;
            }
        }
    }
    let mut out = Array2::from_elem((n, m), ZERO);
    for k in 0..m {
        for row in (0..n).rev() {
            let mut acc: C64 = x[[row, k]];
            for j in row + 1..n {
                acc -= lu[[row, j]] * out[[j, k]];
            }
            out[[row, k]] = acc / lu[[row, row]];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{dagger, max_abs, pauli, unitarity_error, I, ONE};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn random_matrix(n: usize, rng: &mut impl Rng) -> CMatrix {
        Array2::from_shape_fn((n, n), |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn power_series(a: &CMatrix, terms: usize) -> CMatrix {
        let n = a.nrows();
        let mut sum = identity(n);
        let mut term = identity(n);
        for k in 1..terms {
            term = term.dot(a).mapv(|z| z / k as f64);
            sum += &term;
        }
        sum
    }

    #[test]
    fn zero_gives_identity() {
        let z = Array2::from_elem((3, 3), ZERO);
        assert_eq!(matrix_exp(&z), identity(3));
    }

    #[test]
    fn diagonal_exponent() {
        let a = pauli::z().mapv(|z| z * I * FRAC_PI_2);
        let e = matrix_exp(&a);
        let expected = array![[I, ZERO], [ZERO, -I]];
        assert!(max_abs(&(e - expected)) < 1e-15);
    }

    #[test]
    fn anti_hermitian_gives_unitary_and_matches_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 3, 5] {
            let g = random_matrix(n, &mut rng);
            let ah = (&g - &dagger(&g)).mapv(|z| z * 0.5);
            // norm 0.1 against a 30-term series
            let small = ah.mapv(|z| z * (0.1 / max_abs(&ah)));
            let e = matrix_exp(&small);
            assert!(max_abs(&(e.clone() - power_series(&small, 30))) < 1e-12);
            assert!(unitarity_error(&e) < 1e-10);
            let big = ah.mapv(|z| z * (8.0 / max_abs(&ah)));
            assert!(unitarity_error(&matrix_exp(&big)) < 1e-10);
        }
    }

    #[test]
    fn relative_accuracy_large_norm() {
        // exp(A) for A = x·σ_x has closed form cosh(x) I + sinh(x) σ_x
        for x in [0.3_f64, 2.0, 7.5, 10.0] {
            let e = matrix_exp(&pauli::x().mapv(|z| z * x));
            let exact = identity(2).mapv(|z| z * x.cosh()) + pauli::x().mapv(|z| z * x.sinh());
            assert!(max_abs(&(e - &exact)) <= 1e-10 * max_abs(&exact));
        }
    }

    #[test]
    fn inverse_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let a = random_matrix(4, &mut rng);
            let a = a.mapv(|z| z * (5.0 / max_abs(&a)) * 0.25);
            let prod = matrix_exp(&a).dot(&matrix_exp(&a.mapv(|z| -z)));
            assert!(max_abs(&(prod - identity(4))) < 1e-9);
        }
        assert!((matrix_exp(&array![[ONE]])[[0, 0]].re - std::f64::consts::E).abs() < 1e-15);
    }
}
