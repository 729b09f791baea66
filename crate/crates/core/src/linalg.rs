//! Small dense complex linear algebra on top of nalgebra.

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Largest entry of `|M - M^dagger|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `exp(-i t H)` for Hermitian `H`, through its eigendecomposition.
pub fn unitary_exp(h: &CMatrix, t: f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(h);
    let phases = DVector::from_iterator(
        values.len(),
        values.iter().map(|&l| Complex64::from_polar(1.0, -t * l)),
    );
    let scaled = CMatrix::from_fn(vectors.nrows(), vectors.ncols(), |i, j| vectors[(i, j)] * phases[j]);
    &scaled * vectors.adjoint()
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn max_abs_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Sorted (descending) eigen-decomposition of a real symmetric 3x3 matrix.
/// Eigenvector signs are fixed so the first component with magnitude above
/// `1e-12` is positive.
pub fn symmetric3_eigen(m: &Matrix3<f64>) -> ([f64; 3], [[f64; 3]; 3]) {
    let eig = SymmetricEigen::new(*m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut values = [0.0; 3];
    let mut vectors = [[0.0; 3]; 3];
    for (slot, &k) in order.iter().enumerate() {
        values[slot] = eig.eigenvalues[k];
        let mut v = [
            eig.eigenvectors[(0, k)],
            eig.eigenvectors[(1, k)],
            eig.eigenvectors[(2, k)],
        ];
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        vectors[slot] = v;
    }
    (values, vectors)
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * f64::from(k))
}

/// `r! / (a! b! c!)`.
pub fn multinomial3(a: u32, b: u32, c: u32) -> f64 {
    binomial(a + b + c, a) * binomial(b + c, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multinomial_counts() {
        assert_eq!(multinomial3(2, 1, 1), 12.0);
        assert_eq!(multinomial3(4, 0, 0), 1.0);
        assert_eq!(multinomial3(1, 1, 1), 6.0);
    }

    #[test]
    fn unitary_exp_of_pauli_x() {
        // exp(-i t sx) = cos t - i sin t sx
        let sx = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let u = unitary_exp(&sx, 0.3);
        assert!((u[(0, 0)] - c(0.3f64.cos())).norm() < 1e-14);
        assert!((u[(0, 1)] + I * 0.3f64.sin()).norm() < 1e-14);
    }

    #[test]
    fn eigen3_sign_and_order() {
        let m = Matrix3::new(1.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 2.0);
        let (vals, vecs) = symmetric3_eigen(&m);
        assert_eq!(vals, [3.0, 2.0, 1.0]);
        assert!(vecs[0][1] > 0.0 && vecs[1][2] > 0.0 && vecs[2][0] > 0.0);
    }
}
