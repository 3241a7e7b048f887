//! Small dense Hermitian helpers on `nalgebra` matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = if m.nrows() == 1 {
        vec![m[(0, 0)].re]
    } else {
        m.clone().symmetric_eigenvalues().iter().copied().collect()
    };
    ev.sort_by(f64::total_cmp);
    ev
}

/// `(A + A*) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Largest entry modulus of `A - A*`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Parses a complex matrix from rows of `[re, im]` pairs.
pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Option<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return None;
    }
    Some(CMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

pub fn to_pairs(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pauli_y_spectrum() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[ZERO, Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), ZERO],
        );
        let ev = hermitian_eigenvalues(&m);
        assert_abs_diff_eq!(ev[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[1], 1.0, epsilon = 1e-14);
        assert_eq!(hermiticity_defect(&m), 0.0);
    }

    #[test]
    fn pairs_roundtrip() {
        let m = CMatrix::from_fn(3, 3, |i, j| Complex64::new(i as f64, j as f64 * 0.5));
        assert_eq!(from_pairs(&to_pairs(&m)).unwrap(), m);
        assert!(from_pairs(&[vec![[1.0, 0.0]], vec![]]).is_none());
    }
}
